#pragma once

#include <stdexcept>
#include <string>

namespace qunits {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input files (schema, data, definitions, logs, documents, gold map).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};

// Violated invariants: duplicate keys, dangling foreign keys, invalid
// definitions, inconsistent configuration.
class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& what) : Error(what) {}
};

// Lookup of something that does not exist (anchor value, table, file).
class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& what) : Error(what) {}
};

}  // namespace qunits
