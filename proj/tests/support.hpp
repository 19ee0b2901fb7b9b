#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "qunits/store.hpp"

#ifndef QUNITS_FIXTURE_DIR
#define QUNITS_FIXTURE_DIR "fixtures"
#endif

namespace qunits::test {

inline std::string fixture_dir() { return std::string(QUNITS_FIXTURE_DIR) + "/mini-imdb"; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qunits::NotFoundError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline Schema fixture_schema() {
  return Schema::parse(read_file(fixture_dir() + "/schema.txt"));
}

inline Dataset fixture_dataset() {
  return load_dataset(fixture_schema(), fixture_dir());
}

}  // namespace qunits::test
