#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qunits/error.hpp"
#include "qunits/text.hpp"

namespace qunits {

enum class ValueKind { Integer, Text };

struct ColumnDef {
  std::string name;
  ValueKind kind = ValueKind::Text;
};

struct TableDef {
  std::string name;
  std::vector<ColumnDef> columns;
  std::string primary_key;

  std::size_t column_index(const std::string& column) const;
  bool has_column(const std::string& column) const;
  const ColumnDef& column(const std::string& name) const;
  std::size_t pk_index() const { return column_index(primary_key); }
};

struct FkEdge {
  std::string from_table;   // referencing side
  std::string from_column;
  std::string to_table;     // referenced side (primary key)
  std::string to_column;
};

// A schema element: either table.column or a bare table.
struct SchemaElement {
  std::string table;
  std::string column;  // empty for a bare table reference

  bool is_table() const { return column.empty(); }
  std::string str() const { return column.empty() ? table : table + "." + column; }

  friend bool operator==(const SchemaElement& a, const SchemaElement& b) {
    return a.table == b.table && a.column == b.column;
  }
  friend bool operator<(const SchemaElement& a, const SchemaElement& b) {
    return a.table != b.table ? a.table < b.table : a.column < b.column;
  }
};

class Schema {
 public:
  // Line-oriented format: `table <name>`, `col <name> <int|text> [pk]`,
  // `fk <t.c> -> <t.c>`, `#` comments.
  static Schema parse(const std::string& text);

  const std::vector<TableDef>& tables() const { return tables_; }
  const std::vector<FkEdge>& fk_edges() const { return edges_; }

  bool has_table(const std::string& name) const;
  const TableDef& table(const std::string& name) const;
  std::size_t table_index(const std::string& name) const;

  // Number of FK edges incident to the table, in either direction.
  int fk_degree(const std::string& table) const;

  // Tables reachable over one FK edge, deduplicated, in name order.
  std::vector<std::string> neighbors(const std::string& table) const;

  // A table that references nothing is an entity table; tables with outgoing
  // FK edges (cast, genre, ...) exist to relate or annotate entities.
  bool is_entity_table(const std::string& table) const;

  // FK edge connecting exactly these column pairs, in either orientation.
  const FkEdge* find_edge(const std::string& t1, const std::string& c1,
                          const std::string& t2, const std::string& c2) const;
  // Any FK edge between the two tables (first in declaration order).
  const FkEdge* edge_between(const std::string& t1, const std::string& t2) const;

 private:
  void validate() const;

  std::vector<TableDef> tables_;
  std::vector<FkEdge> edges_;
};

using Row = std::vector<std::string>;

class Dataset {
 public:
  explicit Dataset(Schema schema);

  // Tab-separated values with a header row naming the columns in order.
  // Column-count and primary-key violations are reported immediately;
  // referential integrity is checked by finalize().
  void ingest_table(const std::string& table, const std::string& rows_text);

  void finalize();
  bool finalized() const { return finalized_; }

  const Schema& schema() const { return schema_; }
  const std::vector<Row>& rows(const std::string& table) const;
  std::size_t cardinality(const std::string& table) const;
  std::size_t total_rows() const;

  // Typed comparison for ordering rows: integer columns compare numerically.
  static int compare_values(ValueKind kind, const std::string& a, const std::string& b);

 private:
  Schema schema_;
  std::vector<std::vector<Row>> rows_;
  bool finalized_ = false;
};

// Loads `<dir>/<table>.tsv` for every table in the schema and finalizes.
Dataset load_dataset(const Schema& schema, const std::string& data_dir);

struct ValueMatch {
  std::size_t begin = 0;  // half-open token interval [begin, end)
  std::size_t end = 0;
  SchemaElement element;
  std::string matched_text;
};

// Token sequences of every text-column value and every table name, mapped to
// the schema elements they belong to. Internal integer keys are not indexed;
// they are never what a person searches for.
class ValueIndex {
 public:
  static ValueIndex build(const Dataset& dataset);

  const std::vector<SchemaElement>* lookup(const std::vector<std::string>& tokens,
                                           std::size_t begin, std::size_t len) const;
  std::size_t max_key_length() const { return max_key_length_; }
  std::size_t size() const { return entries_.size(); }
  const std::map<std::vector<std::string>, std::vector<SchemaElement>>& entries() const {
    return entries_;
  }
  const Schema* schema() const { return schema_; }

 private:
  std::map<std::vector<std::string>, std::vector<SchemaElement>> entries_;
  std::size_t max_key_length_ = 0;
  const Schema* schema_ = nullptr;
};

// Non-overlapping matches, leftmost-longest. At equal length values beat bare
// table names, and elements of entity tables beat relationship-table ones.
std::vector<ValueMatch> match_values(const std::vector<std::string>& tokens,
                                     const ValueIndex& index);

// Text column with the highest distinct-value ratio; ties break by name.
// Integer columns never qualify.
std::optional<std::string> representative_text_column(const Dataset& dataset,
                                                      const std::string& table);

}  // namespace qunits
