#include "qunits/store.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace qunits {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> parts;
  std::istringstream in(line);
  std::string word;
  while (in >> word) parts.push_back(word);
  return parts;
}

// "table.column" -> (table, column)
std::pair<std::string, std::string> parse_column_ref(const std::string& ref,
                                                     std::size_t line_no) {
  auto dot = ref.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == ref.size()) {
    throw ParseError("line " + std::to_string(line_no) +
                     ": expected table.column, got '" + ref + "'");
  }
  return {ref.substr(0, dot), ref.substr(dot + 1)};
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

bool is_integer(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

}  // namespace

std::size_t TableDef::column_index(const std::string& column) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == column) return i;
  }
  throw NotFoundError("no column '" + column + "' in table '" + name + "'");
}

bool TableDef::has_column(const std::string& column) const {
  for (const auto& c : columns) {
    if (c.name == column) return true;
  }
  return false;
}

const ColumnDef& TableDef::column(const std::string& column_name) const {
  return columns[column_index(column_name)];
}

Schema Schema::parse(const std::string& text) {
  Schema schema;
  TableDef* current = nullptr;
  std::size_t line_no = 0;
  for (const auto& raw : split_lines(text)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    auto parts = split_ws(line);
    if (parts.empty()) continue;
    const std::string& kw = parts[0];
    if (kw == "table") {
      if (parts.size() != 2) {
        throw ParseError("line " + std::to_string(line_no) + ": table needs a name");
      }
      schema.tables_.push_back(TableDef{parts[1], {}, ""});
      current = &schema.tables_.back();
    } else if (kw == "col") {
      if (!current) {
        throw ParseError("line " + std::to_string(line_no) + ": col before any table");
      }
      if (parts.size() < 3 || parts.size() > 4) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": expected col <name> <int|text> [pk]");
      }
      ValueKind kind;
      if (parts[2] == "int") {
        kind = ValueKind::Integer;
      } else if (parts[2] == "text") {
        kind = ValueKind::Text;
      } else {
        throw ParseError("line " + std::to_string(line_no) + ": unknown column kind '" +
                         parts[2] + "'");
      }
      current->columns.push_back(ColumnDef{parts[1], kind});
      if (parts.size() == 4) {
        if (parts[3] != "pk") {
          throw ParseError("line " + std::to_string(line_no) + ": expected 'pk', got '" +
                           parts[3] + "'");
        }
        if (!current->primary_key.empty()) {
          throw ParseError("line " + std::to_string(line_no) + ": table '" +
                           current->name + "' already has primary key '" +
                           current->primary_key + "'");
        }
        current->primary_key = parts[1];
      }
    } else if (kw == "fk") {
      if (parts.size() != 4 || parts[2] != "->") {
        throw ParseError("line " + std::to_string(line_no) +
                         ": expected fk <t.c> -> <t.c>");
      }
      auto [ft, fc] = parse_column_ref(parts[1], line_no);
      auto [tt, tc] = parse_column_ref(parts[3], line_no);
      schema.edges_.push_back(FkEdge{ft, fc, tt, tc});
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": unknown directive '" + kw +
                       "'");
    }
  }
  schema.validate();
  return schema;
}

void Schema::validate() const {
  if (tables_.empty()) throw ParseError("schema has no tables");
  std::set<std::string> names;
  for (const auto& t : tables_) {
    if (!names.insert(t.name).second) {
      throw IntegrityError("duplicate table name '" + t.name + "'");
    }
    if (t.columns.empty()) {
      throw IntegrityError("table '" + t.name + "' has no columns");
    }
    std::set<std::string> cols;
    for (const auto& c : t.columns) {
      if (!cols.insert(c.name).second) {
        throw IntegrityError("duplicate column '" + c.name + "' in table '" + t.name +
                             "'");
      }
    }
    if (t.primary_key.empty()) {
      throw IntegrityError("table '" + t.name + "' has no primary key");
    }
  }
  for (const auto& e : edges_) {
    for (const auto& [table, column] :
         {std::pair{e.from_table, e.from_column}, std::pair{e.to_table, e.to_column}}) {
      if (!has_table(table)) {
        throw IntegrityError("FK references unknown table '" + table + "'");
      }
      if (!this->table(table).has_column(column)) {
        throw IntegrityError("FK references unknown column '" + table + "." + column +
                             "'");
      }
    }
    if (e.to_column != table(e.to_table).primary_key) {
      throw IntegrityError("FK target '" + e.to_table + "." + e.to_column +
                           "' is not the table's primary key");
    }
  }
}

bool Schema::has_table(const std::string& name) const {
  for (const auto& t : tables_) {
    if (t.name == name) return true;
  }
  return false;
}

const TableDef& Schema::table(const std::string& name) const {
  return tables_[table_index(name)];
}

std::size_t Schema::table_index(const std::string& name) const {
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    if (tables_[i].name == name) return i;
  }
  throw NotFoundError("no table '" + name + "'");
}

int Schema::fk_degree(const std::string& table) const {
  int degree = 0;
  for (const auto& e : edges_) {
    if (e.from_table == table) ++degree;
    if (e.to_table == table) ++degree;
  }
  return degree;
}

std::vector<std::string> Schema::neighbors(const std::string& table) const {
  std::set<std::string> out;
  for (const auto& e : edges_) {
    if (e.from_table == table) out.insert(e.to_table);
    if (e.to_table == table) out.insert(e.from_table);
  }
  return {out.begin(), out.end()};
}

bool Schema::is_entity_table(const std::string& table) const {
  for (const auto& e : edges_) {
    if (e.from_table == table) return false;
  }
  return true;
}

const FkEdge* Schema::find_edge(const std::string& t1, const std::string& c1,
                                const std::string& t2, const std::string& c2) const {
  for (const auto& e : edges_) {
    if (e.from_table == t1 && e.from_column == c1 && e.to_table == t2 &&
        e.to_column == c2) {
      return &e;
    }
    if (e.from_table == t2 && e.from_column == c2 && e.to_table == t1 &&
        e.to_column == c1) {
      return &e;
    }
  }
  return nullptr;
}

const FkEdge* Schema::edge_between(const std::string& t1, const std::string& t2) const {
  for (const auto& e : edges_) {
    if ((e.from_table == t1 && e.to_table == t2) ||
        (e.from_table == t2 && e.to_table == t1)) {
      return &e;
    }
  }
  return nullptr;
}

Dataset::Dataset(Schema schema) : schema_(std::move(schema)) {
  rows_.resize(schema_.tables().size());
}

void Dataset::ingest_table(const std::string& table, const std::string& rows_text) {
  if (finalized_) throw IntegrityError("dataset already finalized");
  const std::size_t table_idx = schema_.table_index(table);
  const TableDef& def = schema_.tables()[table_idx];

  auto lines = split_lines(rows_text);
  if (lines.empty()) {
    throw ParseError("table '" + table + "': missing header row");
  }
  auto header = split_fields(lines[0]);
  if (header.size() != def.columns.size()) {
    throw ParseError("table '" + table + "': header has " +
                     std::to_string(header.size()) + " columns, schema has " +
                     std::to_string(def.columns.size()));
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] != def.columns[i].name) {
      throw ParseError("table '" + table + "': header column " + std::to_string(i + 1) +
                       " is '" + header[i] + "', expected '" + def.columns[i].name + "'");
    }
  }

  auto& rows = rows_[table_idx];
  const std::size_t pk = def.pk_index();
  std::unordered_set<std::string> seen_keys;
  seen_keys.reserve(rows.size() + lines.size());
  for (const auto& row : rows) seen_keys.insert(row[pk]);

  for (std::size_t line_no = 2; line_no <= lines.size(); ++line_no) {
    const std::string& line = lines[line_no - 1];
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != def.columns.size()) {
      throw ParseError("table '" + table + "' line " + std::to_string(line_no) + ": " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(def.columns.size()));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (def.columns[i].kind == ValueKind::Integer && !is_integer(fields[i])) {
        throw ParseError("table '" + table + "' line " + std::to_string(line_no) +
                         ": '" + fields[i] + "' is not an integer for column '" +
                         def.columns[i].name + "'");
      }
    }
    if (!seen_keys.insert(fields[pk]).second) {
      throw IntegrityError("table '" + table + "' line " + std::to_string(line_no) +
                           ": duplicate primary key '" + fields[pk] + "'");
    }
    rows.push_back(std::move(fields));
  }
}

void Dataset::finalize() {
  if (finalized_) return;
  for (const auto& edge : schema_.fk_edges()) {
    const TableDef& from = schema_.table(edge.from_table);
    const TableDef& to = schema_.table(edge.to_table);
    const std::size_t from_col = from.column_index(edge.from_column);
    const std::size_t to_col = to.column_index(edge.to_column);

    std::unordered_set<std::string> target_keys;
    for (const auto& row : rows(edge.to_table)) target_keys.insert(row[to_col]);
    for (const auto& row : rows(edge.from_table)) {
      if (!target_keys.count(row[from_col])) {
        throw IntegrityError("dangling FK: " + edge.from_table + "." + edge.from_column +
                             " = '" + row[from_col] + "' has no match in " +
                             edge.to_table + "." + edge.to_column);
      }
    }
  }
  finalized_ = true;
}

const std::vector<Row>& Dataset::rows(const std::string& table) const {
  return rows_[schema_.table_index(table)];
}

std::size_t Dataset::cardinality(const std::string& table) const {
  return rows(table).size();
}

std::size_t Dataset::total_rows() const {
  std::size_t total = 0;
  for (const auto& rows : rows_) total += rows.size();
  return total;
}

int Dataset::compare_values(ValueKind kind, const std::string& a, const std::string& b) {
  if (kind == ValueKind::Integer && is_integer(a) && is_integer(b)) {
    long long ia = std::stoll(a);
    long long ib = std::stoll(b);
    return ia < ib ? -1 : (ia > ib ? 1 : 0);
  }
  return a < b ? -1 : (a > b ? 1 : 0);
}

Dataset load_dataset(const Schema& schema, const std::string& data_dir) {
  Dataset dataset(schema);
  for (const auto& table : schema.tables()) {
    const std::string path = data_dir + "/" + table.name + ".tsv";
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open data file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    dataset.ingest_table(table.name, buf.str());
  }
  dataset.finalize();
  return dataset;
}

namespace {

// Entity-table elements sort before relationship-table elements; values
// (columns) before bare table names; then by name.
struct ElementOrder {
  const Schema* schema;
  bool operator()(const SchemaElement& a, const SchemaElement& b) const {
    if (a.is_table() != b.is_table()) return b.is_table();
    bool ea = schema->is_entity_table(a.table);
    bool eb = schema->is_entity_table(b.table);
    if (ea != eb) return ea;
    return a < b;
  }
};

}  // namespace

ValueIndex ValueIndex::build(const Dataset& dataset) {
  if (!dataset.finalized()) throw IntegrityError("dataset not finalized");
  ValueIndex index;
  index.schema_ = &dataset.schema();
  for (const auto& table : dataset.schema().tables()) {
    auto name_tokens = tokenize(table.name);
    if (!name_tokens.empty()) {
      index.entries_[name_tokens].push_back(SchemaElement{table.name, ""});
    }
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (table.columns[c].kind != ValueKind::Text) continue;
      for (const auto& row : dataset.rows(table.name)) {
        auto tokens = tokenize(row[c]);
        if (tokens.empty()) continue;
        index.entries_[tokens].push_back(SchemaElement{table.name, table.columns[c].name});
      }
    }
  }
  ElementOrder order{index.schema_};
  for (auto& [tokens, elements] : index.entries_) {
    std::sort(elements.begin(), elements.end(), order);
    elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
    index.max_key_length_ = std::max(index.max_key_length_, tokens.size());
  }
  return index;
}

const std::vector<SchemaElement>* ValueIndex::lookup(
    const std::vector<std::string>& tokens, std::size_t begin, std::size_t len) const {
  if (begin + len > tokens.size()) return nullptr;
  std::vector<std::string> key(tokens.begin() + begin, tokens.begin() + begin + len);
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<ValueMatch> match_values(const std::vector<std::string>& tokens,
                                     const ValueIndex& index) {
  std::vector<ValueMatch> matches;
  std::size_t pos = 0;
  while (pos < tokens.size()) {
    std::size_t longest = std::min(index.max_key_length(), tokens.size() - pos);
    bool matched = false;
    for (std::size_t len = longest; len >= 1 && !matched; --len) {
      if (const auto* elements = index.lookup(tokens, pos, len)) {
        ValueMatch m;
        m.begin = pos;
        m.end = pos + len;
        m.element = elements->front();
        m.matched_text =
            join_tokens({tokens.begin() + pos, tokens.begin() + pos + len});
        matches.push_back(std::move(m));
        pos += len;
        matched = true;
      }
    }
    if (!matched) ++pos;
  }
  return matches;
}

std::optional<std::string> representative_text_column(const Dataset& dataset,
                                                      const std::string& table) {
  const TableDef& def = dataset.schema().table(table);
  const auto& rows = dataset.rows(table);
  std::optional<std::string> best;
  double best_ratio = -1.0;
  for (std::size_t c = 0; c < def.columns.size(); ++c) {
    if (def.columns[c].kind != ValueKind::Text) continue;
    std::set<std::string> distinct;
    for (const auto& row : rows) distinct.insert(row[c]);
    double ratio = rows.empty() ? 0.0 : double(distinct.size()) / double(rows.size());
    if (ratio > best_ratio || (ratio == best_ratio && best && def.columns[c].name < *best)) {
      best_ratio = ratio;
      best = def.columns[c].name;
    }
  }
  return best;
}

}  // namespace qunits
