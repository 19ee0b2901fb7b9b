#include "qunits/qunit.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace qunits {

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Manual: return "manual";
    case Provenance::SchemaData: return "schema_data";
    case Provenance::QueryLog: return "query_log";
    case Provenance::ExternalEvidence: return "external_evidence";
  }
  return "manual";
}

QunitDefinition validate_definition(const QunitDefinition& def, const Schema& schema) {
  if (def.id.empty()) throw IntegrityError("definition has no id");
  if (def.utility < 0) {
    throw IntegrityError("definition '" + def.id + "': utility must be >= 0");
  }
  if (def.base.tables.empty()) {
    throw IntegrityError("definition '" + def.id + "': no base tables");
  }
  std::set<std::string> tables;
  for (const auto& t : def.base.tables) {
    if (!schema.has_table(t)) {
      throw IntegrityError("definition '" + def.id + "': unknown table '" + t + "'");
    }
    if (!tables.insert(t).second) {
      throw IntegrityError("definition '" + def.id + "': table '" + t +
                           "' listed twice");
    }
  }
  auto check_column = [&](const ColumnRef& ref, const char* what) {
    if (!tables.count(ref.table)) {
      throw IntegrityError("definition '" + def.id + "': " + what + " table '" +
                           ref.table + "' is not a base table");
    }
    if (!schema.table(ref.table).has_column(ref.column)) {
      throw IntegrityError("definition '" + def.id + "': unknown column '" + ref.str() +
                           "'");
    }
  };

  // Join graph: every predicate must be an FK edge; the graph over the base
  // tables must be connected.
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& join : def.base.joins) {
    check_column(join.left, "join");
    check_column(join.right, "join");
    if (!schema.find_edge(join.left.table, join.left.column, join.right.table,
                          join.right.column)) {
      throw IntegrityError("definition '" + def.id + "': join " + join.left.str() +
                           " = " + join.right.str() + " is not an FK edge");
    }
    adj[join.left.table].push_back(join.right.table);
    adj[join.right.table].push_back(join.left.table);
  }
  std::set<std::string> reached;
  std::queue<std::string> frontier;
  frontier.push(def.base.tables.front());
  reached.insert(def.base.tables.front());
  while (!frontier.empty()) {
    auto t = frontier.front();
    frontier.pop();
    for (const auto& n : adj[t]) {
      if (reached.insert(n).second) frontier.push(n);
    }
  }
  if (reached.size() != tables.size()) {
    throw IntegrityError("definition '" + def.id + "': join graph is not connected");
  }

  check_column(def.base.anchor, "anchor");
  if (schema.table(def.base.anchor.table).column(def.base.anchor.column).kind !=
      ValueKind::Text) {
    throw IntegrityError("definition '" + def.id + "': anchor '" +
                         def.base.anchor.str() + "' must be a text column");
  }

  if (def.conversion.label.empty()) {
    throw IntegrityError("definition '" + def.id + "': conversion has no label");
  }
  for (const auto& group : def.conversion.groups) {
    if (group.columns.empty()) {
      throw IntegrityError("definition '" + def.id + "': foreach group '" +
                           group.element + "' projects nothing");
    }
    for (const auto& col : group.columns) check_column(col, "foreach");
  }
  return def;
}

namespace {

// Join evaluation: start from the anchor table's matching rows and extend
// along join predicates until every base table is bound.
struct JoinState {
  std::vector<const Row*> bound;  // per base table, null when unbound
};

std::vector<std::vector<const Row*>> evaluate_base(const QunitDefinition& def,
                                                   const std::string& binding,
                                                   const Dataset& dataset,
                                                   bool* anchor_found) {
  const Schema& schema = dataset.schema();
  const auto& tables = def.base.tables;
  auto table_pos = [&](const std::string& name) {
    return std::find(tables.begin(), tables.end(), name) - tables.begin();
  };

  const std::size_t anchor_pos = table_pos(def.base.anchor.table);
  const TableDef& anchor_table = schema.table(def.base.anchor.table);
  const std::size_t anchor_col = anchor_table.column_index(def.base.anchor.column);

  std::vector<std::vector<const Row*>> results;
  std::vector<JoinState> frontier;
  if (anchor_found) *anchor_found = false;
  for (const auto& row : dataset.rows(def.base.anchor.table)) {
    if (iequals(row[anchor_col], binding)) {
      if (anchor_found) *anchor_found = true;
      JoinState s;
      s.bound.assign(tables.size(), nullptr);
      s.bound[anchor_pos] = &row;
      frontier.push_back(std::move(s));
    }
  }

  // Order joins so each one touches an already-bound table when possible.
  std::vector<const JoinPredicate*> pending;
  for (const auto& j : def.base.joins) pending.push_back(&j);
  std::vector<const JoinPredicate*> ordered;
  std::set<std::string> bound_tables{def.base.anchor.table};
  while (!pending.empty()) {
    bool advanced = false;
    for (auto it = pending.begin(); it != pending.end(); ++it) {
      const auto* j = *it;
      if (bound_tables.count(j->left.table) || bound_tables.count(j->right.table)) {
        bound_tables.insert(j->left.table);
        bound_tables.insert(j->right.table);
        ordered.push_back(j);
        pending.erase(it);
        advanced = true;
        break;
      }
    }
    if (!advanced) break;  // disconnected; validate_definition rejects this
  }

  for (const auto* join : ordered) {
    ColumnRef bound_side = join->left;
    ColumnRef free_side = join->right;
    std::vector<JoinState> next;
    for (auto& state : frontier) {
      ColumnRef b = bound_side, f = free_side;
      if (!state.bound[table_pos(b.table)]) std::swap(b, f);
      const Row* bound_row = state.bound[table_pos(b.table)];
      const std::string& key = (*bound_row)[schema.table(b.table).column_index(b.column)];
      const std::size_t f_pos = table_pos(f.table);
      const std::size_t f_col = schema.table(f.table).column_index(f.column);
      if (state.bound[f_pos]) {
        // Both sides already bound: the predicate is a filter.
        if ((*state.bound[f_pos])[f_col] == key) next.push_back(state);
        continue;
      }
      for (const auto& row : dataset.rows(f.table)) {
        if (row[f_col] == key) {
          JoinState extended = state;
          extended.bound[f_pos] = &row;
          next.push_back(std::move(extended));
        }
      }
    }
    frontier = std::move(next);
  }

  for (auto& state : frontier) {
    bool complete = true;
    for (const auto* row : state.bound) {
      if (!row) complete = false;
    }
    if (complete) results.push_back(state.bound);
  }

  // Deterministic order: primary keys of the joined tables, in base order.
  std::vector<std::pair<std::size_t, ValueKind>> pk_cols;
  for (const auto& t : tables) {
    const TableDef& td = schema.table(t);
    pk_cols.emplace_back(td.pk_index(), td.column(td.primary_key).kind);
  }
  std::sort(results.begin(), results.end(),
            [&](const auto& a, const auto& b) {
              for (std::size_t i = 0; i < a.size(); ++i) {
                int c = Dataset::compare_values(pk_cols[i].second, (*a[i])[pk_cols[i].first],
                                                (*b[i])[pk_cols[i].first]);
                if (c != 0) return c < 0;
              }
              return false;
            });
  return results;
}

}  // namespace

QunitInstance instantiate(const QunitDefinition& def, const std::string& binding,
                          const Dataset& dataset) {
  bool anchor_found = false;
  auto rows = evaluate_base(def, binding, dataset, &anchor_found);
  if (!anchor_found) {
    throw NotFoundError("anchor value '" + binding + "' not found in " +
                        def.base.anchor.str());
  }

  const Schema& schema = dataset.schema();
  const auto& tables = def.base.tables;
  auto table_pos = [&](const std::string& name) {
    return std::find(tables.begin(), tables.end(), name) - tables.begin();
  };

  QunitInstance instance;
  instance.definition_id = def.id;
  instance.anchor_value = to_lower(binding);
  instance.label = def.conversion.label;
  instance.anchor_attribute = def.base.anchor.table;
  for (const auto& group : def.conversion.groups) {
    instance.group_elements.push_back(group.element);
    std::vector<Row> projected;
    for (const auto& bound : rows) {
      Row out;
      for (const auto& col : group.columns) {
        const Row* row = bound[table_pos(col.table)];
        out.push_back((*row)[schema.table(col.table).column_index(col.column)]);
      }
      projected.push_back(std::move(out));
    }
    instance.groups.push_back(std::move(projected));
  }
  return instance;
}

std::vector<QunitInstance> enumerate_instances(const QunitDefinition& def,
                                               const Dataset& dataset) {
  const Schema& schema = dataset.schema();
  const TableDef& anchor_table = schema.table(def.base.anchor.table);
  const std::size_t anchor_col = anchor_table.column_index(def.base.anchor.column);

  std::set<std::string> anchors;
  for (const auto& row : dataset.rows(def.base.anchor.table)) {
    anchors.insert(to_lower(row[anchor_col]));
  }
  std::vector<QunitInstance> instances;
  for (const auto& anchor : anchors) {
    instances.push_back(instantiate(def, anchor, dataset));
  }
  return instances;
}

RenderedInstance render(const QunitInstance& instance) {
  RenderedInstance out;
  out.instance_id = instance.definition_id + "/" + instance.anchor_value;
  out.definition_id = instance.definition_id;
  out.anchor_value = instance.anchor_value;

  std::ostringstream display;
  display << instance.label << " " << instance.anchor_attribute << "="
          << instance.anchor_value;
  for (std::size_t g = 0; g < instance.groups.size(); ++g) {
    for (const auto& row : instance.groups[g]) {
      display << "\n  " << instance.group_elements[g] << ":";
      for (const auto& value : row) display << " " << value;
    }
  }
  out.display = display.str();

  auto append = [&](const std::string& text) {
    for (auto& token : tokenize(text)) out.index_tokens.push_back(std::move(token));
  };
  append(instance.anchor_value);
  append(instance.label);
  for (const auto& group : instance.groups) {
    for (const auto& row : group) {
      for (const auto& value : row) append(value);
    }
  }
  return out;
}

namespace {

ColumnRef parse_ref_or_throw(const std::string& text, std::size_t line_no) {
  auto dot = text.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == text.size()) {
    throw ParseError("line " + std::to_string(line_no) +
                     ": expected table.column, got '" + text + "'");
  }
  return ColumnRef{text.substr(0, dot), text.substr(dot + 1)};
}

}  // namespace

std::vector<QunitDefinition> parse_definitions(const std::string& text) {
  std::vector<QunitDefinition> defs;
  QunitDefinition* current = nullptr;
  int anchors_seen = 0;
  std::size_t line_no = 0;

  auto finish = [&]() {
    if (current && anchors_seen != 1) {
      throw ParseError("definition '" + current->id + "': expected exactly one anchor, got " +
                       std::to_string(anchors_seen));
    }
  };

  for (const auto& raw : split_lines(text)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    std::istringstream in(line);
    std::string kw;
    if (!(in >> kw)) continue;

    if (kw == "qunit") {
      finish();
      std::string id, utility_kw;
      double utility = 1.0;
      if (!(in >> id >> utility_kw >> utility) || utility_kw != "utility") {
        throw ParseError("line " + std::to_string(line_no) +
                         ": expected qunit <id> utility <real>");
      }
      defs.push_back(QunitDefinition{id, {}, {}, utility, Provenance::Manual});
      current = &defs.back();
      anchors_seen = 0;
      continue;
    }
    if (!current) {
      throw ParseError("line " + std::to_string(line_no) + ": '" + kw +
                       "' before any qunit line");
    }
    if (kw == "from") {
      std::string t;
      while (in >> t) current->base.tables.push_back(t);
    } else if (kw == "join") {
      std::string left, eq, right;
      if (!(in >> left >> eq >> right) || eq != "=") {
        throw ParseError("line " + std::to_string(line_no) +
                         ": expected join <t.c> = <t.c>");
      }
      current->base.joins.push_back(
          JoinPredicate{parse_ref_or_throw(left, line_no), parse_ref_or_throw(right, line_no)});
    } else if (kw == "anchor") {
      std::string ref;
      if (!(in >> ref)) {
        throw ParseError("line " + std::to_string(line_no) + ": expected anchor <t.c>");
      }
      current->base.anchor = parse_ref_or_throw(ref, line_no);
      ++anchors_seen;
    } else if (kw == "label") {
      std::string name;
      if (!(in >> name)) {
        throw ParseError("line " + std::to_string(line_no) + ": expected label <name>");
      }
      current->conversion.label = name;
    } else if (kw == "foreach") {
      std::string rest;
      std::getline(in, rest);
      auto colon = rest.find(':');
      if (colon == std::string::npos) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": expected foreach <name>: <t.c>,<t.c>");
      }
      ForEachGroup group;
      {
        std::istringstream name_in(rest.substr(0, colon));
        if (!(name_in >> group.element)) {
          throw ParseError("line " + std::to_string(line_no) + ": foreach needs a name");
        }
      }
      std::string cols = rest.substr(colon + 1);
      std::size_t start = 0;
      while (start < cols.size()) {
        std::size_t comma = cols.find(',', start);
        std::string item = cols.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start);
        std::istringstream trim(item);
        std::string ref;
        if (trim >> ref) group.columns.push_back(parse_ref_or_throw(ref, line_no));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (group.columns.empty()) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": foreach group projects nothing");
      }
      current->conversion.groups.push_back(std::move(group));
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": unknown directive '" + kw +
                       "'");
    }
  }
  finish();
  return defs;
}

std::string serialize_definitions(const std::vector<QunitDefinition>& defs) {
  std::ostringstream out;
  bool first = true;
  for (const auto& def : defs) {
    if (!first) out << "\n";
    first = false;
    out << "qunit " << def.id << " utility " << def.utility << "\n";
    out << "from";
    for (const auto& t : def.base.tables) out << " " << t;
    out << "\n";
    for (const auto& j : def.base.joins) {
      out << "join " << j.left.str() << " = " << j.right.str() << "\n";
    }
    out << "anchor " << def.base.anchor.str() << "\n";
    out << "label " << def.conversion.label << "\n";
    for (const auto& g : def.conversion.groups) {
      out << "foreach " << g.element << ":";
      for (std::size_t i = 0; i < g.columns.size(); ++i) {
        out << (i ? "," : " ") << g.columns[i].str();
      }
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace qunits
