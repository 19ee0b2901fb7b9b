#include "qunits/derive.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace qunits {

QueriabilityScore queriability(const Dataset& dataset) {
  const Schema& schema = dataset.schema();
  QueriabilityScore score;
  std::size_t max_card = 0;
  for (const auto& table : schema.tables()) {
    max_card = std::max(max_card, dataset.cardinality(table.name));
  }
  for (const auto& table : schema.tables()) {
    double ratio =
        max_card == 0 ? 0.0
                      : double(dataset.cardinality(table.name)) / double(max_card);
    score.table_score[table.name] = ratio * (1.0 + schema.fk_degree(table.name));
    const auto& rows = dataset.rows(table.name);
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      std::set<std::string> distinct;
      for (const auto& row : rows) distinct.insert(row[c]);
      double col_ratio =
          rows.empty() ? 0.0 : double(distinct.size()) / double(rows.size());
      score.column_distinct_ratio[table.name + "." + table.columns[c].name] = col_ratio;
    }
  }
  return score;
}

std::string TypedTemplate::str() const {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += " ";
    out += items[i].is_slot ? "[" + items[i].element.str() + "]" : items[i].token;
  }
  return out;
}

std::size_t TypedTemplate::slot_count() const {
  std::size_t n = 0;
  for (const auto& item : items) {
    if (item.is_slot) ++n;
  }
  return n;
}

std::size_t TypedTemplate::literal_count() const {
  return items.size() - slot_count();
}

TypedTemplate type_query(const std::string& query, const ValueIndex& index,
                         const Schema& schema) {
  (void)schema;
  auto tokens = tokenize(query);
  auto matches = match_values(tokens, index);
  TypedTemplate tmpl;
  tmpl.frequency = 1;
  std::size_t pos = 0;
  std::size_t next_match = 0;
  while (pos < tokens.size()) {
    if (next_match < matches.size() && matches[next_match].begin == pos) {
      const auto& m = matches[next_match];
      // Value spans become typed slots; a span that matched a bare table name
      // is structure, not data, and stays literal.
      if (m.element.is_table()) {
        for (std::size_t i = m.begin; i < m.end; ++i) {
          tmpl.items.push_back(TemplateItem{false, {}, tokens[i]});
        }
      } else {
        tmpl.items.push_back(TemplateItem{true, m.element, ""});
      }
      pos = m.end;
      ++next_match;
    } else {
      tmpl.items.push_back(TemplateItem{false, {}, tokens[pos]});
      ++pos;
    }
  }
  return tmpl;
}

QueryLog parse_query_log(const std::string& text) {
  QueryLog log;
  std::map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError("query log line " + std::to_string(line_no) +
                       ": expected query<TAB>frequency");
    }
    std::string query = line.substr(0, tab);
    long freq = 0;
    try {
      freq = std::stol(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ParseError("query log line " + std::to_string(line_no) +
                       ": bad frequency '" + line.substr(tab + 1) + "'");
    }
    if (freq <= 0) {
      throw ParseError("query log line " + std::to_string(line_no) +
                       ": frequency must be positive");
    }
    auto it = seen.find(query);
    if (it != seen.end()) {
      log[it->second].second += freq;
    } else {
      seen[query] = log.size();
      log.emplace_back(query, freq);
    }
  }
  return log;
}

namespace {

// Recognized items of a query: value matches plus structural tokens. A token
// naming a table (exact or trailing-s plural) resolves to that table's
// representative text column; a token naming a column resolves to it directly,
// entity tables first on ambiguity.
std::vector<ColumnRef> recognized_items(const std::string& query, const Dataset& dataset,
                                        const ValueIndex& index) {
  const Schema& schema = dataset.schema();
  auto tokens = tokenize(query);
  auto matches = match_values(tokens, index);

  std::vector<ColumnRef> items;
  std::vector<bool> covered(tokens.size(), false);
  for (const auto& m : matches) {
    for (std::size_t i = m.begin; i < m.end; ++i) covered[i] = true;
    if (m.element.is_table()) {
      if (auto col = representative_text_column(dataset, m.element.table)) {
        items.push_back(ColumnRef{m.element.table, *col});
      }
    } else {
      items.push_back(ColumnRef{m.element.table, m.element.column});
    }
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (covered[i]) continue;
    const std::string& token = tokens[i];
    std::string as_singular;
    if (token.size() > 1 && token.back() == 's') as_singular = token.substr(0, token.size() - 1);
    bool resolved = false;
    for (const auto& table : schema.tables()) {
      if (token == table.name || as_singular == table.name) {
        if (auto col = representative_text_column(dataset, table.name)) {
          items.push_back(ColumnRef{table.name, *col});
          resolved = true;
        }
        break;
      }
    }
    if (resolved) continue;
    // Column-name tokens: entity tables take precedence, then table name.
    const TableDef* owner = nullptr;
    for (const auto& table : schema.tables()) {
      if (!table.has_column(token) || table.column(token).kind != ValueKind::Text) {
        continue;
      }
      if (!owner) {
        owner = &table;
        continue;
      }
      bool cand_entity = schema.is_entity_table(table.name);
      bool owner_entity = schema.is_entity_table(owner->name);
      if (cand_entity != owner_entity ? cand_entity : table.name < owner->name) {
        owner = &table;
      }
    }
    if (owner) items.push_back(ColumnRef{owner->name, token});
  }
  return items;
}

}  // namespace

std::vector<SchemaLinkWeights> rollup(const QueryLog& log, const Dataset& dataset,
                                      const ValueIndex& index) {
  std::map<std::string, std::map<std::string, long>> links;  // table -> element -> count
  std::map<std::string, SchemaElement> element_by_name;

  for (const auto& [query, freq] : log) {
    auto items = recognized_items(query, dataset, index);
    for (std::size_t i = 0; i < items.size(); ++i) {
      for (std::size_t j = 0; j < items.size(); ++j) {
        if (i == j) continue;
        const std::string key = items[j].str();
        links[items[i].table][key] += freq;
        element_by_name[key] = SchemaElement{items[j].table, items[j].column};
      }
    }
  }

  std::vector<SchemaLinkWeights> out;
  for (const auto& [table, weights] : links) {
    SchemaLinkWeights w;
    w.source_table = table;
    for (const auto& [element, count] : weights) {
      w.weights.push_back(LinkWeight{element_by_name[element], count});
    }
    std::sort(w.weights.begin(), w.weights.end(), [](const LinkWeight& a, const LinkWeight& b) {
      if (a.count != b.count) return a.count > b.count;
      return a.target.str() < b.target.str();
    });
    out.push_back(std::move(w));
  }
  return out;
}

namespace {

struct FkPath {
  std::vector<std::string> tables;  // from source to target, inclusive
  std::vector<const FkEdge*> edges;
};

// Shortest FK path between tables, at most max_edges long. Deterministic:
// among equal-length paths the lexicographically smallest table sequence wins.
std::optional<FkPath> shortest_fk_path(const Schema& schema, const std::string& from,
                                       const std::string& to, std::size_t max_edges) {
  if (from == to) return FkPath{{from}, {}};
  std::vector<FkPath> frontier{FkPath{{from}, {}}};
  for (std::size_t depth = 0; depth < max_edges; ++depth) {
    std::vector<FkPath> next;
    for (const auto& path : frontier) {
      const std::string& tail = path.tables.back();
      for (const auto& edge : schema.fk_edges()) {
        std::string other;
        if (edge.from_table == tail) other = edge.to_table;
        else if (edge.to_table == tail) other = edge.from_table;
        else continue;
        if (std::count(path.tables.begin(), path.tables.end(), other)) continue;
        FkPath extended = path;
        extended.tables.push_back(other);
        extended.edges.push_back(&edge);
        next.push_back(std::move(extended));
      }
    }
    std::vector<FkPath> hits;
    for (auto& path : next) {
      if (path.tables.back() == to) hits.push_back(path);
    }
    if (!hits.empty()) {
      std::sort(hits.begin(), hits.end(), [](const FkPath& a, const FkPath& b) {
        return a.tables < b.tables;
      });
      return hits.front();
    }
    frontier = std::move(next);
  }
  return std::nullopt;
}

void add_path_to_base(BaseExpression& base, const FkPath& path) {
  for (const auto& table : path.tables) {
    if (!std::count(base.tables.begin(), base.tables.end(), table)) {
      base.tables.push_back(table);
    }
  }
  for (const auto* edge : path.edges) {
    bool present = false;
    for (const auto& join : base.joins) {
      if (join.left.table == edge->from_table && join.left.column == edge->from_column &&
          join.right.table == edge->to_table && join.right.column == edge->to_column) {
        present = true;
      }
    }
    if (!present) {
      base.joins.push_back(JoinPredicate{ColumnRef{edge->from_table, edge->from_column},
                                         ColumnRef{edge->to_table, edge->to_column}});
    }
  }
}

}  // namespace

namespace {

void check_config(const DerivationConfig& config) {
  if (config.k1 < 0 || config.k2 < 0) {
    throw IntegrityError("k1 and k2 must be non-negative");
  }
  if (config.min_template_frequency < 1 || config.min_signature_support < 1) {
    throw IntegrityError("derivation thresholds must be positive");
  }
}

}  // namespace

std::vector<QunitDefinition> derive_from_schema(const Dataset& dataset,
                                                const DerivationConfig& config) {
  check_config(config);
  const Schema& schema = dataset.schema();
  QueriabilityScore score = queriability(dataset);

  // Anchors come from entity tables only; a relationship row is not a thing a
  // person asks for by name.
  std::vector<std::string> anchors;
  for (const auto& table : schema.tables()) {
    if (schema.is_entity_table(table.name) &&
        representative_text_column(dataset, table.name)) {
      anchors.push_back(table.name);
    }
  }
  std::sort(anchors.begin(), anchors.end(), [&](const std::string& a, const std::string& b) {
    double qa = score.table_score.at(a), qb = score.table_score.at(b);
    if (qa != qb) return qa > qb;
    return a < b;
  });
  if (config.k1 >= 0 && anchors.size() > std::size_t(config.k1)) {
    anchors.resize(config.k1);
  }

  std::vector<QunitDefinition> defs;
  double max_q = 0.0;
  for (const auto& anchor : anchors) {
    max_q = std::max(max_q, score.table_score.at(anchor));
  }
  for (const auto& anchor : anchors) {
    auto neighbors = schema.neighbors(anchor);
    std::sort(neighbors.begin(), neighbors.end(),
              [&](const std::string& a, const std::string& b) {
                double qa = score.table_score.at(a), qb = score.table_score.at(b);
                if (qa != qb) return qa > qb;
                return a < b;
              });
    if (config.k2 >= 0 && neighbors.size() > std::size_t(config.k2)) {
      neighbors.resize(config.k2);
    }

    QunitDefinition def;
    def.id = "schema_" + anchor;
    def.provenance = Provenance::SchemaData;
    def.utility = max_q > 0 ? score.table_score.at(anchor) / max_q : 0.0;
    def.base.tables.push_back(anchor);
    def.base.anchor = ColumnRef{anchor, *representative_text_column(dataset, anchor)};
    def.conversion.label = anchor;
    for (const auto& neighbor : neighbors) {
      const FkEdge* edge = schema.edge_between(anchor, neighbor);
      if (!edge) continue;
      def.base.tables.push_back(neighbor);
      def.base.joins.push_back(JoinPredicate{ColumnRef{edge->from_table, edge->from_column},
                                             ColumnRef{edge->to_table, edge->to_column}});
      ForEachGroup group;
      group.element = neighbor;
      const TableDef& ntable = schema.table(neighbor);
      for (const auto& col : ntable.columns) {
        if (col.kind == ValueKind::Text) {
          group.columns.push_back(ColumnRef{neighbor, col.name});
        }
      }
      if (!group.columns.empty()) def.conversion.groups.push_back(std::move(group));
    }
    defs.push_back(validate_definition(def, schema));
  }
  return defs;
}

DerivationOutcome derive_from_log(const QueryLog& log, const Dataset& dataset,
                                  const ValueIndex& index,
                                  const DerivationConfig& config) {
  check_config(config);
  const Schema& schema = dataset.schema();
  DerivationOutcome out;
  auto link_weights = rollup(log, dataset, index);

  long max_total = 0;
  std::map<std::string, long> totals;
  for (const auto& w : link_weights) {
    long total = 0;
    for (const auto& lw : w.weights) total += lw.count;
    totals[w.source_table] = total;
    max_total = std::max(max_total, total);
  }

  for (const auto& w : link_weights) {
    auto anchor_col = representative_text_column(dataset, w.source_table);
    if (!anchor_col) {
      out.warnings.push_back("table '" + w.source_table +
                             "' has no text column; skipped");
      continue;
    }
    QunitDefinition def;
    def.id = "log_" + w.source_table;
    def.provenance = Provenance::QueryLog;
    def.utility = max_total > 0 ? double(totals[w.source_table]) / double(max_total) : 0.0;
    def.base.tables.push_back(w.source_table);
    def.base.anchor = ColumnRef{w.source_table, *anchor_col};
    def.conversion.label = w.source_table;

    bool any_group = false;
    for (const auto& lw : w.weights) {
      if (lw.count < config.min_template_frequency) continue;
      auto path = shortest_fk_path(schema, w.source_table, lw.target.table, 2);
      if (!path) {
        out.warnings.push_back("no FK path within 2 edges from '" + w.source_table +
                               "' to '" + lw.target.str() + "'; group skipped");
        continue;
      }
      add_path_to_base(def.base, *path);
      ForEachGroup group;
      group.element = lw.target.table;
      group.columns.push_back(ColumnRef{lw.target.table, lw.target.column});
      def.conversion.groups.push_back(std::move(group));
      any_group = true;
    }
    if (!any_group) continue;
    out.definitions.push_back(validate_definition(def, schema));
  }
  return out;
}

std::vector<DocumentNode> parse_documents(const std::string& text) {
  std::vector<DocumentNode> documents;
  std::vector<DocumentNode*> stack;  // stack[d] = open node at depth d
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t spaces = 0;
    while (spaces < line.size() && line[spaces] == ' ') ++spaces;
    if (line[spaces] == '#') continue;
    if (spaces % 2 != 0) {
      throw ParseError("document line " + std::to_string(line_no) +
                       ": indentation must be two spaces per level");
    }
    std::size_t depth = spaces / 2;
    auto colon = line.find(':', spaces);
    if (colon == std::string::npos) {
      throw ParseError("document line " + std::to_string(line_no) +
                       ": expected `element-name: text`");
    }
    DocumentNode node;
    node.element = line.substr(spaces, colon - spaces);
    std::size_t text_start = colon + 1;
    if (text_start < line.size() && line[text_start] == ' ') ++text_start;
    node.text = line.substr(std::min(text_start, line.size()));
    if (node.element.empty()) {
      throw ParseError("document line " + std::to_string(line_no) + ": empty element name");
    }
    if (depth > stack.size()) {
      throw ParseError("document line " + std::to_string(line_no) +
                       ": indentation skips a level");
    }
    stack.resize(depth);
    if (depth == 0) {
      documents.push_back(std::move(node));
      stack.push_back(&documents.back());
    } else {
      auto& parent = *stack.back();
      parent.children.push_back(std::move(node));
      stack.push_back(&parent.children.back());
    }
  }
  return documents;
}

namespace {

void collect_signature(const DocumentNode& node, const ValueIndex& index,
                       std::map<std::string, long>& counts) {
  auto tokens = tokenize(node.text);
  for (const auto& match : match_values(tokens, index)) {
    if (!match.element.is_table()) counts[match.element.str()] += 1;
  }
  for (const auto& child : node.children) collect_signature(child, index, counts);
}

}  // namespace

TypeSignature signature(const DocumentNode& document, const ValueIndex& index) {
  TypeSignature sig;
  collect_signature(document, index, sig.counts);
  return sig;
}

DerivationOutcome derive_from_evidence(const std::vector<DocumentNode>& documents,
                                       const Dataset& dataset, const ValueIndex& index,
                                       const DerivationConfig& config) {
  check_config(config);
  const Schema& schema = dataset.schema();
  DerivationOutcome out;
  if (documents.empty()) return out;

  // Cluster documents by the exact set of elements in their signature.
  struct Cluster {
    std::vector<std::string> elements;  // sorted
    long docs = 0;
    std::map<std::string, long> sums;
  };
  std::map<std::string, Cluster> clusters;
  for (const auto& doc : documents) {
    TypeSignature sig = signature(doc, index);
    if (sig.counts.empty()) continue;
    std::vector<std::string> elements;
    for (const auto& [element, _] : sig.counts) elements.push_back(element);
    std::string key = join_tokens(elements, '|');
    auto& cluster = clusters[key];
    cluster.elements = elements;
    cluster.docs += 1;
    for (const auto& [element, count] : sig.counts) cluster.sums[element] += count;
  }

  std::vector<const Cluster*> ordered;
  for (const auto& [key, cluster] : clusters) ordered.push_back(&cluster);
  std::sort(ordered.begin(), ordered.end(), [](const Cluster* a, const Cluster* b) {
    if (a->docs != b->docs) return a->docs > b->docs;
    return a->elements < b->elements;
  });

  std::map<std::string, int> ids_per_table;
  for (const auto* cluster : ordered) {
    if (cluster->docs < config.min_signature_support) continue;

    std::string label;
    double label_mean = 0.0;
    for (const auto& element : cluster->elements) {
      double mean = double(cluster->sums.at(element)) / double(cluster->docs);
      if (label.empty() || mean < label_mean ||
          (mean == label_mean && element < label)) {
        label = element;
        label_mean = mean;
      }
    }

    struct GroupElem {
      std::string element;
      double mean;
    };
    std::vector<GroupElem> group_elems;
    for (const auto& element : cluster->elements) {
      if (element == label) continue;
      double mean = double(cluster->sums.at(element)) / double(cluster->docs);
      if (mean >= 2.0 * label_mean) group_elems.push_back(GroupElem{element, mean});
    }
    std::sort(group_elems.begin(), group_elems.end(), [](const GroupElem& a, const GroupElem& b) {
      if (a.mean != b.mean) return a.mean > b.mean;
      return a.element < b.element;
    });

    auto label_dot = label.find('.');
    std::string label_table = label.substr(0, label_dot);
    std::string label_column = label.substr(label_dot + 1);

    QunitDefinition def;
    int seq = ++ids_per_table[label_table];
    def.id = "evidence_" + label_table + (seq > 1 ? "_" + std::to_string(seq) : "");
    def.provenance = Provenance::ExternalEvidence;
    def.utility = double(cluster->docs) / double(documents.size());
    def.base.tables.push_back(label_table);
    def.base.anchor = ColumnRef{label_table, label_column};
    def.conversion.label = label_table;

    bool connected = true;
    for (const auto& ge : group_elems) {
      auto dot = ge.element.find('.');
      std::string table = ge.element.substr(0, dot);
      std::string column = ge.element.substr(dot + 1);
      auto path = shortest_fk_path(schema, label_table, table, 2);
      if (!path) {
        connected = false;
        break;
      }
      add_path_to_base(def.base, *path);
      ForEachGroup group;
      group.element = table;
      group.columns.push_back(ColumnRef{table, column});
      def.conversion.groups.push_back(std::move(group));
    }
    if (!connected) {
      out.warnings.push_back("cluster labelled '" + label +
                             "' has no FK path to its group elements; skipped");
      continue;
    }
    out.definitions.push_back(validate_definition(def, schema));
  }
  return out;
}

}  // namespace qunits
