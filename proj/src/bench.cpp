#include "qunits/bench.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace qunits {

std::vector<TypedTemplate> extract_templates(const QueryLog& log, const ValueIndex& index,
                                             const Schema& schema) {
  std::map<std::string, TypedTemplate> by_pattern;
  for (const auto& [query, freq] : log) {
    TypedTemplate tmpl = type_query(query, index, schema);
    auto key = tmpl.str();
    auto it = by_pattern.find(key);
    if (it == by_pattern.end()) {
      tmpl.frequency = freq;
      by_pattern.emplace(key, std::move(tmpl));
    } else {
      it->second.frequency += freq;
    }
  }
  std::vector<TypedTemplate> out;
  for (auto& [key, tmpl] : by_pattern) out.push_back(std::move(tmpl));
  std::sort(out.begin(), out.end(), [](const TypedTemplate& a, const TypedTemplate& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.str() < b.str();
  });
  return out;
}

std::map<std::string, GoldSpec> parse_gold_map(const std::string& text) {
  std::map<std::string, GoldSpec> out;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      auto tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (fields.size() != 4) {
      throw ParseError("gold map line " + std::to_string(line_no) +
                       ": expected template<TAB>definition-id<TAB>required:...<TAB>forbidden:...");
    }
    auto parse_set = [&](const std::string& field, const char* prefix) {
      std::set<std::string> values;
      std::string p(prefix);
      if (field.substr(0, p.size()) != p) {
        throw ParseError("gold map line " + std::to_string(line_no) + ": expected '" + p +
                         "' field");
      }
      std::string rest = field.substr(p.size());
      std::size_t s = 0;
      while (s < rest.size()) {
        auto comma = rest.find(',', s);
        std::string item =
            rest.substr(s, comma == std::string::npos ? std::string::npos : comma - s);
        if (!item.empty()) values.insert(item);
        if (comma == std::string::npos) break;
        s = comma + 1;
      }
      return values;
    };
    GoldSpec gold;
    gold.definition_id = fields[1];
    gold.required = parse_set(fields[2], "required:");
    gold.forbidden = parse_set(fields[3], "forbidden:");
    for (const auto& r : gold.required) {
      if (gold.forbidden.count(r)) {
        throw IntegrityError("gold map line " + std::to_string(line_no) + ": '" + r +
                             "' is both required and forbidden");
      }
    }
    out[fields[0]] = std::move(gold);
  }
  return out;
}

namespace {

// splitmix64: pinned generator so sampling is identical everywhere.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  std::size_t below(std::size_t n) { return n == 0 ? 0 : next() % n; }
};

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[rng.below(i)]);
  }
}

std::string first_value_match(const std::string& query, const ValueIndex& index) {
  auto tokens = tokenize(query);
  for (const auto& match : match_values(tokens, index)) {
    if (!match.element.is_table()) return match.matched_text;
  }
  return "";
}

}  // namespace

Benchmark make_benchmark(const std::vector<TypedTemplate>& templates, const QueryLog& log,
                         const BenchmarkConfig& config,
                         const std::map<std::string, GoldSpec>& gold_map,
                         const ValueIndex& index, const Schema& schema) {
  if (config.per_template < 1) throw IntegrityError("per_template must be >= 1");
  Benchmark bench;
  bench.seed = config.seed;
  Rng rng(config.seed);

  std::size_t take = std::min<std::size_t>(templates.size(),
                                           std::max(config.top_templates, 0));
  for (std::size_t t = 0; t < take; ++t) {
    const std::string pattern = templates[t].str();
    std::vector<std::string> matching;
    for (const auto& [query, freq] : log) {
      if (type_query(query, index, schema).str() == pattern) matching.push_back(query);
    }
    std::sort(matching.begin(), matching.end());
    matching.erase(std::unique(matching.begin(), matching.end()), matching.end());
    if (matching.empty()) {
      bench.warnings.push_back("template '" + pattern + "' has no matching queries");
      continue;
    }
    auto gold_it = gold_map.find(pattern);
    if (gold_it == gold_map.end()) {
      bench.warnings.push_back("template '" + pattern + "' has no gold entry");
      continue;
    }
    shuffle(matching, rng);
    std::size_t n = std::min<std::size_t>(matching.size(), config.per_template);
    std::vector<std::string> picked(matching.begin(), matching.begin() + n);
    std::sort(picked.begin(), picked.end());
    for (const auto& query : picked) {
      BenchQuery bq;
      bq.text = query;
      bq.template_str = pattern;
      bq.gold = gold_it->second;
      bq.gold.anchor_value = first_value_match(query, index);
      bench.queries.push_back(std::move(bq));
    }
  }
  return bench;
}

const char* score_branch_name(ScoreBranch branch) {
  switch (branch) {
    case ScoreBranch::Correct: return "correct";
    case ScoreBranch::Incomplete: return "incomplete";
    case ScoreBranch::Excessive: return "excessive";
    case ScoreBranch::Incorrect: return "incorrect";
    case ScoreBranch::Uninformative: return "uninformative";
  }
  return "incorrect";
}

Scored score_result(const AlgoResult& result, const GoldSpec& gold) {
  if (!result.has_result) return Scored{0.0, ScoreBranch::Incorrect};
  bool anchor_ok =
      gold.anchor_value.empty() || iequals(result.anchor, gold.anchor_value);
  if (!anchor_ok) return Scored{0.0, ScoreBranch::Incorrect};

  std::size_t covered = 0;
  for (const auto& r : gold.required) {
    if (result.elements.count(r)) ++covered;
  }
  bool excessive = false;
  for (const auto& f : gold.forbidden) {
    if (result.elements.count(f)) excessive = true;
  }
  if (covered == gold.required.size()) {
    if (!excessive) return Scored{1.0, ScoreBranch::Correct};
    return Scored{0.5, ScoreBranch::Excessive};
  }
  if (covered > 0) return Scored{0.5, ScoreBranch::Incomplete};
  return Scored{0.0, ScoreBranch::Uninformative};
}

ScoreReport run_comparison(const Benchmark& benchmark,
                           const std::vector<std::pair<std::string, Adapter>>& algorithms) {
  ScoreReport report;
  for (const auto& [name, adapter] : algorithms) report.algorithms.push_back(name);
  report.scores.assign(benchmark.queries.size(),
                       std::vector<double>(algorithms.size(), 0.0));
  for (std::size_t q = 0; q < benchmark.queries.size(); ++q) {
    const auto& bq = benchmark.queries[q];
    report.queries.push_back(bq.text);
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
      Scored scored{0.0, ScoreBranch::Incorrect};
      try {
        AlgoResult result = algorithms[a].second(bq.text);
        scored = score_result(result, bq.gold);
      } catch (const std::exception& e) {
        report.notes.push_back("adapter '" + algorithms[a].first + "' failed on '" +
                               bq.text + "': " + e.what());
      }
      report.scores[q][a] = scored.score;
      report.notes.push_back(algorithms[a].first + " | " + bq.text + " | " +
                             score_branch_name(scored.branch));
    }
  }
  report.means.assign(algorithms.size(), 0.0);
  if (!benchmark.queries.empty()) {
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
      double sum = 0.0;
      for (std::size_t q = 0; q < benchmark.queries.size(); ++q) {
        sum += report.scores[q][a];
      }
      report.means[a] = sum / double(benchmark.queries.size());
    }
  }
  return report;
}

std::string ScoreReport::to_tsv() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "query";
  for (const auto& algo : algorithms) out << "\t" << algo;
  out << "\n";
  for (std::size_t q = 0; q < queries.size(); ++q) {
    out << queries[q];
    for (std::size_t a = 0; a < algorithms.size(); ++a) out << "\t" << scores[q][a];
    out << "\n";
  }
  out << "mean";
  for (std::size_t a = 0; a < algorithms.size(); ++a) out << "\t" << means[a];
  out << "\n";
  return out.str();
}

Adapter make_qunit_adapter(const InvertedIndex& index,
                           const std::vector<QunitDefinition>& defs,
                           const ValueIndex& values, const SearchConfig& config) {
  return [&index, defs, &values, config](const std::string& query) {
    AlgoResult out;
    auto results = search(query, index, defs, values, config);
    if (results.empty()) return out;
    const auto& top = results.front();
    const QunitDefinition* def = nullptr;
    for (const auto& d : defs) {
      if (d.id == top.definition_id) def = &d;
    }
    if (!def) return out;
    const RenderedInstance* doc = nullptr;
    for (const auto& d : index.docs()) {
      if (d.instance_id == top.instance_id) doc = &d;
    }
    if (!doc) return out;
    out.has_result = true;
    out.anchor = doc->anchor_value;
    out.elements.insert(def->base.anchor.str());
    // Only groups with content contribute elements; an empty page carries no
    // information beyond its anchor. All groups project the same join rows,
    // so emptiness is all-or-nothing and visible in the token count.
    bool any_group_content =
        doc->index_tokens.size() > tokenize(doc->anchor_value).size() +
                                       tokenize(def->conversion.label).size();
    if (any_group_content) {
      for (const auto& group : def->conversion.groups) {
        for (const auto& col : group.columns) out.elements.insert(col.str());
      }
    }
    return out;
  };
}

Adapter make_spanning_tree_adapter(const DataGraph& graph, const ValueIndex& values) {
  return [&graph, &values](const std::string& query) {
    AlgoResult out;
    auto results = spanning_tree_search(query, graph, 1);
    if (results.empty()) return out;
    const Schema& schema = *values.schema();

    std::vector<const GraphNode*> tree_nodes;
    for (const auto& node_id : results.front().node_ids) {
      for (const auto& node : graph.nodes()) {
        if (node.id == node_id) tree_nodes.push_back(&node);
      }
    }
    for (const auto* node : tree_nodes) {
      const TableDef& table = schema.table(node->table);
      for (const auto& col : table.columns) {
        if (col.kind == ValueKind::Text) {
          out.elements.insert(node->table + "." + col.name);
        }
      }
    }
    out.has_result = true;
    // Anchor heuristic: the first query value whose tokens all sit inside one
    // tuple of the tree.
    auto tokens = tokenize(query);
    for (const auto& match : match_values(tokens, values)) {
      if (match.element.is_table()) continue;
      auto value_tokens = tokenize(match.matched_text);
      for (const auto* node : tree_nodes) {
        bool all = true;
        for (const auto& t : value_tokens) {
          if (!node->tokens.count(t)) all = false;
        }
        if (all) {
          out.anchor = match.matched_text;
          break;
        }
      }
      if (!out.anchor.empty()) break;
    }
    return out;
  };
}

namespace {

AlgoResult subtree_result(const XmlTree& tree, std::size_t root,
                          const std::string& query, const ValueIndex& values) {
  AlgoResult out;
  out.has_result = true;
  std::set<std::string> texts;
  std::function<void(std::size_t)> walk = [&](std::size_t id) {
    const XmlNode& node = tree.node(id);
    if (!node.text.empty() && !node.source.is_table() && !node.source.table.empty()) {
      out.elements.insert(node.source.str());
      texts.insert(join_tokens(tokenize(node.text)));
    }
    for (auto child : tree.children_of(id)) walk(child);
  };
  walk(root);
  auto tokens = tokenize(query);
  for (const auto& match : match_values(tokens, values)) {
    if (match.element.is_table()) continue;
    if (texts.count(match.matched_text)) {
      out.anchor = match.matched_text;
      break;
    }
  }
  return out;
}

}  // namespace

Adapter make_lca_adapter(const XmlTree& tree, const ValueIndex& values) {
  return [&tree, &values](const std::string& query) {
    auto results = lca_search(query, tree);
    if (results.empty()) return AlgoResult{};
    return subtree_result(tree, results.front(), query, values);
  };
}

Adapter make_mlca_adapter(const XmlTree& tree, const ValueIndex& values) {
  return [&tree, &values](const std::string& query) {
    auto results = mlca_search(query, tree);
    if (results.empty()) return AlgoResult{};
    return subtree_result(tree, results.front(), query, values);
  };
}

const char* query_category_name(QueryCategory c) {
  switch (c) {
    case QueryCategory::SingleEntity: return "single-entity";
    case QueryCategory::EntityAttribute: return "entity-attribute";
    case QueryCategory::TwoEntity: return "two-entity";
    case QueryCategory::Complex: return "complex";
    case QueryCategory::FreeForm: return "free-form";
  }
  return "free-form";
}

namespace {

const std::vector<std::string>& aggregate_vocabulary() {
  static const std::vector<std::string> words{
      "highest", "lowest", "most", "best", "worst", "average",
      "count",   "total",  "top",  "number"};
  return words;
}

}  // namespace

QueryCategory categorize(const TypedTemplate& tmpl) {
  for (const auto& item : tmpl.items) {
    if (item.is_slot) continue;
    for (const auto& w : aggregate_vocabulary()) {
      if (item.token == w) return QueryCategory::Complex;
    }
  }
  std::size_t slots = tmpl.slot_count();
  if (slots >= 2) return QueryCategory::TwoEntity;
  if (slots == 1 && tmpl.literal_count() == 0) return QueryCategory::SingleEntity;
  if (slots == 1) return QueryCategory::EntityAttribute;
  return QueryCategory::FreeForm;
}

LogShape desk_log_shape() { return LogShape{}; }

LogShape rich_log_shape() {
  LogShape shape;
  shape.single_entity = 15;
  shape.entity_attribute = 40;
  shape.two_entity = 2;
  shape.complex_agg = 2;
  shape.free_form = 10;
  shape.template_rich = true;
  return shape;
}

GeneratedLog generate_query_log(const Dataset& dataset, const ValueIndex& index,
                                const LogShape& shape, std::uint64_t seed) {
  const Schema& schema = dataset.schema();
  Rng rng(seed);
  GeneratedLog out;

  // Entity pools: short text values, one list per column, entity tables first.
  struct Pool {
    std::string table;
    std::string column;
    std::vector<std::string> values;
  };
  std::vector<Pool> pools;
  for (const auto& table : schema.tables()) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (table.columns[c].kind != ValueKind::Text) continue;
      std::set<std::string> distinct;
      for (const auto& row : dataset.rows(table.name)) {
        auto tokens = tokenize(row[c]);
        if (!tokens.empty() && tokens.size() <= 3) {
          distinct.insert(join_tokens(tokens));
        }
      }
      if (!distinct.empty()) {
        pools.push_back(Pool{table.name, table.columns[c].name,
                             {distinct.begin(), distinct.end()}});
      }
    }
  }
  std::sort(pools.begin(), pools.end(), [&](const Pool& a, const Pool& b) {
    bool ea = schema.is_entity_table(a.table), eb = schema.is_entity_table(b.table);
    if (ea != eb) return ea;
    if (a.table != b.table) return a.table < b.table;
    return a.column < b.column;
  });

  std::set<std::string> used;
  auto add = [&](const std::string& query, long freq, QueryCategory want) {
    TypedTemplate tmpl = type_query(query, index, schema);
    QueryCategory got = categorize(tmpl);
    if (got != want || used.count(query)) return false;
    used.insert(query);
    out.entries.emplace_back(query, freq);
    out.counts[want] += 1;
    return true;
  };

  // Single-entity: every pool value is a candidate; titles and names read as
  // navigational queries and get the highest frequencies.
  {
    std::vector<std::pair<std::string, bool>> candidates;  // (value, entity table?)
    for (const auto& pool : pools) {
      for (const auto& value : pool.values) {
        candidates.emplace_back(value, schema.is_entity_table(pool.table));
      }
    }
    int added = 0;
    for (const auto& [value, is_entity] : candidates) {
      if (added >= shape.single_entity) break;
      long freq = is_entity ? long(8 + rng.below(5)) : long(2 + rng.below(3));
      if (add(value, freq, QueryCategory::SingleEntity)) ++added;
    }
  }

  // Entity-attribute: entity value plus a structure word. The movie+cast
  // pairing dominates, mirroring how cast lookups dominate title queries.
  {
    struct AttrPlan {
      std::string pool_table;
      std::string pool_column;
      std::vector<std::string> attributes;
      int want = 0;
      long freq_lo = 2, freq_hi = 4;
    };
    std::vector<AttrPlan> plans;
    if (!shape.template_rich) {
      plans.push_back({"movie", "title", {"cast"}, 2, 7, 9});
      plans.push_back({"person", "name", {"movies"}, 3, 2, 4});
      plans.push_back({"movie", "title", {"genre"}, 1, 2, 4});
      plans.push_back({"movie", "title", {"locations"}, 1, 2, 4});
      plans.push_back({"movie", "title", {"plot"}, 1, 2, 4});
    } else {
      plans.push_back({"movie", "title",
                       {"cast", "genre", "locations", "plot", "year", "summary", "review"},
                       0, 2, 6});
      plans.push_back({"person", "name",
                       {"movies", "filmography", "roles", "films"}, 0, 2, 6});
      plans.push_back({"genre", "name", {"movies"}, 0, 2, 4});
      plans.push_back({"cast", "role", {"movies"}, 0, 2, 4});
      plans.push_back({"locations", "place", {"movies"}, 0, 2, 4});
    }
    int total_added = 0;
    for (auto& plan : plans) {
      const Pool* pool = nullptr;
      for (const auto& p : pools) {
        if (p.table == plan.pool_table && p.column == plan.pool_column) pool = &p;
      }
      if (!pool) continue;
      std::vector<std::string> values = pool->values;
      shuffle(values, rng);
      int added = 0;
      for (const auto& attribute : plan.attributes) {
        for (const auto& value : values) {
          if (total_added >= shape.entity_attribute) break;
          if (plan.want > 0 && added >= plan.want) break;
          long freq = plan.freq_lo + long(rng.below(plan.freq_hi - plan.freq_lo + 1));
          if (add(value + " " + attribute, freq, QueryCategory::EntityAttribute)) {
            ++added;
            ++total_added;
          }
        }
      }
    }
  }

  // Two-entity: person + movie pairs.
  {
    const Pool* person = nullptr;
    const Pool* movie = nullptr;
    for (const auto& p : pools) {
      if (schema.is_entity_table(p.table)) {
        if (!person) {
          person = &p;
        } else if (p.table != person->table && !movie) {
          movie = &p;
        }
      }
    }
    int added = 0;
    if (person && movie) {
      for (const auto& a : person->values) {
        for (const auto& b : movie->values) {
          if (added >= shape.two_entity) break;
          if (add(a + " " + b, 1 + long(rng.below(2)), QueryCategory::TwoEntity)) ++added;
        }
        if (added >= shape.two_entity) break;
      }
    }
  }

  // Complex: aggregate-flavoured phrasings.
  {
    static const std::vector<std::string> stock{
        "highest box office revenue", "most popular movie", "best movies ever",
        "average movie length",       "top rated films"};
    int added = 0;
    for (const auto& q : stock) {
      if (added >= shape.complex_agg) break;
      if (add(q, 1 + long(rng.below(2)), QueryCategory::Complex)) ++added;
    }
  }

  // Free-form: wording with no recognizable entity or structure token.
  {
    static const std::vector<std::string> stock{
        "that film about dreams",     "space transponders",
        "funny lines to quote",       "what should i watch tonight",
        "films like the one with boats", "soundtrack from the eighties",
        "who played the villain",     "opening crawl text",
        "behind the scenes footage",  "deleted scenes collection",
        "famous trilogies ranked poorly", "black and white classics",
        "holiday specials nobody liked",  "bloopers and outtakes",
        "fan theories explained badly",   "sequels better than originals",
        "weird endings explained",        "longest end credits"};
    int added = 0;
    for (const auto& q : stock) {
      if (added >= shape.free_form) break;
      if (add(q, 1 + long(rng.below(3)), QueryCategory::FreeForm)) ++added;
    }
  }

  return out;
}

std::string serialize_query_log(const QueryLog& log) {
  std::ostringstream out;
  for (const auto& [query, freq] : log) {
    out << query << "\t" << freq << "\n";
  }
  return out.str();
}

}  // namespace qunits
