#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qunits/baselines.hpp"
#include "qunits/derive.hpp"
#include "qunits/search.hpp"

namespace qunits {

// Typed templates aggregated over the whole log, frequency descending.
std::vector<TypedTemplate> extract_templates(const QueryLog& log, const ValueIndex& index,
                                             const Schema& schema);

struct GoldSpec {
  std::string definition_id;
  std::string anchor_value;
  std::set<std::string> required;   // "table.column"
  std::set<std::string> forbidden;
};

// Lines `template<TAB>definition-id<TAB>required:a,b<TAB>forbidden:c,d`.
std::map<std::string, GoldSpec> parse_gold_map(const std::string& text);

struct BenchQuery {
  std::string text;
  std::string template_str;
  GoldSpec gold;
};

struct Benchmark {
  std::vector<BenchQuery> queries;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

struct BenchmarkConfig {
  int top_templates = 3;
  int per_template = 2;
  std::uint64_t seed = 42;
};

// Samples `per_template` distinct matching log queries for each of the top
// templates. The expected anchor of a query is the text of its first value
// match. Templates without a gold entry or without matching queries are
// skipped with a warning.
Benchmark make_benchmark(const std::vector<TypedTemplate>& templates, const QueryLog& log,
                         const BenchmarkConfig& config,
                         const std::map<std::string, GoldSpec>& gold_map,
                         const ValueIndex& index, const Schema& schema);

struct AlgoResult {
  bool has_result = false;
  std::string anchor;
  std::set<std::string> elements;  // "table.column" present in the result
};

enum class ScoreBranch { Correct, Incomplete, Excessive, Incorrect, Uninformative };

const char* score_branch_name(ScoreBranch branch);

struct Scored {
  double score = 0.0;  // one of {0, 0.5, 1}
  ScoreBranch branch = ScoreBranch::Incorrect;
};

// Table-2-style rubric: 1.0 for the right anchor with all required and no
// forbidden elements; 0.5 for the right anchor with partial required coverage
// (incomplete) or forbidden elements present (excessive); 0 otherwise.
Scored score_result(const AlgoResult& result, const GoldSpec& gold);

using Adapter = std::function<AlgoResult(const std::string& query)>;

struct ScoreReport {
  std::vector<std::string> algorithms;
  std::vector<std::string> queries;
  std::vector<std::vector<double>> scores;  // [query][algorithm]
  std::vector<double> means;                // per algorithm
  std::vector<std::string> notes;           // adapter failures, branch records

  // Rows = queries, columns = algorithms, final row = means.
  std::string to_tsv() const;
};

ScoreReport run_comparison(const Benchmark& benchmark,
                           const std::vector<std::pair<std::string, Adapter>>& algorithms);

// Ready-made adapters over the shared fixture pipeline.
Adapter make_qunit_adapter(const InvertedIndex& index,
                           const std::vector<QunitDefinition>& defs,
                           const ValueIndex& values, const SearchConfig& config);
Adapter make_spanning_tree_adapter(const DataGraph& graph, const ValueIndex& values);
Adapter make_lca_adapter(const XmlTree& tree, const ValueIndex& values);
Adapter make_mlca_adapter(const XmlTree& tree, const ValueIndex& values);

enum class QueryCategory { SingleEntity, EntityAttribute, TwoEntity, Complex, FreeForm };

const char* query_category_name(QueryCategory c);

// Classified from the typed template: aggregate vocabulary makes a query
// complex; otherwise the slot/literal mix decides.
QueryCategory categorize(const TypedTemplate& tmpl);

struct LogShape {
  int single_entity = 15;
  int entity_attribute = 8;
  int two_entity = 1;
  int complex_agg = 1;
  int free_form = 15;
  bool template_rich = false;  // widen the attribute-template variety
};

LogShape desk_log_shape();
LogShape rich_log_shape();

struct GeneratedLog {
  QueryLog entries;
  std::map<QueryCategory, int> counts;
};

// Deterministic synthetic query log over the dataset's values. Single-entity
// queries are navigational and get the highest frequencies.
GeneratedLog generate_query_log(const Dataset& dataset, const ValueIndex& index,
                                const LogShape& shape, std::uint64_t seed);

std::string serialize_query_log(const QueryLog& log);

}  // namespace qunits
