#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qunits/qunit.hpp"
#include "qunits/store.hpp"

namespace qunits {

struct QueriabilityScore {
  std::map<std::string, double> table_score;           // Q(T)
  std::map<std::string, double> column_distinct_ratio; // keyed "table.column"
};

// Q(T) = (|T| / max |T'|) * (1 + fk_degree(T)); zero when every table is
// empty. Column score is the distinct-value ratio.
QueriabilityScore queriability(const Dataset& dataset);

struct DerivationConfig {
  int k1 = 3;                      // anchor entities
  int k2 = 3;                      // neighbors per anchor
  long min_template_frequency = 1; // link-count threshold for rollup groups
  long min_signature_support = 1;  // documents per evidence cluster
};

struct TemplateItem {
  bool is_slot = false;
  SchemaElement element;  // set when is_slot
  std::string token;      // set when literal
};

struct TypedTemplate {
  std::vector<TemplateItem> items;
  long frequency = 1;

  std::string str() const;
  std::size_t slot_count() const;
  std::size_t literal_count() const;
};

// Replaces value spans with typed slots; tokens matching bare table names and
// unmatched tokens stay literal ("star wars cast" -> "[movie.title] cast").
TypedTemplate type_query(const std::string& query, const ValueIndex& index,
                         const Schema& schema);

using QueryLog = std::vector<std::pair<std::string, long>>;

// Tab-separated `query<TAB>frequency` lines; duplicate queries accumulate.
QueryLog parse_query_log(const std::string& text);

struct LinkWeight {
  SchemaElement target;
  long count = 0;
};

struct SchemaLinkWeights {
  std::string source_table;
  std::vector<LinkWeight> weights;  // count desc, then element name asc
};

// For every query, each recognized item links its table to every other
// recognized item, weighted by query frequency. Recognized items are value
// matches plus structural tokens naming a table (exact or trailing-s plural,
// resolved to its representative text column) or a column.
std::vector<SchemaLinkWeights> rollup(const QueryLog& log, const Dataset& dataset,
                                      const ValueIndex& index);

std::vector<QunitDefinition> derive_from_schema(const Dataset& dataset,
                                                const DerivationConfig& config);

struct DerivationOutcome {
  std::vector<QunitDefinition> definitions;
  std::vector<std::string> warnings;
};

DerivationOutcome derive_from_log(const QueryLog& log, const Dataset& dataset,
                                  const ValueIndex& index,
                                  const DerivationConfig& config);

struct DocumentNode {
  std::string element;
  std::string text;
  std::vector<DocumentNode> children;
};

// Line-oriented trees, two spaces of indent per depth level, each line
// `element-name: text`. Every depth-0 line starts a new document.
std::vector<DocumentNode> parse_documents(const std::string& text);

struct TypeSignature {
  std::map<std::string, long> counts;  // keyed "table.column", values > 0
};

// Value-match occurrence counts over all text nodes of one document.
TypeSignature signature(const DocumentNode& document, const ValueIndex& index);

DerivationOutcome derive_from_evidence(const std::vector<DocumentNode>& documents,
                                       const Dataset& dataset, const ValueIndex& index,
                                       const DerivationConfig& config);

}  // namespace qunits
