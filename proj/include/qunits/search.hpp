#pragma once

#include <map>
#include <string>
#include <vector>

#include "qunits/qunit.hpp"
#include "qunits/store.hpp"

namespace qunits {

struct SearchConfig {
  double alpha = 0.5;       // definition-match weight; 1-alpha goes to tf-idf
  int top_k = 10;
  int max_definitions = 3;  // definitions whose instances are scored
};

struct QuerySegment {
  bool is_value = false;           // value or structural match vs free text
  std::size_t begin = 0;
  std::size_t end = 0;
  SchemaElement element;           // set when is_value
  std::vector<std::string> tokens;
};

struct Segmentation {
  std::vector<QuerySegment> segments;  // partition the query tokens, in order
  double score = 0.0;                  // covered tokens / total tokens

  std::vector<std::string> elements() const;  // deduplicated, sorted
  std::string str() const;
};

// All maximal non-overlapping subsets of candidate matches. Candidates are
// value-index hits plus single structural tokens: a table name or its
// trailing-s plural, or a column name. Ranked by coverage, then fewer
// segments, then lexicographically.
std::vector<Segmentation> segment(const std::string& query, const ValueIndex& index,
                                  const Schema& schema);

struct DefinitionMatch {
  std::string definition_id;
  double score = 0.0;    // jaccard * (1 + utility) / 2
  double jaccard = 0.0;
};

// Jaccard overlap between the segmentation's elements and the definition's
// elements (anchor column, anchor table, joined tables, projected columns),
// weighted by the utility prior.
std::vector<DefinitionMatch> match_definitions(const Segmentation& seg,
                                               const std::vector<QunitDefinition>& defs);

class InvertedIndex {
 public:
  struct Posting {
    std::size_t doc = 0;
    long tf = 0;
  };

  static InvertedIndex build(const std::vector<RenderedInstance>& instances);

  std::size_t doc_count() const { return docs_.size(); }
  const std::vector<RenderedInstance>& docs() const { return docs_; }
  long df(const std::string& token) const;
  double idf(const std::string& token) const;  // ln(1 + N/df)
  const std::vector<Posting>* postings(const std::string& token) const;

  // `token<TAB>df<TAB>id:tf;id:tf` lines sorted by token, postings by
  // instance id. Golden-file friendly.
  std::string dump() const;

 private:
  std::vector<RenderedInstance> docs_;
  std::map<std::string, std::vector<Posting>> postings_;
};

// Renders enumerate_instances() of every definition, in definition order.
std::vector<RenderedInstance> materialize(const std::vector<QunitDefinition>& defs,
                                          const Dataset& dataset);

struct RankedResult {
  std::string instance_id;
  std::string definition_id;
  double combined = 0.0;  // alpha*defmatch + (1-alpha)*tfidf/(tfidf+1)
  double defmatch = 0.0;
  double tfidf = 0.0;
};

std::vector<RankedResult> search(const std::string& query, const InvertedIndex& index,
                                 const std::vector<QunitDefinition>& defs,
                                 const ValueIndex& values, const SearchConfig& config);

struct Explanation {
  std::vector<Segmentation> segmentations;
  std::vector<DefinitionMatch> definition_matches;
  std::vector<RankedResult> results;
  double alpha = 0.5;

  std::string str() const;
};

// Same scoring path as search(), with the intermediate stages kept.
Explanation explain(const std::string& query, const InvertedIndex& index,
                    const std::vector<QunitDefinition>& defs, const ValueIndex& values,
                    const SearchConfig& config);

}  // namespace qunits
