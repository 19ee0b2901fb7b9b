#include "qunits/search.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace qunits {

std::vector<std::string> Segmentation::elements() const {
  std::set<std::string> out;
  for (const auto& seg : segments) {
    if (seg.is_value) out.insert(seg.element.str());
  }
  return {out.begin(), out.end()};
}

std::string Segmentation::str() const {
  std::string out;
  for (const auto& seg : segments) {
    if (seg.is_value) {
      out += "[" + seg.element.str() + "=" + join_tokens(seg.tokens) + "]";
    } else {
      out += "{" + join_tokens(seg.tokens) + "}";
    }
  }
  return out;
}

namespace {

struct Candidate {
  std::size_t begin = 0;
  std::size_t end = 0;
  SchemaElement element;
};

// Value-index hits at every position and length, plus structural single
// tokens: exact table names come from the index already; trailing-s plurals
// and column names are resolved here.
std::vector<Candidate> candidate_matches(const std::vector<std::string>& tokens,
                                         const ValueIndex& index, const Schema& schema) {
  std::vector<Candidate> out;
  for (std::size_t begin = 0; begin < tokens.size(); ++begin) {
    std::size_t longest = std::min(index.max_key_length(), tokens.size() - begin);
    for (std::size_t len = longest; len >= 1; --len) {
      if (const auto* elements = index.lookup(tokens, begin, len)) {
        out.push_back(Candidate{begin, begin + len, elements->front()});
      }
    }
    // Structural candidates for this single token.
    const std::string& token = tokens[begin];
    bool have_single = false;
    for (const auto& c : out) {
      if (c.begin == begin && c.end == begin + 1) have_single = true;
    }
    if (!have_single) {
      std::string singular;
      if (token.size() > 1 && token.back() == 's') singular = token.substr(0, token.size() - 1);
      const TableDef* table_hit = nullptr;
      for (const auto& table : schema.tables()) {
        if (token == table.name || singular == table.name) {
          table_hit = &table;
          break;
        }
      }
      if (table_hit) {
        out.push_back(Candidate{begin, begin + 1, SchemaElement{table_hit->name, ""}});
      } else {
        const TableDef* owner = nullptr;
        for (const auto& table : schema.tables()) {
          if (!table.has_column(token)) continue;
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
        if (owner) {
          out.push_back(Candidate{begin, begin + 1, SchemaElement{owner->name, token}});
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.begin != b.begin) return a.begin < b.begin;
    if (a.end != b.end) return a.end > b.end;  // longer first
    return a.element.str() < b.element.str();
  });
  return out;
}

void enumerate_subsets(const std::vector<Candidate>& candidates, std::size_t from,
                       std::size_t next_free, std::vector<const Candidate*>& chosen,
                       std::vector<std::vector<const Candidate*>>& subsets) {
  bool extended = false;
  for (std::size_t i = from; i < candidates.size(); ++i) {
    if (candidates[i].begin < next_free) continue;
    extended = true;
    chosen.push_back(&candidates[i]);
    enumerate_subsets(candidates, i + 1, candidates[i].end, chosen, subsets);
    chosen.pop_back();
  }
  if (!extended) subsets.push_back(chosen);  // maximal: nothing more fits
}

Segmentation build_segmentation(const std::vector<std::string>& tokens,
                                const std::vector<const Candidate*>& subset) {
  Segmentation seg;
  std::size_t covered = 0;
  std::size_t pos = 0;
  auto flush_free = [&](std::size_t until) {
    if (pos >= until) return;
    QuerySegment free;
    free.is_value = false;
    free.begin = pos;
    free.end = until;
    free.tokens.assign(tokens.begin() + pos, tokens.begin() + until);
    seg.segments.push_back(std::move(free));
    pos = until;
  };
  for (const auto* c : subset) {
    flush_free(c->begin);
    QuerySegment value;
    value.is_value = true;
    value.begin = c->begin;
    value.end = c->end;
    value.element = c->element;
    value.tokens.assign(tokens.begin() + c->begin, tokens.begin() + c->end);
    covered += c->end - c->begin;
    seg.segments.push_back(std::move(value));
    pos = c->end;
  }
  flush_free(tokens.size());
  seg.score = tokens.empty() ? 0.0 : double(covered) / double(tokens.size());
  return seg;
}

}  // namespace

std::vector<Segmentation> segment(const std::string& query, const ValueIndex& index,
                                  const Schema& schema) {
  auto tokens = tokenize(query);
  auto candidates = candidate_matches(tokens, index, schema);

  std::vector<std::vector<const Candidate*>> subsets;
  std::vector<const Candidate*> chosen;
  enumerate_subsets(candidates, 0, 0, chosen, subsets);

  std::vector<Segmentation> segmentations;
  std::set<std::string> seen;
  for (const auto& subset : subsets) {
    Segmentation seg = build_segmentation(tokens, subset);
    if (seen.insert(seg.str()).second) segmentations.push_back(std::move(seg));
  }
  std::sort(segmentations.begin(), segmentations.end(),
            [](const Segmentation& a, const Segmentation& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.segments.size() != b.segments.size()) {
                return a.segments.size() < b.segments.size();
              }
              return a.str() < b.str();
            });
  if (segmentations.empty()) {
    segmentations.push_back(build_segmentation(tokens, {}));
  }
  return segmentations;
}

std::vector<DefinitionMatch> match_definitions(const Segmentation& seg,
                                               const std::vector<QunitDefinition>& defs) {
  auto seg_elements = seg.elements();
  std::set<std::string> s(seg_elements.begin(), seg_elements.end());

  std::vector<DefinitionMatch> out;
  for (const auto& def : defs) {
    std::set<std::string> d;
    d.insert(def.base.anchor.str());
    d.insert(def.base.anchor.table);
    for (const auto& t : def.base.tables) d.insert(t);
    for (const auto& group : def.conversion.groups) {
      for (const auto& col : group.columns) d.insert(col.str());
    }
    std::size_t intersection = 0;
    for (const auto& e : s) {
      if (d.count(e)) ++intersection;
    }
    std::size_t uni = s.size() + d.size() - intersection;
    double jaccard = uni == 0 ? 0.0 : double(intersection) / double(uni);
    out.push_back(DefinitionMatch{def.id, jaccard * (1.0 + def.utility) / 2.0, jaccard});
  }
  std::sort(out.begin(), out.end(), [](const DefinitionMatch& a, const DefinitionMatch& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.definition_id < b.definition_id;
  });
  return out;
}

InvertedIndex InvertedIndex::build(const std::vector<RenderedInstance>& instances) {
  InvertedIndex index;
  std::set<std::string> ids;
  for (const auto& instance : instances) {
    if (!ids.insert(instance.instance_id).second) {
      throw IntegrityError("duplicate instance id '" + instance.instance_id + "'");
    }
  }
  index.docs_ = instances;
  for (std::size_t doc = 0; doc < index.docs_.size(); ++doc) {
    std::map<std::string, long> tf;
    for (const auto& token : index.docs_[doc].index_tokens) tf[token] += 1;
    for (const auto& [token, count] : tf) {
      index.postings_[token].push_back(Posting{doc, count});
    }
  }
  return index;
}

long InvertedIndex::df(const std::string& token) const {
  auto it = postings_.find(token);
  return it == postings_.end() ? 0 : long(it->second.size());
}

double InvertedIndex::idf(const std::string& token) const {
  long d = df(token);
  if (d == 0) return 0.0;
  return std::log(1.0 + double(docs_.size()) / double(d));
}

const std::vector<InvertedIndex::Posting>* InvertedIndex::postings(
    const std::string& token) const {
  auto it = postings_.find(token);
  return it == postings_.end() ? nullptr : &it->second;
}

std::string InvertedIndex::dump() const {
  std::ostringstream out;
  for (const auto& [token, postings] : postings_) {
    out << token << "\t" << postings.size() << "\t";
    std::vector<std::pair<std::string, long>> by_id;
    for (const auto& p : postings) by_id.emplace_back(docs_[p.doc].instance_id, p.tf);
    std::sort(by_id.begin(), by_id.end());
    for (std::size_t i = 0; i < by_id.size(); ++i) {
      if (i) out << ";";
      out << by_id[i].first << ":" << by_id[i].second;
    }
    out << "\n";
  }
  return out.str();
}

std::vector<RenderedInstance> materialize(const std::vector<QunitDefinition>& defs,
                                          const Dataset& dataset) {
  std::vector<RenderedInstance> out;
  for (const auto& def : defs) {
    for (const auto& instance : enumerate_instances(def, dataset)) {
      out.push_back(render(instance));
    }
  }
  return out;
}

namespace {

std::vector<RankedResult> rank(const std::string& query, const InvertedIndex& index,
                               const std::vector<QunitDefinition>& defs,
                               const ValueIndex& values, const SearchConfig& config,
                               std::vector<Segmentation>* segs_out,
                               std::vector<DefinitionMatch>* matches_out) {
  if (config.alpha < 0.0 || config.alpha > 1.0) {
    throw IntegrityError("alpha must lie in [0, 1]");
  }
  if (config.top_k <= 0) throw IntegrityError("top_k must be positive");
  if (config.max_definitions <= 0) throw IntegrityError("max_definitions must be positive");
  if (!values.schema()) throw IntegrityError("value index has no schema");

  auto segmentations = segment(query, values, *values.schema());
  auto matches = match_definitions(segmentations.front(), defs);
  if (segs_out) *segs_out = segmentations;
  if (matches_out) *matches_out = matches;

  std::vector<RankedResult> results;
  if (index.doc_count() == 0) return results;

  std::map<std::string, double> defmatch;
  std::size_t considered = std::min<std::size_t>(matches.size(), config.max_definitions);
  for (std::size_t i = 0; i < considered; ++i) {
    defmatch[matches[i].definition_id] = matches[i].score;
  }

  auto query_tokens = tokenize(query);
  std::map<std::size_t, double> tfidf;
  for (const auto& token : query_tokens) {
    const auto* postings = index.postings(token);
    if (!postings) continue;
    double idf = index.idf(token);
    for (const auto& posting : *postings) {
      tfidf[posting.doc] += double(posting.tf) * idf;
    }
  }

  for (std::size_t doc = 0; doc < index.doc_count(); ++doc) {
    const auto& instance = index.docs()[doc];
    auto dm = defmatch.find(instance.definition_id);
    if (dm == defmatch.end()) continue;
    double t = 0.0;
    if (auto it = tfidf.find(doc); it != tfidf.end()) t = it->second;
    RankedResult r;
    r.instance_id = instance.instance_id;
    r.definition_id = instance.definition_id;
    r.defmatch = dm->second;
    r.tfidf = t;
    r.combined = config.alpha * r.defmatch + (1.0 - config.alpha) * (t / (t + 1.0));
    results.push_back(std::move(r));
  }
  std::sort(results.begin(), results.end(), [](const RankedResult& a, const RankedResult& b) {
    if (a.combined != b.combined) return a.combined > b.combined;
    if (a.definition_id != b.definition_id) return a.definition_id < b.definition_id;
    return a.instance_id < b.instance_id;
  });
  if (results.size() > std::size_t(config.top_k)) results.resize(config.top_k);
  return results;
}

}  // namespace

std::vector<RankedResult> search(const std::string& query, const InvertedIndex& index,
                                 const std::vector<QunitDefinition>& defs,
                                 const ValueIndex& values, const SearchConfig& config) {
  return rank(query, index, defs, values, config, nullptr, nullptr);
}

Explanation explain(const std::string& query, const InvertedIndex& index,
                    const std::vector<QunitDefinition>& defs, const ValueIndex& values,
                    const SearchConfig& config) {
  Explanation ex;
  ex.alpha = config.alpha;
  ex.results = rank(query, index, defs, values, config, &ex.segmentations,
                    &ex.definition_matches);
  return ex;
}

std::string Explanation::str() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "segmentations:\n";
  for (const auto& seg : segmentations) {
    out << "  " << seg.score << "  " << seg.str() << "\n";
  }
  out << "definition matches:\n";
  for (const auto& m : definition_matches) {
    out << "  " << m.score << "  " << m.definition_id << " (jaccard " << m.jaccard
        << ")\n";
  }
  out << "results:\n";
  for (const auto& r : results) {
    out << "  " << r.combined << "  " << r.instance_id << "  = " << alpha << "*"
        << r.defmatch << " + " << (1.0 - alpha) << "*" << (r.tfidf / (r.tfidf + 1.0))
        << " (tfidf " << r.tfidf << ")\n";
  }
  return out.str();
}

}  // namespace qunits
