#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "qunits/store.hpp"

namespace qunits {

struct GraphNode {
  std::string id;     // "table:pk"
  std::string table;
  std::string pk;
  std::set<std::string> tokens;  // text-column values plus the table name
};

// One node per tuple, one undirected edge per FK-matched tuple pair.
class DataGraph {
 public:
  static DataGraph build(const Dataset& dataset);

  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<std::size_t>& adjacent(std::size_t node) const;
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edge_count_; }

 private:
  std::vector<GraphNode> nodes_;
  std::vector<std::vector<std::size_t>> adj_;
  std::size_t edge_count_ = 0;
};

struct TreeResult {
  std::vector<std::string> node_ids;  // sorted
  std::vector<std::pair<std::string, std::string>> edges;  // induced, sorted
  std::size_t size = 0;               // node count
};

// Exact enumeration of minimal connected subgraphs covering every query
// keyword, ascending by size then by node-id sequence, truncated to `limit`.
// Minimal means no node can be dropped without losing coverage or
// connectivity. Subgraphs larger than `max_nodes` are not considered.
std::vector<TreeResult> spanning_tree_search(const std::string& query,
                                             const DataGraph& graph,
                                             std::size_t limit = 10,
                                             std::size_t max_nodes = 6);

struct XmlNode {
  std::string name;
  std::string text;                  // set on leaves
  SchemaElement source;              // table.column for value leaves, table for rows
  std::vector<XmlNode> children;
};

struct NestingEdge {
  std::string child_table;   // rows nested under the row they reference
  std::string parent_table;
};

struct NestingSpec {
  std::string root_table;
  std::vector<NestingEdge> edges;
};

class XmlTree {
 public:
  XmlTree() = default;
  XmlTree(const XmlTree&) = delete;
  XmlTree& operator=(const XmlTree&) = delete;
  // flat_ points into root_; moving relocates the root node, so re-index.
  XmlTree(XmlTree&& other) noexcept : root_(std::move(other.root_)) { index_nodes(); }
  XmlTree& operator=(XmlTree&& other) noexcept {
    root_ = std::move(other.root_);
    index_nodes();
    return *this;
  }

  const XmlNode& root() const { return root_; }
  const XmlNode& node(std::size_t id) const { return *flat_[id]; }
  std::size_t node_count() const { return flat_.size(); }
  std::size_t parent(std::size_t id) const { return parents_[id]; }
  std::size_t depth(std::size_t id) const { return depths_[id]; }
  const std::vector<std::size_t>& children_of(std::size_t id) const {
    return child_ids_[id];
  }

  // Indented `element` / `#text value` lines.
  std::string dump() const;

  friend XmlTree to_xml_tree(const Dataset& dataset, const NestingSpec& nesting);

 private:
  void index_nodes();

  XmlNode root_;
  std::vector<const XmlNode*> flat_;   // preorder; id 0 is the root
  std::vector<std::size_t> parents_;
  std::vector<std::size_t> depths_;
  std::vector<std::vector<std::size_t>> child_ids_;
};

// Root-table rows under a synthetic root; child rows nested under the row
// they reference; text columns as leaves in schema order. FK columns whose
// referenced table is not part of the nesting are resolved to that table's
// representative text column (person names under cast rows).
XmlTree to_xml_tree(const Dataset& dataset, const NestingSpec& nesting);

// Movie-rooted nesting over the fixture-shaped schema: every table with an FK
// into the root table nests under it.
NestingSpec default_nesting(const Schema& schema, const std::string& root_table);

// Smallest elements whose subtree contains every query keyword (tag names and
// text both match), in document order.
std::vector<std::size_t> lca_search(const std::string& query, const XmlTree& tree);

// lca_search results that are the LCA of a meaningful keyword-match
// combination: no match of any contributing keyword can be swapped for an
// alternative yielding a strictly deeper LCA. Brute force over combinations.
std::vector<std::size_t> mlca_search(const std::string& query, const XmlTree& tree);

}  // namespace qunits
