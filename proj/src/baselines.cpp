#include "qunits/baselines.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <sstream>

namespace qunits {

DataGraph DataGraph::build(const Dataset& dataset) {
  if (!dataset.finalized()) throw IntegrityError("dataset not finalized");
  const Schema& schema = dataset.schema();
  DataGraph graph;

  std::map<std::pair<std::string, std::string>, std::size_t> by_key;  // (table, pk)
  for (const auto& table : schema.tables()) {
    const std::size_t pk = table.pk_index();
    for (const auto& row : dataset.rows(table.name)) {
      GraphNode node;
      node.table = table.name;
      node.pk = row[pk];
      node.id = table.name + ":" + row[pk];
      for (const auto& token : tokenize(table.name)) node.tokens.insert(token);
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (table.columns[c].kind != ValueKind::Text) continue;
        for (const auto& token : tokenize(row[c])) node.tokens.insert(token);
      }
      by_key[{table.name, row[pk]}] = graph.nodes_.size();
      graph.nodes_.push_back(std::move(node));
    }
  }
  graph.adj_.resize(graph.nodes_.size());

  for (const auto& edge : schema.fk_edges()) {
    const TableDef& from = schema.table(edge.from_table);
    const std::size_t from_col = from.column_index(edge.from_column);
    const std::size_t from_pk = from.pk_index();
    for (const auto& row : dataset.rows(edge.from_table)) {
      auto child = by_key.at({edge.from_table, row[from_pk]});
      auto parent = by_key.at({edge.to_table, row[from_col]});
      graph.adj_[child].push_back(parent);
      graph.adj_[parent].push_back(child);
      ++graph.edge_count_;
    }
  }
  for (auto& neighbors : graph.adj_) {
    std::sort(neighbors.begin(), neighbors.end());
    neighbors.erase(std::unique(neighbors.begin(), neighbors.end()), neighbors.end());
  }
  return graph;
}

const std::vector<std::size_t>& DataGraph::adjacent(std::size_t node) const {
  return adj_[node];
}

namespace {

bool covers(const std::vector<std::size_t>& nodes, const DataGraph& graph,
            const std::vector<std::string>& keywords) {
  for (const auto& kw : keywords) {
    bool found = false;
    for (auto n : nodes) {
      if (graph.nodes()[n].tokens.count(kw)) {
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

bool connected(const std::vector<std::size_t>& nodes, const DataGraph& graph) {
  if (nodes.empty()) return false;
  std::set<std::size_t> in(nodes.begin(), nodes.end());
  std::set<std::size_t> reached{nodes[0]};
  std::queue<std::size_t> frontier;
  frontier.push(nodes[0]);
  while (!frontier.empty()) {
    auto n = frontier.front();
    frontier.pop();
    for (auto adj : graph.adjacent(n)) {
      if (in.count(adj) && reached.insert(adj).second) frontier.push(adj);
    }
  }
  return reached.size() == nodes.size();
}

bool is_minimal_cover(const std::vector<std::size_t>& nodes, const DataGraph& graph,
                      const std::vector<std::string>& keywords) {
  if (nodes.size() <= 1) return true;
  for (std::size_t drop = 0; drop < nodes.size(); ++drop) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (i != drop) rest.push_back(nodes[i]);
    }
    if (connected(rest, graph) && covers(rest, graph, keywords)) return false;
  }
  return true;
}

// Every connected subset containing node `start` using only nodes >= start in
// index order that are allowed; classic connected-subgraph enumeration.
void grow(const DataGraph& graph, std::vector<std::size_t>& subset,
          std::set<std::size_t>& in_subset, std::set<std::size_t>& banned,
          std::size_t max_nodes, const std::function<void()>& emit) {
  emit();
  if (subset.size() == max_nodes) return;

  // Extension points: neighbors of the subset, not banned, not in subset.
  std::vector<std::size_t> extensions;
  for (auto n : subset) {
    for (auto adj : graph.adjacent(n)) {
      if (!in_subset.count(adj) && !banned.count(adj)) extensions.push_back(adj);
    }
  }
  std::sort(extensions.begin(), extensions.end());
  extensions.erase(std::unique(extensions.begin(), extensions.end()), extensions.end());

  std::vector<std::size_t> banned_here;
  for (auto ext : extensions) {
    subset.push_back(ext);
    in_subset.insert(ext);
    grow(graph, subset, in_subset, banned, max_nodes, emit);
    in_subset.erase(ext);
    subset.pop_back();
    banned.insert(ext);  // later branches must not re-add it
    banned_here.push_back(ext);
  }
  for (auto ext : banned_here) banned.erase(ext);
}

TreeResult make_result(const std::vector<std::size_t>& nodes, const DataGraph& graph) {
  TreeResult result;
  for (auto n : nodes) result.node_ids.push_back(graph.nodes()[n].id);
  std::sort(result.node_ids.begin(), result.node_ids.end());
  result.size = result.node_ids.size();
  std::set<std::size_t> in(nodes.begin(), nodes.end());
  for (auto n : nodes) {
    for (auto adj : graph.adjacent(n)) {
      if (adj > n && in.count(adj)) {
        auto a = graph.nodes()[n].id;
        auto b = graph.nodes()[adj].id;
        if (b < a) std::swap(a, b);
        result.edges.emplace_back(a, b);
      }
    }
  }
  std::sort(result.edges.begin(), result.edges.end());
  return result;
}

}  // namespace

std::vector<TreeResult> spanning_tree_search(const std::string& query,
                                             const DataGraph& graph, std::size_t limit,
                                             std::size_t max_nodes) {
  auto keywords = tokenize(query);
  if (keywords.empty()) return {};
  for (const auto& kw : keywords) {
    bool anywhere = false;
    for (const auto& node : graph.nodes()) {
      if (node.tokens.count(kw)) anywhere = true;
    }
    if (!anywhere) return {};
  }

  std::vector<TreeResult> results;
  std::vector<std::size_t> subset;
  std::set<std::size_t> in_subset;
  for (std::size_t start = 0; start < graph.node_count(); ++start) {
    subset = {start};
    in_subset = {start};
    std::set<std::size_t> banned;
    for (std::size_t i = 0; i < start; ++i) banned.insert(i);
    grow(graph, subset, in_subset, banned, max_nodes, [&]() {
      if (covers(subset, graph, keywords) && is_minimal_cover(subset, graph, keywords)) {
        results.push_back(make_result(subset, graph));
      }
    });
  }
  std::sort(results.begin(), results.end(), [](const TreeResult& a, const TreeResult& b) {
    if (a.size != b.size) return a.size < b.size;
    return a.node_ids < b.node_ids;
  });
  if (results.size() > limit) results.resize(limit);
  return results;
}

NestingSpec default_nesting(const Schema& schema, const std::string& root_table) {
  NestingSpec spec;
  spec.root_table = root_table;
  for (const auto& edge : schema.fk_edges()) {
    if (edge.to_table == root_table) {
      spec.edges.push_back(NestingEdge{edge.from_table, root_table});
    }
  }
  return spec;
}

XmlTree to_xml_tree(const Dataset& dataset, const NestingSpec& nesting) {
  const Schema& schema = dataset.schema();
  if (!schema.has_table(nesting.root_table)) {
    throw NotFoundError("no table '" + nesting.root_table + "'");
  }
  // The nesting must be a tree rooted at root_table.
  std::map<std::string, std::vector<std::string>> children_of;
  std::set<std::string> seen{nesting.root_table};
  for (const auto& edge : nesting.edges) {
    if (!schema.has_table(edge.child_table) || !schema.has_table(edge.parent_table)) {
      throw NotFoundError("nesting references an unknown table");
    }
    if (!seen.insert(edge.child_table).second) {
      throw IntegrityError("nesting is not a tree: '" + edge.child_table +
                           "' appears twice");
    }
    children_of[edge.parent_table].push_back(edge.child_table);
  }
  for (const auto& edge : nesting.edges) {
    if (!seen.count(edge.parent_table)) {
      throw IntegrityError("nesting is not a tree: parent '" + edge.parent_table +
                           "' unreachable from root");
    }
  }

  std::set<std::string> nested_tables = seen;

  // Recursive row renderer.
  std::function<XmlNode(const std::string&, const Row&)> render_row =
      [&](const std::string& table_name, const Row& row) {
        const TableDef& table = schema.table(table_name);
        XmlNode node;
        node.name = table_name;
        node.source = SchemaElement{table_name, ""};
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
          const ColumnDef& col = table.columns[c];
          if (col.kind == ValueKind::Text) {
            XmlNode leaf;
            leaf.name = col.name;
            leaf.text = row[c];
            leaf.source = SchemaElement{table_name, col.name};
            node.children.push_back(std::move(leaf));
            continue;
          }
          // FK columns to tables outside the nesting resolve to the referenced
          // row's representative text value (person names under cast rows).
          for (const auto& edge : schema.fk_edges()) {
            if (edge.from_table != table_name || edge.from_column != col.name) continue;
            if (nested_tables.count(edge.to_table)) continue;
            auto repr = representative_text_column(dataset, edge.to_table);
            if (!repr) continue;
            const TableDef& target = schema.table(edge.to_table);
            const std::size_t target_pk = target.pk_index();
            const std::size_t repr_col = target.column_index(*repr);
            for (const auto& target_row : dataset.rows(edge.to_table)) {
              if (target_row[target_pk] == row[c]) {
                XmlNode leaf;
                leaf.name = *repr;
                leaf.text = target_row[repr_col];
                leaf.source = SchemaElement{edge.to_table, *repr};
                node.children.push_back(std::move(leaf));
                break;
              }
            }
          }
        }
        // Child rows, grouped by child table in nesting order, rows by pk.
        const std::size_t pk = table.pk_index();
        for (const auto& child_table : children_of[table_name]) {
          const FkEdge* edge = schema.edge_between(child_table, table_name);
          if (!edge) {
            throw IntegrityError("nesting edge '" + child_table + "' -> '" + table_name +
                                 "' has no FK edge");
          }
          const TableDef& child = schema.table(child_table);
          const std::size_t fk_col = child.column_index(edge->from_column);
          std::vector<const Row*> child_rows;
          for (const auto& child_row : dataset.rows(child_table)) {
            if (child_row[fk_col] == row[pk]) child_rows.push_back(&child_row);
          }
          const std::size_t child_pk = child.pk_index();
          const ValueKind pk_kind = child.column(child.primary_key).kind;
          std::sort(child_rows.begin(), child_rows.end(),
                    [&](const Row* a, const Row* b) {
                      return Dataset::compare_values(pk_kind, (*a)[child_pk],
                                                     (*b)[child_pk]) < 0;
                    });
          for (const auto* child_row : child_rows) {
            node.children.push_back(render_row(child_table, *child_row));
          }
        }
        return node;
      };

  XmlTree tree;
  tree.root_.name = "root";
  const TableDef& root_table = schema.table(nesting.root_table);
  const std::size_t root_pk = root_table.pk_index();
  const ValueKind root_pk_kind = root_table.column(root_table.primary_key).kind;
  std::vector<const Row*> roots;
  for (const auto& row : dataset.rows(nesting.root_table)) roots.push_back(&row);
  std::sort(roots.begin(), roots.end(), [&](const Row* a, const Row* b) {
    return Dataset::compare_values(root_pk_kind, (*a)[root_pk], (*b)[root_pk]) < 0;
  });
  for (const auto* row : roots) {
    tree.root_.children.push_back(render_row(nesting.root_table, *row));
  }
  tree.index_nodes();
  return tree;
}

void XmlTree::index_nodes() {
  flat_.clear();
  parents_.clear();
  depths_.clear();
  child_ids_.clear();
  std::function<void(const XmlNode&, std::size_t, std::size_t)> walk =
      [&](const XmlNode& node, std::size_t parent, std::size_t depth) {
        std::size_t id = flat_.size();
        flat_.push_back(&node);
        parents_.push_back(parent);
        depths_.push_back(depth);
        child_ids_.emplace_back();
        if (id != parent) child_ids_[parent].push_back(id);
        for (const auto& child : node.children) walk(child, id, depth + 1);
      };
  walk(root_, 0, 0);
}

std::string XmlTree::dump() const {
  std::ostringstream out;
  for (std::size_t id = 0; id < flat_.size(); ++id) {
    out << std::string(depths_[id] * 2, ' ') << flat_[id]->name << "\n";
    if (!flat_[id]->text.empty()) {
      out << std::string((depths_[id] + 1) * 2, ' ') << "#text " << flat_[id]->text
          << "\n";
    }
  }
  return out.str();
}

namespace {

// Keyword matching covers tag names and text content.
bool node_matches(const XmlNode& node, const std::string& keyword) {
  for (const auto& token : tokenize(node.name)) {
    if (token == keyword) return true;
  }
  for (const auto& token : tokenize(node.text)) {
    if (token == keyword) return true;
  }
  return false;
}

// subtree_mask[id] = bitset of keywords present in the subtree rooted at id.
std::vector<std::uint64_t> subtree_masks(const XmlTree& tree,
                                         const std::vector<std::string>& keywords) {
  std::vector<std::uint64_t> masks(tree.node_count(), 0);
  for (std::size_t id = tree.node_count(); id-- > 0;) {
    std::uint64_t mask = 0;
    for (std::size_t k = 0; k < keywords.size(); ++k) {
      if (node_matches(tree.node(id), keywords[k])) mask |= (1ull << k);
    }
    for (auto child : tree.children_of(id)) mask |= masks[child];
    masks[id] = mask;
  }
  return masks;
}

std::size_t lca_of(const XmlTree& tree, std::size_t a, std::size_t b) {
  while (a != b) {
    if (tree.depth(a) > tree.depth(b)) {
      a = tree.parent(a);
    } else if (tree.depth(b) > tree.depth(a)) {
      b = tree.parent(b);
    } else {
      a = tree.parent(a);
      b = tree.parent(b);
    }
  }
  return a;
}

std::size_t lca_of_set(const XmlTree& tree, const std::vector<std::size_t>& nodes) {
  std::size_t lca = nodes[0];
  for (std::size_t i = 1; i < nodes.size(); ++i) lca = lca_of(tree, lca, nodes[i]);
  return lca;
}

bool is_ancestor_or_self(const XmlTree& tree, std::size_t ancestor, std::size_t node) {
  while (true) {
    if (node == ancestor) return true;
    if (node == 0) return false;
    node = tree.parent(node);
  }
}

}  // namespace

std::vector<std::size_t> lca_search(const std::string& query, const XmlTree& tree) {
  auto keywords = tokenize(query);
  if (keywords.empty() || keywords.size() > 64) return {};
  auto masks = subtree_masks(tree, keywords);
  const std::uint64_t all = keywords.size() == 64 ? ~0ull : (1ull << keywords.size()) - 1;

  std::vector<std::size_t> results;
  for (std::size_t id = 0; id < tree.node_count(); ++id) {
    if (masks[id] != all) continue;
    bool child_has_all = false;
    for (auto child : tree.children_of(id)) {
      if (masks[child] == all) child_has_all = true;
    }
    if (!child_has_all) results.push_back(id);  // preorder = document order
  }
  return results;
}

std::vector<std::size_t> mlca_search(const std::string& query, const XmlTree& tree) {
  auto keywords = tokenize(query);
  if (keywords.empty()) return {};
  auto slca = lca_search(query, tree);
  if (slca.empty()) return {};

  std::vector<std::vector<std::size_t>> matches(keywords.size());
  for (std::size_t id = 0; id < tree.node_count(); ++id) {
    for (std::size_t k = 0; k < keywords.size(); ++k) {
      if (node_matches(tree.node(id), keywords[k])) matches[k].push_back(id);
    }
  }
  for (const auto& m : matches) {
    if (m.empty()) return {};
  }

  // A combination is meaningful when no keyword's match can be swapped for an
  // alternative giving a strictly deeper (more specific) LCA.
  std::set<std::size_t> meaningful;
  std::vector<std::size_t> combo(keywords.size(), 0);
  std::function<void(std::size_t)> walk = [&](std::size_t k) {
    if (k == keywords.size()) {
      std::vector<std::size_t> chosen(keywords.size());
      for (std::size_t i = 0; i < keywords.size(); ++i) chosen[i] = matches[i][combo[i]];
      std::size_t v = lca_of_set(tree, chosen);
      for (std::size_t i = 0; i < keywords.size(); ++i) {
        for (auto alt : matches[i]) {
          if (alt == chosen[i]) continue;
          auto swapped = chosen;
          swapped[i] = alt;
          std::size_t other = lca_of_set(tree, swapped);
          if (other != v && is_ancestor_or_self(tree, v, other)) return;  // deeper
        }
      }
      meaningful.insert(v);
      return;
    }
    for (std::size_t i = 0; i < matches[k].size(); ++i) {
      combo[k] = i;
      walk(k + 1);
    }
  };
  walk(0);

  std::vector<std::size_t> results;
  for (auto id : slca) {
    if (meaningful.count(id)) results.push_back(id);
  }
  return results;
}

}  // namespace qunits
