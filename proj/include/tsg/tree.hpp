#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tsg/matrix_io.hpp"
#include "tsg/rng.hpp"

namespace tsg {

using NodeId = int;
constexpr NodeId kNoNode = -1;

struct Edge {
  NodeId u;
  NodeId v;
  double weight;
};

struct Neighbor {
  NodeId node;
  int edge;
};

/// Undirected weighted tree. Node ids are dense integers; labels live in a
/// side table (empty for unlabeled internal nodes).
///
/// Strict trees require every internal node to have degree >= 3 and every
/// edge weight to be nonzero. `relaxed` trees (NJ output, balanced binary
/// trees with a degree-2 root, trees under contraction) waive both.
class WeightedTree {
 public:
  WeightedTree() = default;

  NodeId add_node(std::string label = {});
  int add_edge(NodeId u, NodeId v, double weight);

  int num_nodes() const { return static_cast<int>(adj_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_.at(e); }
  void set_weight(int e, double w) { edges_.at(e).weight = w; }

  const std::vector<Neighbor>& neighbors(NodeId v) const { return adj_.at(v); }
  int degree(NodeId v) const { return static_cast<int>(adj_.at(v).size()); }
  bool is_leaf(NodeId v) const { return degree(v) == 1; }

  const std::string& label(NodeId v) const { return labels_.at(v); }
  void set_label(NodeId v, std::string label) { labels_.at(v) = std::move(label); }
  /// Node carrying `label`, or kNoNode.
  NodeId find(std::string_view label) const;
  /// Node carrying `label`; throws InvalidInput if absent.
  NodeId at(std::string_view label) const;

  /// Leaves in increasing id order.
  std::vector<NodeId> leaves() const;
  std::vector<NodeId> internal_nodes() const;
  std::vector<std::string> leaf_labels() const;

  bool relaxed() const { return relaxed_; }
  void set_relaxed(bool r) { relaxed_ = r; }

  /// Throws InvalidInput if the tree is not connected and acyclic, or (for
  /// strict trees) violates the degree/zero-weight rules.
  void validate() const;
  /// True when the tree would pass validate() as a strict tree.
  bool satisfies_strict_rules() const;

  /// Contracts every edge with |w| <= tol (or w <= tol when `signed_cut`).
  /// The surviving endpoint prefers labeled nodes; two labeled endpoints are
  /// never merged. Node ids are renumbered densely.
  WeightedTree collapse_edges(double cut, bool signed_cut = false) const;
  WeightedTree collapse_zero_edges(double tol = 0.0) const { return collapse_edges(tol); }
  /// Removes unlabeled degree-2 nodes, joining their two edges.
  WeightedTree suppress_degree_two() const;

 private:
  std::vector<std::vector<Neighbor>> adj_;
  std::vector<Edge> edges_;
  std::vector<std::string> labels_;
  bool relaxed_ = false;
};

/// A tree with a distinguished root and parent/child structure.
class RootedTree {
 public:
  RootedTree(const WeightedTree& tree, NodeId root);

  const WeightedTree& tree() const { return *tree_; }
  NodeId root() const { return root_; }
  NodeId parent(NodeId v) const { return parent_[v]; }
  int parent_edge(NodeId v) const { return parent_edge_[v]; }
  const std::vector<NodeId>& children(NodeId v) const { return children_[v]; }
  int level(NodeId v) const { return depth_[v]; }
  double root_distance(NodeId v) const { return root_dist_[v]; }
  /// Nodes in breadth-first order from the root.
  const std::vector<NodeId>& order() const { return order_; }

  /// Proper ancestors of v, nearest first, ending at the root.
  std::vector<NodeId> ancestors(NodeId v) const;
  /// Proper descendants of v.
  std::vector<NodeId> descendants(NodeId v) const;
  std::vector<NodeId> leaf_descendants(NodeId v) const;
  NodeId lca(NodeId a, NodeId b) const;
  /// Sum of edge weights on the path a..b (no cancellation: edges summed).
  double distance(NodeId a, NodeId b) const;
  /// Node sequence a..b.
  std::vector<NodeId> path(NodeId a, NodeId b) const;

 private:
  const WeightedTree* tree_;
  NodeId root_;
  std::vector<NodeId> parent_;
  std::vector<int> parent_edge_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<int> depth_;
  std::vector<double> root_dist_;
  std::vector<NodeId> order_;
};

/// d(i, j): sum of weights along the tree path.
double additive_distance(const WeightedTree& tree, NodeId i, NodeId j);

/// Pairwise distances among `subset`, labeled by node labels (or "#id").
DistanceMatrix pairwise_distances(const WeightedTree& tree, const std::vector<NodeId>& subset);
/// All-leaf distance matrix in leaf order.
DistanceMatrix leaf_distances(const WeightedTree& tree);

struct UltrametricResult {
  bool ultrametric = false;
  /// Root location: node id, or edge id plus offset from edge.u.
  std::optional<NodeId> root_node;
  std::optional<int> root_edge;
  double root_offset = 0.0;
  double height = 0.0;
};

/// Tests every node and the closed-form equidistant point of every edge as
/// a candidate root.
UltrametricResult is_ultrametric(const WeightedTree& tree, double tol = 1e-9);

/// A bipartition of the observed set, stored as the side *not* containing the
/// first observed label (sorted order), as a bitmask over sorted labels.
using Split = std::vector<std::uint64_t>;

struct SplitSet {
  std::vector<std::string> observed;  // sorted
  std::set<Split> splits;

  std::size_t size() const { return splits.size(); }
  bool contains(const std::vector<std::string>& side) const;
  /// Splits where both sides have at least two members.
  std::set<Split> nontrivial() const;
};

/// One split per edge whose removal leaves observed nodes on both sides.
SplitSet splits(const WeightedTree& tree, const std::vector<std::string>& observed);

/// Symmetric-difference size of nontrivial split sets; normalized divides by
/// the total number of nontrivial splits in both trees (0 when both empty).
double robinson_foulds(const WeightedTree& t1, const WeightedTree& t2,
                       const std::vector<std::string>& observed, bool normalized);

/// Split-set equality. Requires every node of degree < 3 to be observed;
/// throws InvalidInput when that precondition fails.
bool trees_equivalent(const WeightedTree& t1, const WeightedTree& t2,
                      const std::vector<std::string>& observed);

struct WeightLaw {
  enum class Kind { constant, uniform } kind = Kind::constant;
  double a = 1.0;  // constant value, or uniform lower bound
  double b = 1.0;  // uniform upper bound
  double shift = 0.0;

  static WeightLaw constant_weight(double w) { return {Kind::constant, w, w, 0.0}; }
  static WeightLaw uniform(double lo, double hi, double shift = 0.0) {
    return {Kind::uniform, lo, hi, shift};
  }
  double draw(Rng& rng) const;
  void check() const;
};

enum class TreeKind { balanced_binary, random_binary, random_multifurcating, star };

TreeKind parse_tree_kind(std::string_view name);
std::string_view to_string(TreeKind kind);

/// Leaves are labeled "1".."n" unless `leaf_prefix` is given.
/// random_binary draws lengths from `law` (default Uniform(0,1) + 0.1);
/// random_multifurcating additionally contracts internal edges < 0.5.
WeightedTree random_tree(TreeKind kind, int n_leaves, const WeightLaw& law, Rng& rng,
                         const std::string& leaf_prefix = "");
/// Default weight law per kind.
WeightLaw default_weight_law(TreeKind kind);

/// Newick text with 12 significant digits; internal labels emitted when set.
std::string to_newick(const WeightedTree& tree);
/// Parses Newick text; edge lengths are mandatory. Throws InvalidInput with
/// the character offset on malformed input.
WeightedTree parse_newick(std::string_view text);

}  // namespace tsg
