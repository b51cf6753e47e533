#pragma once

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tsg/graph.hpp"
#include "tsg/model.hpp"
#include "tsg/rng.hpp"

namespace tsg {

enum class EdgeLaw { poisson, bernoulli };

/// Draws an index with probability proportional to nonnegative weights.
class Categorical {
 public:
  Categorical() = default;
  explicit Categorical(const std::vector<double>& weights);
  int operator()(Rng& rng) const;
  double total() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  int size() const { return static_cast<int>(cumulative_.size()); }

 private:
  std::vector<double> cumulative_;
};

EdgeLaw parse_edge_law(const std::string& name);

/// Independent draws for every pair i < j, mirrored. Bernoulli requires
/// every rate to be at most 1.
SparseGraph sample_direct(const Eigen::MatrixXd& lambda, EdgeLaw law, Rng& rng);
SparseGraph sample_direct(const TsgModel& model, EdgeLaw law, Rng& rng);

/// Draws one edge (i, j), i != j.
using EdgeSampler = std::function<std::pair<int, int>(Rng&)>;

/// m ~ Poisson(zeta) i.i.d. edges from `sampler`; each edge adds 1 to both
/// A_ij and A_ji.
SparseGraph algorithm1(double zeta, int n, const EdgeSampler& sampler, Rng& rng);

/// Samples unordered pairs i < j with probability proportional to w_ij.
class PairSampler {
 public:
  explicit PairSampler(const Eigen::MatrixXd& w);
  std::pair<int, int> operator()(Rng& rng) const;
  /// Total weight over i < j.
  double total() const { return total_; }

 private:
  Categorical pick_;
  std::vector<std::pair<int, int>> pairs_;
  double total_ = 0.0;
};

/// Samples pairs with probability proportional to theta_i theta_j B_{z(i) z(j)}
/// (i != j) without forming the n x n rate matrix.
class DcsbmEdgeSampler {
 public:
  explicit DcsbmEdgeSampler(const DcsbmParams& params);
  std::pair<int, int> operator()(Rng& rng) const;
  /// Sum over i < j of theta_i theta_j B_{z(i) z(j)}.
  double total() const { return total_; }

 private:
  std::vector<std::vector<int>> members_;
  std::vector<Categorical> within_;
  Categorical block_pair_;
  int k_ = 0;
  double total_ = 0.0;
};

/// Walk from the root that absorbs at an internal node and then picks two
/// distinct leaves below it with probability proportional to theta_i theta_j.
class TopDownGenerator {
 public:
  static TopDownGenerator from_tsg(const TsgModel& model, NodeId root);

  /// Returns graph-node indices (i < j).
  std::pair<int, int> operator()(Rng& rng) const;
  /// Node where the walk stops (X_{tau-1}).
  NodeId walk(Rng& rng) const;

  struct Step {
    NodeId target;  // kNoNode means absorb
    double prob;
  };
  const std::vector<Step>& transitions(NodeId u) const { return steps_.at(u); }
  /// Exact probability of each unordered pair (symmetric, zero diagonal).
  Eigen::MatrixXd pair_probabilities() const;

  NodeId root() const { return root_; }

 private:
  NodeId root_ = kNoNode;
  std::vector<std::vector<Step>> steps_;
  std::vector<double> stop_prob_;            // P(X = u) for internal u
  std::vector<std::vector<int>> leaves_below_;  // graph-node indices
  std::vector<double> theta_;                // per graph node
  std::vector<Categorical> pick_;
};

/// Non-backtracking walk on directed edges, started at <i, p(i)> with
/// probability pi_i and absorbed on reaching a leaf.
class BottomUpGenerator {
 public:
  static BottomUpGenerator from_tsg(const TsgModel& model);

  /// Returns (start leaf, end leaf) as graph-node indices.
  std::pair<int, int> operator()(Rng& rng) const;
  /// The full sequence of directed edges visited, as (from, to) node pairs.
  std::vector<std::pair<NodeId, NodeId>> walk(Rng& rng) const;

  const Eigen::VectorXd& pi() const { return pi_; }
  /// Symmetric edge constant c_uv for tree edge e.
  double edge_constant(int e) const { return c_.at(e); }
  /// Half-tree constant for the directed edge from -> to (before symmetrizing).
  double half_tree_constant(NodeId from, NodeId to) const;
  /// P(end at j | start at i), from products along tree paths.
  Eigen::MatrixXd absorption_probabilities() const;

  const WeightedTree& tree() const { return tree_; }
  const std::vector<NodeId>& leaves() const { return leaves_; }

 private:
  int state(NodeId from, int edge) const;

  WeightedTree tree_;
  std::vector<NodeId> leaves_;
  std::vector<int> leaf_index_;  // node id -> graph index or -1
  Eigen::VectorXd pi_;
  std::vector<double> c_;        // per undirected edge
  std::vector<double> c_tilde_;  // per directed edge, index 2e (u->v) or 2e+1 (v->u)
  std::vector<std::vector<std::pair<NodeId, int>>> next_;  // per directed edge: (node, edge)
  std::vector<Categorical> step_;
  Categorical start_;
};

}  // namespace tsg
