#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tsg/matrix_io.hpp"
#include "tsg/rng.hpp"
#include "tsg/tree.hpp"

namespace tsg {

/// A T-Stochastic Graph: graph nodes are the leaves of `tree`, and the edge
/// rate between leaves i and j is c * exp(-d(i, j)).
struct TsgModel {
  WeightedTree tree;
  double c = 1.0;
  /// Leaf ids in graph-node order.
  std::vector<NodeId> leaves;

  explicit TsgModel(WeightedTree t, double scale = 1.0);
  int size() const { return static_cast<int>(leaves.size()); }
};

/// lambda_ij = c * exp(-d(i, j)) for i != j, zero diagonal.
Eigen::MatrixXd rate_matrix(const TsgModel& model);

/// Degree-corrected blockmodel parameters. Blocks are the tree nodes adjacent
/// to a leaf, in increasing node id.
struct DcsbmParams {
  std::vector<int> z;
  Eigen::VectorXd theta;
  Eigen::MatrixXd B;
  std::vector<NodeId> block_nodes;

  int n() const { return static_cast<int>(z.size()); }
  int k() const { return static_cast<int>(B.rows()); }
  /// Z_ij = theta_i * 1{z(i) = j}.
  Eigen::MatrixXd membership_matrix() const;
  /// Expected adjacency Z B Z^T (diagonal included).
  Eigen::MatrixXd population_adjacency() const;
};

/// theta_i = sqrt(c) * exp(-w(i, p(i))), B_uv = exp(-d(u, v)).
DcsbmParams to_dcsbm(const TsgModel& model);

/// Covariance over all tree nodes (id order): Sigma_ij = exp(-d(i, j)).
struct GgmCovariance {
  std::vector<std::string> labels;
  Eigen::MatrixXd sigma;
  double min_eigenvalue = 0.0;
};

/// Throws NumericalFailure when the smallest eigenvalue is below -1e-10 * ||Sigma||.
GgmCovariance dist_to_cov(const WeightedTree& tree);
/// D_ij = -log |Sigma_ij|; zero entries are rejected.
DistanceMatrix cov_to_dist(const GgmCovariance& cov);
DistanceMatrix cov_to_dist(const Eigen::MatrixXd& sigma, const std::vector<std::string>& labels);

/// Overlapping blockmodel rooted at an internal node: lambda_ij =
/// theta_i theta_j sum_u Z_iu Z_ju B_uu over internal ancestors u.
struct OsbmParams {
  NodeId root = kNoNode;
  std::vector<NodeId> internal;   // column order of Z and B
  Eigen::MatrixXd Z;              // leaves x internal, binary
  Eigen::VectorXd B;              // diagonal of the connectivity matrix
  Eigen::VectorXd theta;          // per leaf, sqrt(c) * exp(-d(i, root))
  Eigen::VectorXd node_theta;     // per internal node, exp(-d(u, root))

  Eigen::MatrixXd rates() const;
};

OsbmParams to_osbm(const TsgModel& model, NodeId root);

struct RdpgSample {
  Eigen::MatrixXd X;       // leaves x q
  Eigen::MatrixXd lambda;  // |<x_i, x_j>| / q, zero diagonal
};

/// Draws q i.i.d. columns from N(0, Sigma_ll) with Sigma_ll = c * exp(-D) on the leaves.
RdpgSample rdpg_sample(const TsgModel& model, int q, Rng& rng);

/// The unique node on all three pairwise paths among i, j, l.
NodeId median_node(const RootedTree& rooted, NodeId i, NodeId j, NodeId l);
NodeId median_node(const WeightedTree& tree, NodeId i, NodeId j, NodeId l);

/// For every leaf pair (i, j), the ratio lambda_il / lambda_jl must be constant
/// (relative tolerance tol) over all l sharing the same median m(i, j, l).
bool hse_check(const WeightedTree& tree, const std::vector<NodeId>& leaves,
               const Eigen::MatrixXd& lambda, double tol = 1e-9);
bool hse_check(const TsgModel& model, double tol = 1e-9);

}  // namespace tsg
