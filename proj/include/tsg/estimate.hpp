#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsg/graph.hpp"
#include "tsg/matrix_io.hpp"
#include "tsg/model.hpp"
#include "tsg/spectral.hpp"
#include "tsg/tree.hpp"

namespace tsg {

/// How B^nn is formed from A and the membership estimate.
enum class BnnEstimator {
  quadratic,       // (1/n^2) [Z^T A Z]_+
  plus_quadratic,  // (1/n^2) Z_+^T A Z_+
  plus_projected,  // (Z_+^T Z_+)^-1 Z_+^T A Z_+ (Z_+^T Z_+)^-1
};

BnnEstimator parse_bnn_estimator(const std::string& name);
std::string to_string(BnnEstimator e);

struct DistanceEstimate {
  std::vector<std::string> labels;  // b1..bk
  BnnEstimator estimator = BnnEstimator::quadratic;
  double epsilon = 0.0;
  Eigen::MatrixXd M;      // L^T A L before clipping (L = Z/n, Z_+/n or projected Z_+)
  Eigen::MatrixXd Bnn;    // clipped at 0, plus epsilon
  Eigen::VectorXd S;      // sqrt(diag Bnn)
  Eigen::MatrixXd B;      // S^-1 Bnn S^-1, clipped at 1
  Eigen::MatrixXd sigma;  // standard deviation estimate of each D entry (0 on the diagonal)
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> clipped_low;   // M_uv <= 0
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> clipped_high;  // scaled entry > 1
  DistanceMatrix D;

  int k() const { return static_cast<int>(labels.size()); }
};

/// Block distances from an adjacency matrix and a membership estimate.
/// Throws NumericalFailure when a diagonal entry of B^nn is zero.
DistanceEstimate tsgdist(const SparseGraph& a, const Eigen::MatrixXd& z, double epsilon,
                         BnnEstimator estimator = BnnEstimator::quadratic);
DistanceEstimate tsgdist(const Eigen::MatrixXd& a, const Eigen::MatrixXd& z, double epsilon,
                         BnnEstimator estimator = BnnEstimator::quadratic);

/// 0.01 * sqrt(average degree) / n.
double default_epsilon(double total_weight, int n);
double default_epsilon(const SparseGraph& a);

/// 2 * max sigma_uv. Sets *degenerate when every variance is zero (phi = 0).
double default_cutoff(const DistanceEstimate& est, bool* degenerate = nullptr);

/// Neighbor joining. Leaves carry the matrix labels; internal nodes are
/// unlabeled and the tree is marked relaxed (edge lengths may be <= 0).
WeightedTree neighbor_joining(const DistanceMatrix& d);

/// Neighbor joining followed by contraction of every edge with length <= phi.
/// Two observed nodes are never merged. Sets *all_contracted when no edge
/// between two unobserved nodes survives (a star, or fewer than four nodes).
WeightedTree sparse_nj(const DistanceMatrix& d, double phi, bool* all_contracted = nullptr);

struct SynthesisOptions {
  std::optional<double> epsilon;
  std::optional<double> phi;
  BnnEstimator estimator = BnnEstimator::quadratic;
  EigOptions eig;
  bool twigs = false;
};

struct EstimationResult {
  MembershipEstimate membership;
  DistanceEstimate distances;
  WeightedTree tree;                     // leaves and observed nodes labeled b1..bk
  std::optional<WeightedTree> full_tree;  // with graph nodes attached
  double epsilon = 0.0;
  double phi = 0.0;
  bool phi_degenerate = false;
  bool all_contracted = false;
};

EstimationResult synthesis(const SparseGraph& a, int k, const SynthesisOptions& opt = {});
/// Dense input, e.g. the population rate matrix (diagonal allowed).
EstimationResult synthesis(const Eigen::MatrixXd& a, int k, const SynthesisOptions& opt = {});

/// Attaches graph node i (label "v<i>") to block argmax_j Z_ij with length
/// -log(Z_ij * S_j), the argument clipped to [1e-12, 1]. Rows without a
/// positive entry are attached at the floor and counted in *flagged.
WeightedTree attach_twigs(const WeightedTree& block_tree, const std::vector<std::string>& block_labels,
                          const Eigen::MatrixXd& z, const Eigen::VectorXd& s, int* flagged = nullptr);
WeightedTree attach_twigs(const EstimationResult& result, int* flagged = nullptr);

enum class BaselineVariant { adjacency, laplacian };

BaselineVariant parse_baseline_variant(const std::string& name);

struct BaselineResult {
  WeightedTree tree;          // rooted binary tree, leaves b1..bm, unit edge lengths
  std::vector<int> membership;  // cluster index per node (label b<index+1>)
  int clusters = 0;
  bool stopped_early = false;  // a split produced an empty side
};

/// Recursive bi-partition: repeatedly splits the cluster whose second-largest
/// eigenvalue is largest by the sign of its eigenvector, until k clusters.
BaselineResult bipartition_baseline(const SparseGraph& a, int k, BaselineVariant variant,
                                    const EigOptions& opt = {});

/// Blockmodel implied by a synthesis fit: z(i) = argmax_j Z_ij,
/// theta_i = max(0, Z_iz * S_z) and B = exp(-d) over the estimated block tree.
DcsbmParams fitted_dcsbm(const EstimationResult& result);

/// Blockmodel implied by a bi-partition fit (theta = 1). Diagonal entries are
/// within-cluster edge densities; B_uv is the edge density across the split
/// at the common ancestor of u and v, so the fit is ultrametric.
DcsbmParams fitted_block_model(const SparseGraph& a, const BaselineResult& result);

}  // namespace tsg
