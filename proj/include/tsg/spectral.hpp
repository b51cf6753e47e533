#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "tsg/graph.hpp"

namespace tsg {

enum class EigTarget {
  magnitude,  // largest |lambda|, ties by larger signed value
  algebraic,  // largest signed lambda
};

struct EigOptions {
  int k = 1;
  EigTarget target = EigTarget::magnitude;
  double tol = 1e-10;        // residual bound relative to max(1, |lambda|)
  int dense_threshold = 2048;
  int max_iter = 0;          // Lanczos steps; 0 means min(n, 20k + 300)
  std::uint64_t seed = 0;    // Lanczos start vector
};

struct EigenPairs {
  Eigen::VectorXd values;   // ordered by the requested target
  Eigen::MatrixXd vectors;  // n x k, orthonormal columns, each with nonnegative sum
  double max_residual = 0.0;  // max_j ||A u_j - lambda_j u_j|| / max(1, |lambda_j|)
  bool dense = true;
};

/// Leading eigenpairs of a symmetric matrix: dense decomposition up to
/// `dense_threshold` rows, Lanczos with full reorthogonalization above.
/// Throws NumericalFailure if Lanczos cannot reach the tolerance.
EigenPairs top_k_eigs(const SparseMatrix& a, const EigOptions& opt);
EigenPairs top_k_eigs(const Eigen::MatrixXd& a, const EigOptions& opt);
/// Lanczos regardless of size (exposed for testing).
EigenPairs lanczos_eigs(const SparseMatrix& a, const EigOptions& opt);

/// v(R, U) evaluated on Y = U R: sum over columns of mean(Y^4) - mean(Y^2)^2.
double varimax_objective(const Eigen::MatrixXd& y);

struct VarimaxResult {
  Eigen::MatrixXd R;
  double objective = 0.0;
  double initial_objective = 0.0;
  int sweeps = 0;
  bool converged = false;
};

/// Pairwise (Jacobi) plane rotations maximizing the varimax criterion.
/// Stops when a sweep improves the objective by less than tol * |objective|.
VarimaxResult varimax(const Eigen::MatrixXd& u, double tol = 1e-8, int max_sweeps = 1000);

struct MembershipEstimate {
  Eigen::MatrixXd Z;          // n x k, sqrt(n) U R D
  Eigen::MatrixXd R;          // varimax rotation
  Eigen::VectorXd signs;      // diagonal of D, entries in {-1, 0, 1}
  Eigen::VectorXd eigenvalues;
  bool zero_column = false;   // some column sum was exactly 0
  bool varimax_converged = true;
};

/// Spectral embedding, varimax rotation and sign adjustment.
MembershipEstimate vsp(const SparseGraph& a, int k, const EigOptions& opt = {});
MembershipEstimate vsp(const Eigen::MatrixXd& a, int k, const EigOptions& opt = {});

}  // namespace tsg
