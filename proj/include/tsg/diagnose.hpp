#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "tsg/estimate.hpp"
#include "tsg/graph.hpp"
#include "tsg/rng.hpp"
#include "tsg/spectral.hpp"

namespace tsg {

struct SplittingVector {
  Eigen::VectorXd x;  // unit norm, sum >= 0
  double eigenvalue = 0.0;
  double leading_eigenvalue = 0.0;
  bool weak = false;  // |second eigenvalue| negligible next to the first
};

/// Eigenvector of the second-largest (algebraic) eigenvalue of A.
SplittingVector splitting_vector(const SparseGraph& a, const EigOptions& opt = {});
SplittingVector splitting_vector(const Eigen::MatrixXd& a, const EigOptions& opt = {});

/// Fraction of entries with |x_i| < c * sd(x), for each c.
std::vector<double> concentration_stats(const Eigen::VectorXd& x, const std::vector<double>& c_list);

/// Number of strict local maxima of the Gaussian kernel density of x with
/// bandwidth h, evaluated (with linear binning) on a 512-point grid spanning
/// [min - 3h, max + 3h].
int kde_modes(const Eigen::VectorXd& x, double h);

/// Smallest bandwidth with a unimodal density estimate, by bisection to a
/// relative tolerance of 1e-3. Zero for a constant sample.
double critical_bandwidth(const Eigen::VectorXd& x);

struct SilvermanResult {
  double p_value = 1.0;
  double h_crit = 0.0;
  bool degenerate = false;  // constant sample; p = 1 by convention
};

/// Silverman's unimodality test with `bootstrap` smoothed resamples.
SilvermanResult silverman_test(const Eigen::VectorXd& x, int bootstrap, Rng& rng);

struct SplittingDiagnostic {
  SplittingVector split;
  Eigen::VectorXi degrees;  // distinct neighbours
  double sigma = 0.0;       // sample standard deviation of x
  std::vector<double> c_values{0.1, 0.05, 0.01};
  std::vector<double> fractions;
  SilvermanResult silverman;
};

SplittingDiagnostic diagnose_splitting(const SparseGraph& a, int bootstrap, Rng& rng,
                                       const EigOptions& opt = {});

/// CSV with columns node,x_hat,degree.
void write_diagnostic_csv(std::ostream& os, const SplittingDiagnostic& d);
/// Brace-delimited key/value summary (fractions, p-value, bandwidth).
void write_diagnostic_summary(std::ostream& os, const SplittingDiagnostic& d);

struct TreeFitDiagnostic {
  DistanceMatrix estimated;  // input distances, reordered
  DistanceMatrix tree;       // additive distances on the tree, same order
  double max_discrepancy = 0.0;
  double mean_discrepancy = 0.0;  // over pairs u < v
};

/// Compares block distances with those implied by a tree over the same
/// labels; rows follow the depth-first order of the tree's observed nodes.
TreeFitDiagnostic tree_fit_diagnostic(const DistanceMatrix& d, const WeightedTree& tree);
TreeFitDiagnostic tree_fit_diagnostic(const EstimationResult& result);

enum class BootstrapModel { synthesis, bipartition };

BootstrapModel parse_bootstrap_model(const std::string& name);

struct BootstrapOptions {
  SynthesisOptions synthesis;
  BaselineVariant baseline = BaselineVariant::adjacency;
  int silverman_bootstrap = 500;
};

struct BootstrapResult {
  DcsbmParams fitted;
  SparseGraph graph;
  SplittingDiagnostic diagnostic;
};

/// Fits the chosen model to A, draws a Poisson graph from it with the same
/// expected total weight as A, and diagnoses the simulated graph.
BootstrapResult parametric_bootstrap(const SparseGraph& a, int k, BootstrapModel model, Rng& rng,
                                     const BootstrapOptions& opt = {});

}  // namespace tsg
