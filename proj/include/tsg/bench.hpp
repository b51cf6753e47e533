#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsg/estimate.hpp"
#include "tsg/tree.hpp"

namespace tsg {

/// Stable matching of estimated columns to true columns, with preferences
/// given by column correlation on both sides. Returns perm[j] = true column
/// matched to estimated column j.
std::vector<int> match_columns(const Eigen::MatrixXd& z_hat, const Eigen::MatrixXd& z_true);

/// Cutoff rule for the synthesis tree.
enum class CutoffRule {
  automatic,  // plain NJ (phi = 0) for binary tree kinds, default phi otherwise
  estimated,  // always 2 * max sigma
  fixed,      // `cutoff_value`
};

struct ExperimentConfig {
  TreeKind tree = TreeKind::star;
  int k = 8;
  int n = 0;  // 0 means 200 * k
  double weight = 0.0;  // constant edge weight; 0 keeps the kind's default law
  std::vector<double> degrees{50.0};
  int replicates = 20;
  double theta_min = 0.5;
  BnnEstimator estimator = BnnEstimator::quadratic;
  CutoffRule cutoff = CutoffRule::automatic;
  double cutoff_value = 0.0;
  bool baselines = true;
  std::uint64_t seed = 0;
  int dense_threshold = 256;

  int nodes() const { return n > 0 ? n : 200 * k; }
  void check() const;
};

/// Flat "key = value" text; '#' starts a comment. Unknown keys and bad
/// values throw InvalidInput naming the key.
ExperimentConfig parse_config(std::istream& is);
void write_config(std::ostream& os, const ExperimentConfig& cfg);

struct MethodMetrics {
  std::string method;
  int replicates = 0;
  int failures = 0;
  double rf_mean = 0.0, rf_sd = 0.0;  // normalized Robinson-Foulds
  double recovery = 0.0;              // fraction of replicates with RF = 0
  double b_error_mean = 0.0, b_error_sd = 0.0;  // ||B_hat - B||_F
  double membership_error_mean = 0.0, membership_error_sd = 0.0;
};

struct ConditionReport {
  double degree = 0.0;
  std::vector<MethodMetrics> methods;  // synthesis, then baselines if enabled
};

struct ReplicateData {
  WeightedTree truth;  // block tree; block t is its leaf with label truth_labels[t]
  std::vector<std::string> truth_labels;
  Eigen::MatrixXd B;   // exp(-d) between blocks, unit diagonal
  DcsbmParams params;  // theta carries the degree scaling
  SparseGraph graph;
};

/// Draws the block tree, the blockmodel and a graph with the target
/// expected degree.
ReplicateData simulate_replicate(const ExperimentConfig& cfg, double degree, Rng& rng);

/// Runs every condition (one per degree) and returns one report each.
/// Throws InvalidInput when the configuration has no replicates.
std::vector<ConditionReport> run_experiment(const ExperimentConfig& cfg);

/// One row per condition and method.
void write_report_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<ConditionReport>& rows);

}  // namespace tsg
