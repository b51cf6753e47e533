// Shared generators for estimation tests.
#pragma once

#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tsg/model.hpp"
#include "tsg/tree.hpp"

namespace fixture {

// Observed (labeled) nodes of a block tree, in id order.
inline std::vector<tsg::NodeId> observed_nodes(const tsg::WeightedTree& t) {
  std::vector<tsg::NodeId> out;
  for (tsg::NodeId v = 0; v < t.num_nodes(); ++v)
    if (!t.label(v).empty()) out.push_back(v);
  return out;
}

inline std::set<std::string> observed_labels(const tsg::WeightedTree& t) {
  std::set<std::string> out;
  for (tsg::NodeId v : observed_nodes(t)) out.insert(t.label(v));
  return out;
}

// Random tree whose observed nodes include every node of degree < 3 and,
// typically, some internal nodes. Edge lengths are drawn from [lo, hi).
inline tsg::WeightedTree observed_tree(int n_leaves, double lo, double hi, tsg::Rng& rng) {
  using namespace tsg;
  WeightedTree t = random_tree(TreeKind::random_binary, n_leaves, WeightLaw::uniform(0.0, 1.0), rng);
  t = t.collapse_edges(0.3);
  std::uniform_real_distribution<double> w(lo, hi);
  for (int e = 0; e < t.num_edges(); ++e) t.set_weight(e, w(rng));
  t.set_relaxed(!t.satisfies_strict_rules());
  return t;
}

// Planted blockmodel over the observed nodes of `block_tree`:
// z(i) = i mod k, theta_i ~ U[theta_lo, 1], B_uv = exp(-d(u, v)).
inline tsg::DcsbmParams planted(const tsg::WeightedTree& block_tree, int n, tsg::Rng& rng,
                                double theta_lo = 0.5) {
  using namespace tsg;
  DcsbmParams p;
  p.block_nodes = observed_nodes(block_tree);
  const int k = static_cast<int>(p.block_nodes.size());
  p.B.resize(k, k);
  for (int u = 0; u < k; ++u)
    for (int v = 0; v < k; ++v)
      p.B(u, v) = std::exp(-oracle::path_distance(block_tree, p.block_nodes[u], p.block_nodes[v]));
  std::uniform_real_distribution<double> th(theta_lo, 1.0);
  p.z.resize(n);
  p.theta.resize(n);
  for (int i = 0; i < n; ++i) {
    p.z[i] = i % k;
    p.theta(i) = th(rng);
  }
  return p;
}

// Estimated column j -> true block, by majority of hard assignments.
inline std::vector<int> column_to_block(const Eigen::MatrixXd& z, const std::vector<int>& truth, int k) {
  Eigen::MatrixXi votes = Eigen::MatrixXi::Zero(z.cols(), k);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index j;
    z.row(i).maxCoeff(&j);
    ++votes(j, truth[i]);
  }
  std::vector<int> out(z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) votes.row(j).maxCoeff(&out[j]);
  return out;
}

// Copy of `t` with labels renamed through `rename` (unlisted labels kept).
inline tsg::WeightedTree relabel(const tsg::WeightedTree& t, const std::map<std::string, std::string>& rename) {
  tsg::WeightedTree out = t;
  for (tsg::NodeId v = 0; v < out.num_nodes(); ++v) {
    auto it = rename.find(out.label(v));
    if (it != rename.end()) out.set_label(v, it->second);
  }
  return out;
}

}  // namespace fixture
