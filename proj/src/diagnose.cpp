#include "tsg/diagnose.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "tsg/error.hpp"
#include "tsg/generate.hpp"

namespace tsg {

namespace {

template <class Matrix>
SplittingVector splitting_impl(const Matrix& a, const EigOptions& base) {
  if (a.rows() < 3) throw InvalidInput("splitting_vector: need at least three nodes");
  EigOptions opt = base;
  opt.k = 2;
  opt.target = EigTarget::algebraic;
  EigenPairs p = top_k_eigs(a, opt);
  SplittingVector s;
  s.leading_eigenvalue = p.values(0);
  s.eigenvalue = p.values(1);
  s.x = p.vectors.col(1);
  // With a repeated top eigenvalue the second vector is arbitrary within a
  // plane; take the direction orthogonal to 1 and point its largest entry up.
  if (p.values(0) - p.values(1) <= 1e-9 * std::max(1.0, std::abs(p.values(0)))) {
    Eigen::VectorXd y = s.x * p.vectors.col(0).sum() - p.vectors.col(0) * s.x.sum();
    if (y.norm() > 1e-8) {
      s.x = y.normalized();
      Eigen::Index big;
      s.x.cwiseAbs().maxCoeff(&big);
      if (s.x(big) < 0) s.x = -s.x;
    }
  }
  s.weak = std::abs(s.eigenvalue) <= 1e-8 * std::max(1e-300, std::abs(s.leading_eigenvalue));
  return s;
}

double sample_sd(const Eigen::VectorXd& x) {
  if (x.size() < 2) return 0.0;
  double mean = x.mean();
  return std::sqrt((x.array() - mean).square().sum() / (x.size() - 1));
}

constexpr int kGrid = 512;

}  // namespace

SplittingVector splitting_vector(const SparseGraph& a, const EigOptions& opt) {
  return splitting_impl(a.matrix(), opt);
}

SplittingVector splitting_vector(const Eigen::MatrixXd& a, const EigOptions& opt) {
  return splitting_impl(a, opt);
}

std::vector<double> concentration_stats(const Eigen::VectorXd& x, const std::vector<double>& c_list) {
  const double sd = sample_sd(x);
  std::vector<double> out;
  for (double c : c_list) {
    long hits = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) hits += std::abs(x(i)) < c * sd;
    out.push_back(x.size() ? static_cast<double>(hits) / x.size() : 0.0);
  }
  return out;
}

int kde_modes(const Eigen::VectorXd& x, double h) {
  if (x.size() == 0) throw InvalidInput("kde_modes: empty sample");
  if (!(h > 0.0)) throw InvalidInput("kde_modes: bandwidth must be positive");
  const double lo = x.minCoeff() - 3 * h, hi = x.maxCoeff() + 3 * h;
  const double step = (hi - lo) / (kGrid - 1);

  std::vector<double> bins(kGrid, 0.0);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double t = (x(i) - lo) / step;
    int j = std::clamp(static_cast<int>(t), 0, kGrid - 2);
    double f = std::clamp(t - j, 0.0, 1.0);
    bins[j] += 1.0 - f;
    bins[j + 1] += f;
  }
  std::vector<double> kernel(kGrid);
  for (int d = 0; d < kGrid; ++d) {
    double u = d * step / h;
    kernel[d] = std::exp(-0.5 * u * u);
  }
  std::vector<int> occupied;
  for (int j = 0; j < kGrid; ++j)
    if (bins[j] > 0.0) occupied.push_back(j);
  std::vector<double> f(kGrid, 0.0);
  for (int g = 0; g < kGrid; ++g)
    for (int j : occupied) f[g] += bins[j] * kernel[std::abs(g - j)];

  const double top = *std::max_element(f.begin(), f.end());
  int modes = 0;
  for (int g = 1; g + 1 < kGrid; ++g)
    if (f[g] > f[g - 1] && f[g] > f[g + 1] && f[g] > 1e-12 * top) ++modes;
  return modes;
}

double critical_bandwidth(const Eigen::VectorXd& x) {
  if (x.size() == 0) throw InvalidInput("critical_bandwidth: empty sample");
  const double range = x.maxCoeff() - x.minCoeff();
  if (!(range > 0.0)) return 0.0;
  double hi = std::max(sample_sd(x), 1e-12 * range);
  while (kde_modes(x, hi) > 1) hi *= 2;
  double lo = hi;
  while (kde_modes(x, lo) <= 1) {
    hi = lo;
    lo /= 2;
    if (lo < 1e-9 * range) return hi;
  }
  while (hi - lo > 1e-3 * hi) {
    double mid = 0.5 * (lo + hi);
    (kde_modes(x, mid) <= 1 ? hi : lo) = mid;
  }
  return hi;
}

SilvermanResult silverman_test(const Eigen::VectorXd& x, int bootstrap, Rng& rng) {
  if (x.size() < 10) throw InvalidInput("silverman_test: need at least 10 observations");
  if (bootstrap < 1) throw InvalidInput("silverman_test: bootstrap count must be positive");
  if (!x.allFinite()) throw InvalidInput("silverman_test: non-finite observation");
  SilvermanResult res;
  res.h_crit = critical_bandwidth(x);
  if (res.h_crit == 0.0) {
    res.degenerate = true;
    res.p_value = 1.0;
    return res;
  }
  const Eigen::Index n = x.size();
  const double var = std::pow(sample_sd(x), 2);
  const double shrink = 1.0 / std::sqrt(1.0 + res.h_crit * res.h_crit / var);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::normal_distribution<double> noise;
  Eigen::VectorXd draw(n), y(n);
  int exceed = 0;
  // The resample's critical bandwidth exceeds h_crit exactly when its
  // estimate at h_crit is still multimodal.
  for (int b = 0; b < bootstrap; ++b) {
    for (Eigen::Index i = 0; i < n; ++i) draw(i) = x(pick(rng));
    double mean = draw.mean();
    for (Eigen::Index i = 0; i < n; ++i) y(i) = mean + shrink * (draw(i) - mean + res.h_crit * noise(rng));
    exceed += kde_modes(y, res.h_crit) > 1;
  }
  res.p_value = static_cast<double>(exceed) / bootstrap;
  return res;
}

SplittingDiagnostic diagnose_splitting(const SparseGraph& a, int bootstrap, Rng& rng, const EigOptions& opt) {
  SplittingDiagnostic d;
  d.split = splitting_vector(a, opt);
  d.degrees = a.neighbor_counts();
  d.sigma = sample_sd(d.split.x);
  d.fractions = concentration_stats(d.split.x, d.c_values);
  d.silverman = silverman_test(d.split.x, bootstrap, rng);
  return d;
}

void write_diagnostic_csv(std::ostream& os, const SplittingDiagnostic& d) {
  char buf[64];
  os << "node,x_hat,degree\n";
  for (Eigen::Index i = 0; i < d.split.x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", d.split.x(i));
    os << i << ',' << buf << ',' << d.degrees(i) << '\n';
  }
}

void write_diagnostic_summary(std::ostream& os, const SplittingDiagnostic& d) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  os << "{\n";
  os << "  \"n\": " << d.split.x.size() << ",\n";
  os << "  \"eigenvalue\": " << num(d.split.eigenvalue) << ",\n";
  os << "  \"weak_second_eigenvalue\": " << (d.split.weak ? "true" : "false") << ",\n";
  os << "  \"sigma\": " << num(d.sigma) << ",\n";
  for (std::size_t i = 0; i < d.c_values.size(); ++i)
    os << "  \"fraction_below_" << num(d.c_values[i]) << "_sigma\": " << num(d.fractions[i]) << ",\n";
  os << "  \"h_crit\": " << num(d.silverman.h_crit) << ",\n";
  os << "  \"silverman_degenerate\": " << (d.silverman.degenerate ? "true" : "false") << ",\n";
  os << "  \"p_value\": " << num(d.silverman.p_value) << "\n";
  os << "}\n";
}

TreeFitDiagnostic tree_fit_diagnostic(const DistanceMatrix& d, const WeightedTree& tree) {
  const int n = tree.num_nodes();
  if (n == 0) throw InvalidInput("tree_fit_diagnostic: empty tree");
  NodeId start = 0;
  for (NodeId v = 0; v < n; ++v)
    if (tree.label(v).empty()) {
      start = v;
      break;
    }
  std::vector<std::string> order;
  std::vector<NodeId> nodes;
  std::vector<char> seen(n, 0);
  std::vector<NodeId> stack{start};
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    if (seen[v]) continue;
    seen[v] = 1;
    if (!tree.label(v).empty()) {
      order.push_back(tree.label(v));
      nodes.push_back(v);
    }
    std::vector<NodeId> next;
    for (const auto& nb : tree.neighbors(v))
      if (!seen[nb.node]) next.push_back(nb.node);
    std::sort(next.rbegin(), next.rend());
    stack.insert(stack.end(), next.begin(), next.end());
  }
  if (static_cast<int>(order.size()) != d.size())
    throw InvalidInput("tree_fit_diagnostic: tree and matrix have different labels");

  TreeFitDiagnostic out;
  out.estimated = d.reordered(order);
  out.tree = pairwise_distances(tree, nodes);
  Eigen::MatrixXd diff = (out.estimated.values - out.tree.values).cwiseAbs();
  out.max_discrepancy = diff.maxCoeff();
  const int k = d.size();
  double sum = 0.0;
  for (int u = 0; u < k; ++u)
    for (int v = u + 1; v < k; ++v) sum += diff(u, v);
  out.mean_discrepancy = k > 1 ? sum / (k * (k - 1) / 2.0) : 0.0;
  return out;
}

TreeFitDiagnostic tree_fit_diagnostic(const EstimationResult& result) {
  return tree_fit_diagnostic(result.distances.D, result.tree);
}

BootstrapModel parse_bootstrap_model(const std::string& name) {
  if (name == "synthesis") return BootstrapModel::synthesis;
  if (name == "bipartition") return BootstrapModel::bipartition;
  throw InvalidInput("unknown bootstrap model '" + name + "' (synthesis, bipartition)");
}

BootstrapResult parametric_bootstrap(const SparseGraph& a, int k, BootstrapModel model, Rng& rng,
                                     const BootstrapOptions& opt) {
  BootstrapResult res;
  if (model == BootstrapModel::synthesis) {
    res.fitted = fitted_dcsbm(synthesis(a, k, opt.synthesis));
  } else {
    res.fitted = fitted_block_model(a, bipartition_baseline(a, k, opt.baseline, opt.synthesis.eig));
  }
  DcsbmEdgeSampler sampler(res.fitted);
  if (!(sampler.total() > 0.0)) throw NumericalFailure("parametric_bootstrap: fitted model has no edges");
  res.graph = algorithm1(a.total_weight() / 2.0, a.n(), std::cref(sampler), rng);
  res.diagnostic = diagnose_splitting(res.graph, opt.silverman_bootstrap, rng, opt.synthesis.eig);
  return res;
}

}  // namespace tsg
