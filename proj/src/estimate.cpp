#include "tsg/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "tsg/error.hpp"

namespace tsg {

BnnEstimator parse_bnn_estimator(const std::string& name) {
  if (name == "quadratic") return BnnEstimator::quadratic;
  if (name == "plus_quadratic") return BnnEstimator::plus_quadratic;
  if (name == "plus_projected") return BnnEstimator::plus_projected;
  throw InvalidInput("unknown estimator '" + name + "' (quadratic, plus_quadratic, plus_projected)");
}

std::string to_string(BnnEstimator e) {
  switch (e) {
    case BnnEstimator::quadratic: return "quadratic";
    case BnnEstimator::plus_quadratic: return "plus_quadratic";
    case BnnEstimator::plus_projected: return "plus_projected";
  }
  return "?";
}

namespace {

std::vector<std::string> block_labels(int k) {
  std::vector<std::string> out;
  for (int j = 0; j < k; ++j) out.push_back("b" + std::to_string(j + 1));
  return out;
}

// Loadings L with B^nn = L^T A L before clipping.
Eigen::MatrixXd loadings(const Eigen::MatrixXd& z, BnnEstimator estimator) {
  const double n = static_cast<double>(z.rows());
  if (estimator == BnnEstimator::quadratic) return z / n;
  Eigen::MatrixXd zp = z.cwiseMax(0.0);
  if (estimator == BnnEstimator::plus_quadratic) return zp / n;
  Eigen::MatrixXd g = zp.transpose() * zp;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff()))
    throw NumericalFailure("tsgdist: Z_+^T Z_+ is singular (a column has no positive entry)");
  Eigen::MatrixXd ginv = ldlt.solve(Eigen::MatrixXd::Identity(g.rows(), g.cols()));
  return zp * ginv;
}

template <class Matrix>
DistanceEstimate tsgdist_impl(const Matrix& a, const Eigen::MatrixXd& z, double epsilon,
                              BnnEstimator estimator) {
  const int n = static_cast<int>(a.rows());
  const int k = static_cast<int>(z.cols());
  if (a.rows() != a.cols()) throw InvalidInput("tsgdist: adjacency is not square");
  if (z.rows() != n) throw InvalidInput("tsgdist: membership rows do not match the graph");
  if (k < 2) throw InvalidInput("tsgdist: need k >= 2");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InvalidInput("tsgdist: epsilon must be >= 0");
  if (!z.allFinite()) throw InvalidInput("tsgdist: membership has non-finite entries");

  DistanceEstimate est;
  est.labels = block_labels(k);
  est.estimator = estimator;
  est.epsilon = epsilon;

  Eigen::MatrixXd l = loadings(z, estimator);
  Eigen::MatrixXd al = a * l;
  est.M = l.transpose() * al;
  est.M = 0.5 * (est.M + est.M.transpose()).eval();

  est.clipped_low = (est.M.array() <= 0.0).matrix();
  est.Bnn = est.M.cwiseMax(0.0).array() + epsilon;
  est.S.resize(k);
  for (int u = 0; u < k; ++u) {
    if (!(est.Bnn(u, u) > 0.0))
      throw NumericalFailure("tsgdist: block " + est.labels[u] +
                             " has zero mass after regularization (empty block with epsilon = 0)");
    est.S(u) = std::sqrt(est.Bnn(u, u));
  }

  est.B = Eigen::MatrixXd::Ones(k, k);
  est.clipped_high = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(k, k, false);
  for (int u = 0; u < k; ++u)
    for (int v = u + 1; v < k; ++v) {
      double b = est.Bnn(u, v) / (est.S(u) * est.S(v));
      est.clipped_high(u, v) = est.clipped_high(v, u) = b > 1.0;
      est.B(u, v) = est.B(v, u) = std::min(b, 1.0);
    }

  Eigen::MatrixXd dmat(k, k);
  dmat.setZero();
  for (int u = 0; u < k; ++u)
    for (int v = u + 1; v < k; ++v) {
      if (!(est.B(u, v) > 0.0))
        throw NumericalFailure("tsgdist: blocks " + est.labels[u] + " and " + est.labels[v] +
                               " have no connecting mass; use epsilon > 0");
      dmat(u, v) = dmat(v, u) = -std::log(est.B(u, v));
    }
  est.D.labels = est.labels;
  est.D.values = dmat;

  // Delta-method standard deviation of D_uv, dominated by the B^nn_uv term.
  Eigen::MatrixXd l2 = l.cwiseProduct(l);
  Eigen::MatrixXd a_l2 = a * l2;
  Eigen::MatrixXd v = l2.transpose() * a_l2;
  est.sigma = Eigen::MatrixXd::Zero(k, k);
  for (int u = 0; u < k; ++u)
    for (int w = u + 1; w < k; ++w) {
      if (!(est.M(u, w) > 0.0)) continue;
      double scale = est.S(u) * est.S(w) * est.B(u, w);
      est.sigma(u, w) = est.sigma(w, u) = std::sqrt(std::max(0.0, 0.5 * (v(u, w) + v(w, u)))) / scale;
    }
  return est;
}

}  // namespace

DistanceEstimate tsgdist(const SparseGraph& a, const Eigen::MatrixXd& z, double epsilon,
                         BnnEstimator estimator) {
  return tsgdist_impl(a.matrix(), z, epsilon, estimator);
}

DistanceEstimate tsgdist(const Eigen::MatrixXd& a, const Eigen::MatrixXd& z, double epsilon,
                         BnnEstimator estimator) {
  if (!a.allFinite()) throw InvalidInput("tsgdist: adjacency has non-finite entries");
  return tsgdist_impl(a, z, epsilon, estimator);
}

double default_epsilon(double total_weight, int n) {
  if (n < 1) throw InvalidInput("default_epsilon: empty graph");
  return 0.01 * std::sqrt(std::max(0.0, total_weight) / n) / n;
}

double default_epsilon(const SparseGraph& a) { return default_epsilon(a.total_weight(), a.n()); }

double default_cutoff(const DistanceEstimate& est, bool* degenerate) {
  double worst = 0.0;
  for (int u = 0; u < est.sigma.rows(); ++u)
    for (int v = 0; v < est.sigma.cols(); ++v)
      if (u != v) worst = std::max(worst, est.sigma(u, v));
  if (degenerate) *degenerate = worst == 0.0;
  return 2.0 * worst;
}

WeightedTree neighbor_joining(const DistanceMatrix& d) {
  const int k = d.size();
  if (k < 2) throw InvalidInput("neighbor_joining: need at least two nodes");
  if (d.values.rows() != k || d.values.cols() != k)
    throw InvalidInput("neighbor_joining: matrix size does not match labels");
  if (!d.values.allFinite()) throw InvalidInput("neighbor_joining: non-finite distance");
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (d.values(i, j) != d.values(j, i))
        throw InvalidInput("neighbor_joining: distance matrix is not symmetric");

  WeightedTree tree;
  tree.set_relaxed(true);
  for (const auto& label : d.labels) tree.add_node(label);

  const int cap = 2 * k;
  std::vector<std::vector<double>> dist(cap, std::vector<double>(cap, 0.0));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) dist[i][j] = d.values(i, j);

  std::vector<int> active(k);
  for (int i = 0; i < k; ++i) active[i] = i;

  while (active.size() > 2) {
    const int r = static_cast<int>(active.size());
    std::vector<double> row(r, 0.0);
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b) row[a] += dist[active[a]][active[b]];

    int best_a = 0, best_b = 1;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < r; ++a)
      for (int b = a + 1; b < r; ++b) {
        double q = (r - 2) * dist[active[a]][active[b]] - row[a] - row[b];
        if (q < best) {
          best = q;
          best_a = a;
          best_b = b;
        }
      }

    const int i = active[best_a], j = active[best_b];
    const double dij = dist[i][j];
    const double li = 0.5 * dij + (row[best_a] - row[best_b]) / (2.0 * (r - 2));
    const double lj = dij - li;
    const NodeId x = tree.add_node();
    tree.add_edge(i, x, li);
    tree.add_edge(j, x, lj);
    for (int m : active) {
      if (m == i || m == j) continue;
      dist[x][m] = dist[m][x] = 0.5 * (dist[i][m] + dist[j][m] - dij);
    }
    active.erase(active.begin() + best_b);
    active.erase(active.begin() + best_a);
    active.push_back(x);
  }
  tree.add_edge(active[0], active[1], dist[active[0]][active[1]]);
  tree.validate();
  return tree;
}

WeightedTree sparse_nj(const DistanceMatrix& d, double phi, bool* all_contracted) {
  if (!(phi >= 0.0) || !std::isfinite(phi)) throw InvalidInput("sparse_nj: cutoff must be finite and >= 0");
  WeightedTree nj = neighbor_joining(d);
  bool any_internal = false;
  for (const auto& e : nj.edges())
    if (nj.label(e.u).empty() && nj.label(e.v).empty() && e.weight > phi) any_internal = true;
  if (all_contracted) *all_contracted = !any_internal;
  WeightedTree out = nj.collapse_edges(phi, true);
  out.set_relaxed(!out.satisfies_strict_rules());
  return out;
}

namespace {

template <class Matrix>
EstimationResult synthesis_impl(const Matrix& a, double total_weight, MembershipEstimate membership,
                                const SynthesisOptions& opt) {
  const int n = static_cast<int>(a.rows());
  EstimationResult res;
  res.membership = std::move(membership);
  res.epsilon = opt.epsilon ? *opt.epsilon : default_epsilon(total_weight, n);
  res.distances = tsgdist_impl(a, res.membership.Z, res.epsilon, opt.estimator);
  if (opt.phi) {
    res.phi = *opt.phi;
  } else {
    res.phi = default_cutoff(res.distances, &res.phi_degenerate);
  }
  res.tree = sparse_nj(res.distances.D, res.phi, &res.all_contracted);
  if (opt.twigs) res.full_tree = attach_twigs(res);
  return res;
}

void check_k(int n, int k) {
  if (k < 2) throw InvalidInput("synthesis: need k >= 2");
  if (k >= n) throw InvalidInput("synthesis: k must be smaller than the number of nodes");
}

}  // namespace

EstimationResult synthesis(const SparseGraph& a, int k, const SynthesisOptions& opt) {
  check_k(a.n(), k);
  return synthesis_impl(a.matrix(), a.total_weight(), vsp(a, k, opt.eig), opt);
}

EstimationResult synthesis(const Eigen::MatrixXd& a, int k, const SynthesisOptions& opt) {
  if (a.rows() != a.cols()) throw InvalidInput("synthesis: adjacency is not square");
  check_k(static_cast<int>(a.rows()), k);
  return synthesis_impl(a, a.sum(), vsp(a, k, opt.eig), opt);
}

WeightedTree attach_twigs(const WeightedTree& block_tree, const std::vector<std::string>& block_labels,
                          const Eigen::MatrixXd& z, const Eigen::VectorXd& s, int* flagged) {
  const int k = static_cast<int>(z.cols());
  if (static_cast<int>(block_labels.size()) != k || s.size() != k)
    throw InvalidInput("attach_twigs: block labels, scales and membership disagree");
  WeightedTree out = block_tree;
  std::vector<NodeId> block_node(k);
  for (int j = 0; j < k; ++j) block_node[j] = out.at(block_labels[j]);

  constexpr double kFloor = 1e-12;
  int bad = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index j;
    double zij = z.row(i).maxCoeff(&j);
    double arg = zij * s(j);
    if (!(zij > 0.0)) {
      ++bad;
      arg = kFloor;
    }
    arg = std::clamp(arg, kFloor, 1.0);
    NodeId leaf = out.add_node("v" + std::to_string(i));
    out.add_edge(block_node[j], leaf, -std::log(arg));
  }
  if (flagged) *flagged = bad;
  out.set_relaxed(!out.satisfies_strict_rules());
  return out;
}

WeightedTree attach_twigs(const EstimationResult& result, int* flagged) {
  return attach_twigs(result.tree, result.distances.labels, result.membership.Z, result.distances.S,
                      flagged);
}

BaselineVariant parse_baseline_variant(const std::string& name) {
  if (name == "adjacency") return BaselineVariant::adjacency;
  if (name == "laplacian") return BaselineVariant::laplacian;
  throw InvalidInput("unknown baseline variant '" + name + "' (adjacency, laplacian)");
}

namespace {

struct Cluster {
  std::vector<int> members;
  NodeId node = kNoNode;
  bool splittable = false;
  double lambda2 = 0.0;
  std::vector<int> left, right;
};

// Second-largest eigenpair of the cluster's adjacency (or normalized
// adjacency); fills the proposed sign split.
void evaluate(Cluster& c, const SparseMatrix& a, BaselineVariant variant, const EigOptions& opt,
              bool& empty_side) {
  const int m = static_cast<int>(c.members.size());
  c.splittable = false;
  if (m < 2) return;

  std::vector<int> local(a.rows(), -1);
  for (int i = 0; i < m; ++i) local[c.members[i]] = i;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd deg = Eigen::VectorXd::Zero(m);
  for (int jj = 0; jj < m; ++jj)
    for (SparseMatrix::InnerIterator it(a, c.members[jj]); it; ++it) {
      int ii = local[it.row()];
      if (ii < 0) continue;
      trip.emplace_back(ii, jj, it.value());
      deg(jj) += it.value();
    }
  if (variant == BaselineVariant::laplacian)
    for (auto& t : trip) {
      double s = deg(t.row()) * deg(t.col());
      t = Eigen::Triplet<double>(t.row(), t.col(), s > 0 ? t.value() / std::sqrt(s) : 0.0);
    }
  SparseMatrix sub(m, m);
  sub.setFromTriplets(trip.begin(), trip.end());

  double lambda1;
  Eigen::VectorXd v1, x;
  if (m <= std::max(opt.dense_threshold, 2)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(sub)};
    if (es.info() != Eigen::Success) throw NumericalFailure("bipartition: eigensolver failed");
    lambda1 = es.eigenvalues()(m - 1);
    c.lambda2 = es.eigenvalues()(m - 2);
    v1 = es.eigenvectors().col(m - 1);
    x = es.eigenvectors().col(m - 2);
  } else {
    EigOptions o = opt;
    o.k = 2;
    o.target = EigTarget::algebraic;
    EigenPairs p = top_k_eigs(sub, o);
    lambda1 = p.values(0);
    c.lambda2 = p.values(1);
    v1 = p.vectors.col(0);
    x = p.vectors.col(1);
  }
  // A repeated top eigenvalue (e.g. two equal disconnected parts) leaves the
  // second vector arbitrary within a plane; take the direction orthogonal to 1.
  if (lambda1 - c.lambda2 <= 1e-9 * std::max(1.0, std::abs(lambda1))) {
    Eigen::VectorXd y = x * v1.sum() - v1 * x.sum();
    if (y.norm() > 1e-8) x = y.normalized();
  }
  Eigen::Index big;
  x.cwiseAbs().maxCoeff(&big);
  if (x(big) < 0) x = -x;

  // Entries at zero (nodes outside the vector's support) join the negative side.
  const double tau = 1e-9 / std::sqrt(static_cast<double>(m));
  c.left.clear();
  c.right.clear();
  for (int i = 0; i < m; ++i) (x(i) > tau ? c.left : c.right).push_back(c.members[i]);
  if (c.left.empty() || c.right.empty()) {
    empty_side = true;
    return;
  }
  c.splittable = true;
}

}  // namespace

BaselineResult bipartition_baseline(const SparseGraph& a, int k, BaselineVariant variant,
                                    const EigOptions& opt) {
  const int n = a.n();
  if (k < 2) throw InvalidInput("bipartition_baseline: need k >= 2");
  if (k > n) throw InvalidInput("bipartition_baseline: k exceeds the number of nodes");

  BaselineResult res;
  WeightedTree& tree = res.tree;
  std::vector<Cluster> clusters(1);
  clusters[0].members.resize(n);
  for (int i = 0; i < n; ++i) clusters[0].members[i] = i;
  clusters[0].node = tree.add_node();
  evaluate(clusters[0], a.matrix(), variant, opt, res.stopped_early);

  while (static_cast<int>(clusters.size()) < k) {
    int pick = -1;
    for (int c = 0; c < static_cast<int>(clusters.size()); ++c)
      if (clusters[c].splittable && (pick < 0 || clusters[c].lambda2 > clusters[pick].lambda2)) pick = c;
    if (pick < 0) {
      res.stopped_early = true;
      break;
    }
    Cluster right;
    right.members = std::move(clusters[pick].right);
    right.node = tree.add_node();
    tree.add_edge(clusters[pick].node, right.node, 1.0);
    Cluster left;
    left.members = std::move(clusters[pick].left);
    left.node = tree.add_node();
    tree.add_edge(clusters[pick].node, left.node, 1.0);
    evaluate(left, a.matrix(), variant, opt, res.stopped_early);
    evaluate(right, a.matrix(), variant, opt, res.stopped_early);
    clusters[pick] = std::move(left);
    clusters.push_back(std::move(right));
  }

  res.clusters = static_cast<int>(clusters.size());
  res.membership.assign(n, -1);
  for (int c = 0; c < res.clusters; ++c) {
    tree.set_label(clusters[c].node, "b" + std::to_string(c + 1));
    for (int i : clusters[c].members) res.membership[i] = c;
  }
  tree.set_relaxed(!tree.satisfies_strict_rules());
  tree.validate();
  return res;
}

DcsbmParams fitted_dcsbm(const EstimationResult& result) {
  const Eigen::MatrixXd& z = result.membership.Z;
  const int n = static_cast<int>(z.rows());
  const int k = static_cast<int>(z.cols());
  DcsbmParams p;
  p.z.resize(n);
  p.theta.resize(n);
  for (int i = 0; i < n; ++i) {
    Eigen::Index j;
    double zij = z.row(i).maxCoeff(&j);
    p.z[i] = static_cast<int>(j);
    p.theta(i) = std::max(0.0, zij * result.distances.S(j));
  }
  for (const auto& label : result.distances.labels) p.block_nodes.push_back(result.tree.at(label));
  DistanceMatrix d = pairwise_distances(result.tree, p.block_nodes);
  p.B = (-d.values.array()).exp().matrix();
  if (p.B.rows() != k) throw NumericalFailure("fitted_dcsbm: block tree does not match the membership");
  return p;
}

DcsbmParams fitted_block_model(const SparseGraph& a, const BaselineResult& result) {
  const int n = a.n();
  const int k = result.clusters;
  DcsbmParams p;
  p.z = result.membership;
  p.theta = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd size = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < n; ++i) size(p.z[i]) += 1.0;
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(k, k);
  const SparseMatrix& m = a.matrix();
  for (int j = 0; j < m.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) mass(p.z[it.row()], p.z[j]) += it.value();

  for (int u = 0; u < k; ++u) p.block_nodes.push_back(result.tree.at("b" + std::to_string(u + 1)));
  p.B = Eigen::MatrixXd::Zero(k, k);
  for (int u = 0; u < k; ++u) {
    double pairs = size(u) * (size(u) - 1);
    p.B(u, u) = pairs > 0 ? mass(u, u) / pairs : 0.0;
  }
  RootedTree rooted(result.tree, 0);
  std::vector<double> across_mass(result.tree.num_nodes(), 0.0), across_pairs(result.tree.num_nodes(), 0.0);
  for (int u = 0; u < k; ++u)
    for (int v = u + 1; v < k; ++v) {
      NodeId g = rooted.lca(p.block_nodes[u], p.block_nodes[v]);
      across_mass[g] += mass(u, v);
      across_pairs[g] += size(u) * size(v);
    }
  for (int u = 0; u < k; ++u)
    for (int v = u + 1; v < k; ++v) {
      NodeId g = rooted.lca(p.block_nodes[u], p.block_nodes[v]);
      p.B(u, v) = p.B(v, u) = across_pairs[g] > 0 ? across_mass[g] / across_pairs[g] : 0.0;
    }
  return p;
}

}  // namespace tsg
