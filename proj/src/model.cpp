#include "tsg/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "tsg/error.hpp"

namespace tsg {

TsgModel::TsgModel(WeightedTree t, double scale) : tree(std::move(t)), c(scale) {
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidInput("TsgModel: scale c must be positive");
  tree.validate();
  leaves = tree.leaves();
  if (leaves.size() < 2) throw InvalidInput("TsgModel: need at least 2 leaves");
}

Eigen::MatrixXd rate_matrix(const TsgModel& model) {
  auto d = pairwise_distances(model.tree, model.leaves);
  Eigen::MatrixXd lambda = model.c * (-d.values.array()).exp().matrix();
  lambda.diagonal().setZero();
  return lambda;
}

Eigen::MatrixXd DcsbmParams::membership_matrix() const {
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n(), k());
  for (int i = 0; i < n(); ++i) Z(i, z[i]) = theta(i);
  return Z;
}

Eigen::MatrixXd DcsbmParams::population_adjacency() const {
  Eigen::MatrixXd Z = membership_matrix();
  return Z * B * Z.transpose();
}

DcsbmParams to_dcsbm(const TsgModel& model) {
  const WeightedTree& t = model.tree;
  DcsbmParams p;
  std::vector<NodeId> parent;
  std::vector<double> pendant;
  for (NodeId i : model.leaves) {
    const Neighbor& nb = t.neighbors(i).at(0);
    if (t.is_leaf(nb.node))
      throw InvalidInput("to_dcsbm: two leaves are joined directly; blocks are undefined");
    parent.push_back(nb.node);
    pendant.push_back(t.edge(nb.edge).weight);
  }
  p.block_nodes = parent;
  std::sort(p.block_nodes.begin(), p.block_nodes.end());
  p.block_nodes.erase(std::unique(p.block_nodes.begin(), p.block_nodes.end()), p.block_nodes.end());

  const int n = model.size();
  p.z.resize(n);
  p.theta.resize(n);
  const double root_c = std::sqrt(model.c);
  for (int i = 0; i < n; ++i) {
    p.z[i] = static_cast<int>(std::lower_bound(p.block_nodes.begin(), p.block_nodes.end(), parent[i]) -
                              p.block_nodes.begin());
    p.theta(i) = root_c * std::exp(-pendant[i]);
  }
  auto dz = pairwise_distances(t, p.block_nodes);
  p.B = (-dz.values.array()).exp().matrix();
  return p;
}

GgmCovariance dist_to_cov(const WeightedTree& tree) {
  std::vector<NodeId> all(tree.num_nodes());
  for (NodeId v = 0; v < tree.num_nodes(); ++v) all[v] = v;
  auto d = pairwise_distances(tree, all);
  if (!d.values.allFinite()) throw InvalidInput("dist_to_cov: non-finite distances");
  GgmCovariance cov;
  cov.labels = d.labels;
  cov.sigma = (-d.values.array()).exp().matrix();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov.sigma, Eigen::EigenvaluesOnly);
  cov.min_eigenvalue = es.eigenvalues().minCoeff();
  double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  if (cov.min_eigenvalue < -1e-10 * scale)
    throw NumericalFailure("dist_to_cov: covariance is not positive definite (min eigenvalue " +
                           std::to_string(cov.min_eigenvalue) + ")");
  return cov;
}

DistanceMatrix cov_to_dist(const Eigen::MatrixXd& sigma, const std::vector<std::string>& labels) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != static_cast<Eigen::Index>(labels.size()))
    throw InvalidInput("cov_to_dist: matrix and labels disagree in size");
  DistanceMatrix d{labels, Eigen::MatrixXd(sigma.rows(), sigma.cols())};
  for (Eigen::Index i = 0; i < sigma.rows(); ++i)
    for (Eigen::Index j = 0; j < sigma.cols(); ++j) {
      double s = std::abs(sigma(i, j));
      if (s == 0.0 || !std::isfinite(s))
        throw InvalidInput("cov_to_dist: entry (" + std::to_string(i) + "," + std::to_string(j) +
                           ") is zero or non-finite");
      d.values(i, j) = -std::log(s);
    }
  return d;
}

DistanceMatrix cov_to_dist(const GgmCovariance& cov) { return cov_to_dist(cov.sigma, cov.labels); }

Eigen::MatrixXd OsbmParams::rates() const {
  Eigen::MatrixXd inner = Z * B.asDiagonal() * Z.transpose();
  Eigen::MatrixXd out = theta.asDiagonal() * inner * theta.asDiagonal();
  out.diagonal().setZero();
  return out;
}

OsbmParams to_osbm(const TsgModel& model, NodeId root) {
  const WeightedTree& t = model.tree;
  if (root < 0 || root >= t.num_nodes() || t.is_leaf(root))
    throw InvalidInput("to_osbm: root must be an internal node");
  RootedTree r(t, root);
  OsbmParams p;
  p.root = root;
  p.internal = t.internal_nodes();
  const int m = static_cast<int>(p.internal.size());
  std::vector<int> col(t.num_nodes(), -1);
  for (int a = 0; a < m; ++a) col[p.internal[a]] = a;

  p.node_theta.resize(m);
  p.B.resize(m);
  for (int a = 0; a < m; ++a) p.node_theta(a) = std::exp(-r.root_distance(p.internal[a]));
  for (int a = 0; a < m; ++a) {
    NodeId u = p.internal[a];
    if (u == root) {
      p.B(a) = 1.0;
      continue;
    }
    double tu = p.node_theta(a), tp = p.node_theta(col[r.parent(u)]);
    p.B(a) = 1.0 / (tu * tu) - 1.0 / (tp * tp);
    if (!(p.B(a) > 0.0))
      throw InvalidInput("to_osbm: nonpositive diagonal connectivity at an internal node "
                         "(negative or zero internal edge weight)");
  }

  const int n = model.size();
  p.Z = Eigen::MatrixXd::Zero(n, m);
  p.theta.resize(n);
  const double root_c = std::sqrt(model.c);
  for (int i = 0; i < n; ++i) {
    NodeId leaf = model.leaves[i];
    p.theta(i) = root_c * std::exp(-r.root_distance(leaf));
    for (NodeId u : r.ancestors(leaf)) p.Z(i, col[u]) = 1.0;
  }
  return p;
}

RdpgSample rdpg_sample(const TsgModel& model, int q, Rng& rng) {
  if (q < 1) throw InvalidInput("rdpg_sample: q must be at least 1");
  auto d = pairwise_distances(model.tree, model.leaves);
  Eigen::MatrixXd sigma = model.c * (-d.values.array()).exp().matrix();
  const int n = model.size();

  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    llt.compute(sigma + 1e-12 * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() != Eigen::Success)
      throw NumericalFailure("rdpg_sample: leaf covariance is not positive definite");
  }
  Eigen::MatrixXd L = llt.matrixL();

  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd xi(n, q);
  for (int col = 0; col < q; ++col)
    for (int i = 0; i < n; ++i) xi(i, col) = gauss(rng);
  RdpgSample s;
  s.X = L * xi;
  s.lambda = ((s.X * s.X.transpose()).array().abs() / q).matrix();
  s.lambda.diagonal().setZero();
  return s;
}

NodeId median_node(const RootedTree& rooted, NodeId i, NodeId j, NodeId l) {
  NodeId cands[3] = {rooted.lca(i, j), rooted.lca(i, l), rooted.lca(j, l)};
  NodeId best = cands[0];
  for (NodeId c : cands)
    if (rooted.level(c) > rooted.level(best)) best = c;
  return best;
}

NodeId median_node(const WeightedTree& tree, NodeId i, NodeId j, NodeId l) {
  for (NodeId v : {i, j, l})
    if (v < 0 || v >= tree.num_nodes()) throw InvalidInput("median_node: unknown node id");
  return median_node(RootedTree(tree, 0), i, j, l);
}

bool hse_check(const WeightedTree& tree, const std::vector<NodeId>& leaves,
               const Eigen::MatrixXd& lambda, double tol) {
  const int n = static_cast<int>(leaves.size());
  if (lambda.rows() != n || lambda.cols() != n)
    throw InvalidInput("hse_check: rate matrix size does not match leaf count");
  RootedTree rooted(tree, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      std::map<NodeId, double> ratio;
      for (int l = 0; l < n; ++l) {
        if (l == i || l == j) continue;
        NodeId m = median_node(rooted, leaves[i], leaves[j], leaves[l]);
        double r = lambda(i, l) / lambda(j, l);
        auto [it, fresh] = ratio.emplace(m, r);
        if (!fresh && std::abs(it->second - r) > tol * std::max(std::abs(it->second), std::abs(r)))
          return false;
      }
    }
  return true;
}

bool hse_check(const TsgModel& model, double tol) {
  if (model.size() < 3) return true;
  return hse_check(model.tree, model.leaves, rate_matrix(model), tol);
}

}  // namespace tsg
