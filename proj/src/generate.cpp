#include "tsg/generate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "tsg/error.hpp"

namespace tsg {

Categorical::Categorical(const std::vector<double>& weights) {
  cumulative_.reserve(weights.size());
  double acc = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("Categorical: invalid weight");
    acc += w;
    cumulative_.push_back(acc);
  }
}

int Categorical::operator()(Rng& rng) const {
  if (!(total() > 0.0)) throw NumericalFailure("Categorical: all weights are zero");
  std::uniform_real_distribution<double> u(0.0, total());
  double x = u(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
  int idx = static_cast<int>(it - cumulative_.begin());
  if (idx >= size()) {
    // x rounded up to the total: take the last index with positive weight.
    idx = size() - 1;
    while (idx > 0 && cumulative_[idx] == cumulative_[idx - 1]) --idx;
  }
  return idx;
}

EdgeLaw parse_edge_law(const std::string& name) {
  if (name == "poisson") return EdgeLaw::poisson;
  if (name == "bernoulli") return EdgeLaw::bernoulli;
  throw InvalidInput("unknown edge law '" + name + "' (expected poisson or bernoulli)");
}

SparseGraph sample_direct(const Eigen::MatrixXd& lambda, EdgeLaw law, Rng& rng) {
  const int n = static_cast<int>(lambda.rows());
  if (lambda.cols() != n) throw InvalidInput("sample_direct: rate matrix is not square");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double r = lambda(i, j);
      if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidInput("sample_direct: invalid rate");
      if (law == EdgeLaw::bernoulli && r > 1.0)
        throw InvalidInput("sample_direct: Bernoulli edges need every rate <= 1 (found " +
                           std::to_string(r) + ")");
    }
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double r = lambda(i, j);
      if (r <= 0.0) continue;
      double a;
      if (law == EdgeLaw::poisson) {
        std::poisson_distribution<long> pois(r);
        a = static_cast<double>(pois(rng));
      } else {
        std::bernoulli_distribution bern(r);
        a = bern(rng) ? 1.0 : 0.0;
      }
      if (a > 0.0) {
        t.emplace_back(i, j, a);
        t.emplace_back(j, i, a);
      }
    }
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return SparseGraph(std::move(m));
}

SparseGraph sample_direct(const TsgModel& model, EdgeLaw law, Rng& rng) {
  return sample_direct(rate_matrix(model), law, rng);
}

SparseGraph algorithm1(double zeta, int n, const EdgeSampler& sampler, Rng& rng) {
  if (!(zeta > 0.0) || !std::isfinite(zeta)) throw InvalidInput("algorithm1: zeta must be positive");
  if (n < 2) throw InvalidInput("algorithm1: need at least 2 nodes");
  std::poisson_distribution<long> count(zeta);
  const long m = count(rng);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * static_cast<std::size_t>(m));
  for (long e = 0; e < m; ++e) {
    auto [i, j] = sampler(rng);
    if (i == j || i < 0 || j < 0 || i >= n || j >= n)
      throw InvalidInput("algorithm1: edge sampler returned an invalid pair");
    t.emplace_back(i, j, 1.0);
    t.emplace_back(j, i, 1.0);
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return SparseGraph(std::move(a));
}

PairSampler::PairSampler(const Eigen::MatrixXd& w) {
  const int n = static_cast<int>(w.rows());
  std::vector<double> weights;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      pairs_.emplace_back(i, j);
      weights.push_back(w(i, j));
    }
  pick_ = Categorical(weights);
  total_ = pick_.total();
}

std::pair<int, int> PairSampler::operator()(Rng& rng) const { return pairs_[pick_(rng)]; }

DcsbmEdgeSampler::DcsbmEdgeSampler(const DcsbmParams& p) : k_(p.k()) {
  members_.assign(k_, {});
  std::vector<std::vector<double>> weights(k_);
  std::vector<double> mass(k_, 0.0);
  double self = 0.0;
  for (int i = 0; i < p.n(); ++i) {
    members_[p.z[i]].push_back(i);
    weights[p.z[i]].push_back(p.theta(i));
    mass[p.z[i]] += p.theta(i);
    self += p.theta(i) * p.theta(i) * p.B(p.z[i], p.z[i]);
  }
  std::vector<double> pair_mass;
  double ordered = 0.0;
  for (int u = 0; u < k_; ++u)
    for (int v = 0; v < k_; ++v) {
      double w = p.B(u, v) * mass[u] * mass[v];
      pair_mass.push_back(w);
      ordered += w;
    }
  for (int u = 0; u < k_; ++u) within_.emplace_back(weights[u]);
  block_pair_ = Categorical(pair_mass);
  total_ = 0.5 * (ordered - self);
}

std::pair<int, int> DcsbmEdgeSampler::operator()(Rng& rng) const {
  for (;;) {
    int bp = block_pair_(rng);
    int u = bp / k_, v = bp % k_;
    int i = members_[u][within_[u](rng)];
    int j = members_[v][within_[v](rng)];
    if (i != j) return {std::min(i, j), std::max(i, j)};
  }
}

TopDownGenerator TopDownGenerator::from_tsg(const TsgModel& model, NodeId root) {
  OsbmParams osbm = to_osbm(model, root);
  const WeightedTree& t = model.tree;
  RootedTree rooted(t, root);
  const int nn = t.num_nodes();

  TopDownGenerator g;
  g.root_ = root;
  g.theta_.assign(osbm.theta.data(), osbm.theta.data() + osbm.theta.size());
  g.steps_.assign(nn, {});
  g.stop_prob_.assign(nn, 0.0);
  g.leaves_below_.assign(nn, {});
  g.pick_.assign(nn, Categorical());

  std::vector<int> leaf_index(nn, -1);
  for (int i = 0; i < model.size(); ++i) leaf_index[model.leaves[i]] = i;

  // P(X = u) proportional to B_uu * vartheta(u), vartheta(u) = sum_{i != j below u} theta_i theta_j.
  double norm = 0.0;
  for (std::size_t a = 0; a < osbm.internal.size(); ++a) {
    NodeId u = osbm.internal[a];
    std::vector<double> w;
    double s = 0.0, s2 = 0.0;
    for (NodeId l : rooted.leaf_descendants(u)) {
      int idx = leaf_index[l];
      g.leaves_below_[u].push_back(idx);
      w.push_back(g.theta_[idx]);
      s += g.theta_[idx];
      s2 += g.theta_[idx] * g.theta_[idx];
    }
    g.pick_[u] = Categorical(w);
    g.stop_prob_[u] = osbm.B(a) * (s * s - s2);
    norm += g.stop_prob_[u];
  }
  for (double& p : g.stop_prob_) p /= norm;

  // Survivor sums S(h) = P(X in {h} u internal descendants of h).
  std::vector<double> survive(nn, 0.0);
  const auto& order = rooted.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeId v = *it;
    if (t.is_leaf(v)) continue;
    survive[v] += g.stop_prob_[v];
    if (rooted.parent(v) != kNoNode) survive[rooted.parent(v)] += survive[v];
  }
  for (NodeId v : order) {
    if (t.is_leaf(v) || survive[v] <= 0.0) continue;
    for (NodeId h : rooted.children(v))
      if (!t.is_leaf(h)) g.steps_[v].push_back({h, survive[h] / survive[v]});
    g.steps_[v].push_back({kNoNode, g.stop_prob_[v] / survive[v]});
  }
  return g;
}

NodeId TopDownGenerator::walk(Rng& rng) const {
  NodeId g = root_;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const auto& steps = steps_[g];
    double x = u(rng), acc = 0.0;
    NodeId next = steps.back().target;
    for (const auto& s : steps) {
      acc += s.prob;
      if (x < acc) {
        next = s.target;
        break;
      }
    }
    if (next == kNoNode) return g;
    g = next;
  }
}

std::pair<int, int> TopDownGenerator::operator()(Rng& rng) const {
  NodeId g = walk(rng);
  const auto& below = leaves_below_[g];
  if (below.size() < 2)
    throw NumericalFailure("top-down walk stopped at a node with fewer than two leaves");
  for (;;) {
    int i = below[pick_[g](rng)], j = below[pick_[g](rng)];
    if (i != j) return {std::min(i, j), std::max(i, j)};
  }
}

Eigen::MatrixXd TopDownGenerator::pair_probabilities() const {
  const int n = static_cast<int>(theta_.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t u = 0; u < stop_prob_.size(); ++u) {
    if (stop_prob_[u] <= 0.0) continue;
    double s = 0.0, s2 = 0.0;
    for (int i : leaves_below_[u]) {
      s += theta_[i];
      s2 += theta_[i] * theta_[i];
    }
    // Unordered pair: both orders of the two draws, hence 2 theta_i theta_j.
    const double scale = stop_prob_[u] / (s * s - s2);
    for (int i : leaves_below_[u])
      for (int j : leaves_below_[u])
        if (i != j) p(i, j) += scale * 2.0 * theta_[i] * theta_[j];
  }
  return p;
}

namespace {

int directed(const WeightedTree& t, NodeId from, int e) { return t.edge(e).u == from ? 2 * e : 2 * e + 1; }
NodeId head(const WeightedTree& t, int d) { return d % 2 == 0 ? t.edge(d / 2).v : t.edge(d / 2).u; }
NodeId tail(const WeightedTree& t, int d) { return d % 2 == 0 ? t.edge(d / 2).u : t.edge(d / 2).v; }

}  // namespace

int BottomUpGenerator::state(NodeId from, int edge) const { return directed(tree_, from, edge); }

BottomUpGenerator BottomUpGenerator::from_tsg(const TsgModel& model) {
  if (model.size() < 3) throw InvalidInput("bottom-up generator: need at least 3 leaves");
  BottomUpGenerator g;
  g.tree_ = model.tree;
  g.leaves_ = model.leaves;
  const WeightedTree& t = g.tree_;
  const int ne = t.num_edges(), nd = 2 * ne;
  g.leaf_index_.assign(t.num_nodes(), -1);
  for (int i = 0; i < model.size(); ++i) g.leaf_index_[model.leaves[i]] = i;

  // Height and smallest leaf id of each half-tree T_{head/tail}.
  std::vector<int> height(nd, -1);
  std::vector<NodeId> min_leaf(nd, kNoNode);
  std::function<void(int)> measure = [&](int d) {
    if (height[d] >= 0) return;
    NodeId from = tail(t, d), to = head(t, d);
    if (t.is_leaf(to)) {
      height[d] = 0;
      min_leaf[d] = to;
      return;
    }
    int h = 0;
    NodeId best = kNoNode;
    for (const auto& nb : t.neighbors(to)) {
      if (nb.node == from) continue;
      int sub = directed(t, to, nb.edge);
      measure(sub);
      h = std::max(h, height[sub] + 1);
      if (best == kNoNode || min_leaf[sub] < best) best = min_leaf[sub];
    }
    height[d] = h;
    min_leaf[d] = best;
  };
  for (int d = 0; d < nd; ++d) measure(d);

  // c~ in increasing half-tree height: c~_{r,u} = theta_{r,l} / P(u -> l | r),
  // with theta_{r,l} = exp(-d(r, l)) and l the smallest-id leaf below.
  std::vector<int> by_height(nd);
  for (int d = 0; d < nd; ++d) by_height[d] = d;
  std::stable_sort(by_height.begin(), by_height.end(), [&](int a, int b) { return height[a] < height[b]; });
  g.c_tilde_.assign(nd, 0.0);
  for (int d : by_height) {
    const double w = t.edge(d / 2).weight;
    if (height[d] == 0) {
      g.c_tilde_[d] = std::exp(-w);
      continue;
    }
    const NodeId target = min_leaf[d];
    double prob = 1.0, dist = w;
    NodeId from = tail(t, d), at = head(t, d);
    while (at != target) {
      double total = 0.0, chosen = 0.0;
      int chosen_d = -1;
      for (const auto& nb : t.neighbors(at)) {
        if (nb.node == from) continue;
        int sub = directed(t, at, nb.edge);
        total += g.c_tilde_[sub];
        if (min_leaf[sub] == target) {
          chosen = g.c_tilde_[sub];
          chosen_d = sub;
        }
      }
      prob *= chosen / total;
      dist += t.edge(chosen_d / 2).weight;
      from = at;
      at = head(t, chosen_d);
    }
    g.c_tilde_[d] = std::exp(-dist) / prob;
  }

  // Symmetrize from an internal root: c_{rho,u} = c~_{rho,u}, then
  // c_{u,w} = c_{p(u),u} * c~_{u,w} / c~_{u,p(u)}.
  NodeId rho = t.internal_nodes().front();
  RootedTree rooted(t, rho);
  g.c_.assign(ne, 0.0);
  for (NodeId v : rooted.order()) {
    for (NodeId w : rooted.children(v)) {
      int e = rooted.parent_edge(w);
      double ct = g.c_tilde_[directed(t, v, e)];
      if (v == rho) {
        g.c_[e] = ct;
      } else {
        int pe = rooted.parent_edge(v);
        g.c_[e] = g.c_[pe] * ct / g.c_tilde_[directed(t, v, pe)];
      }
    }
  }

  // Start distribution pi_i = C(i) / sum_k C(k), C(i) = sum_j lambda_ij.
  Eigen::MatrixXd lambda = rate_matrix(model);
  Eigen::VectorXd conn = lambda.rowwise().sum();
  g.pi_ = conn / conn.sum();
  g.start_ = Categorical(std::vector<double>(g.pi_.data(), g.pi_.data() + g.pi_.size()));

  g.next_.assign(nd, {});
  g.step_.assign(nd, Categorical());
  for (int d = 0; d < nd; ++d) {
    NodeId from = tail(t, d), to = head(t, d);
    if (t.is_leaf(to)) continue;
    std::vector<double> w;
    for (const auto& nb : t.neighbors(to)) {
      if (nb.node == from) continue;
      g.next_[d].push_back({nb.node, nb.edge});
      w.push_back(g.c_[nb.edge]);
    }
    g.step_[d] = Categorical(w);
  }
  return g;
}

double BottomUpGenerator::half_tree_constant(NodeId from, NodeId to) const {
  for (const auto& nb : tree_.neighbors(from))
    if (nb.node == to) return c_tilde_[state(from, nb.edge)];
  throw InvalidInput("half_tree_constant: nodes are not adjacent");
}

std::vector<std::pair<NodeId, NodeId>> BottomUpGenerator::walk(Rng& rng) const {
  NodeId start = leaves_[start_(rng)];
  const Neighbor& first = tree_.neighbors(start).at(0);
  int d = state(start, first.edge);
  std::vector<std::pair<NodeId, NodeId>> path{{start, first.node}};
  while (!tree_.is_leaf(head(tree_, d))) {
    NodeId at = head(tree_, d);
    const auto& [node, edge] = next_[d][step_[d](rng)];
    d = state(at, edge);
    path.emplace_back(at, node);
  }
  return path;
}

std::pair<int, int> BottomUpGenerator::operator()(Rng& rng) const {
  auto path = walk(rng);
  return {leaf_index_[path.front().first], leaf_index_[path.back().second]};
}

Eigen::MatrixXd BottomUpGenerator::absorption_probabilities() const {
  const int n = static_cast<int>(leaves_.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  RootedTree rooted(tree_, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      auto path = rooted.path(leaves_[i], leaves_[j]);
      double prob = 1.0;
      for (std::size_t s = 1; s + 1 < path.size(); ++s) {
        NodeId from = path[s - 1], at = path[s], to = path[s + 1];
        double total = 0.0, chosen = 0.0;
        for (const auto& nb : tree_.neighbors(at)) {
          if (nb.node == from) continue;
          total += c_[nb.edge];
          if (nb.node == to) chosen = c_[nb.edge];
        }
        prob *= chosen / total;
      }
      p(i, j) = prob;
    }
  return p;
}

}  // namespace tsg
