#include "tsg/tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "tsg/error.hpp"

namespace tsg {

NodeId WeightedTree::add_node(std::string label) {
  adj_.emplace_back();
  labels_.push_back(std::move(label));
  return num_nodes() - 1;
}

int WeightedTree::add_edge(NodeId u, NodeId v, double weight) {
  if (u < 0 || v < 0 || u >= num_nodes() || v >= num_nodes())
    throw InvalidInput("add_edge: unknown node id");
  if (u == v) throw InvalidInput("add_edge: self-loop");
  if (!std::isfinite(weight)) throw InvalidInput("add_edge: non-finite weight");
  int e = num_edges();
  edges_.push_back({u, v, weight});
  adj_[u].push_back({v, e});
  adj_[v].push_back({u, e});
  return e;
}

NodeId WeightedTree::find(std::string_view label) const {
  if (label.empty()) return kNoNode;
  for (NodeId v = 0; v < num_nodes(); ++v)
    if (labels_[v] == label) return v;
  return kNoNode;
}

NodeId WeightedTree::at(std::string_view label) const {
  NodeId v = find(label);
  if (v == kNoNode) throw InvalidInput("unknown node label '" + std::string(label) + "'");
  return v;
}

std::vector<NodeId> WeightedTree::leaves() const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < num_nodes(); ++v)
    if (degree(v) <= 1) out.push_back(v);
  return out;
}

std::vector<NodeId> WeightedTree::internal_nodes() const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < num_nodes(); ++v)
    if (degree(v) >= 2) out.push_back(v);
  return out;
}

std::vector<std::string> WeightedTree::leaf_labels() const {
  std::vector<std::string> out;
  for (NodeId v : leaves()) out.push_back(labels_[v]);
  return out;
}

void WeightedTree::validate() const {
  if (num_nodes() == 0) throw InvalidInput("tree has no nodes");
  if (num_edges() != num_nodes() - 1)
    throw InvalidInput("tree must have exactly |V|-1 edges");
  std::vector<char> seen(num_nodes(), 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    for (const auto& nb : adj_[v])
      if (!seen[nb.node]) {
        seen[nb.node] = 1;
        ++count;
        stack.push_back(nb.node);
      }
  }
  if (count != num_nodes()) throw InvalidInput("tree is not connected");
  std::vector<std::string> named;
  for (const auto& l : labels_)
    if (!l.empty()) named.push_back(l);
  std::sort(named.begin(), named.end());
  if (std::adjacent_find(named.begin(), named.end()) != named.end())
    throw InvalidInput("duplicate node label");
  if (!relaxed_ && !satisfies_strict_rules())
    throw InvalidInput("tree has an internal node of degree 2 or a zero-weight edge; "
                       "mark it relaxed to allow this");
}

bool WeightedTree::satisfies_strict_rules() const {
  for (NodeId v = 0; v < num_nodes(); ++v)
    if (degree(v) == 2) return false;
  for (const auto& e : edges_)
    if (e.weight == 0.0) return false;
  return true;
}

WeightedTree WeightedTree::collapse_edges(double cut, bool signed_cut) const {
  std::vector<int> order(num_edges());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return edges_[a].weight < edges_[b].weight; });

  std::vector<NodeId> rep(num_nodes());
  std::iota(rep.begin(), rep.end(), 0);
  std::vector<char> labeled(num_nodes());
  for (NodeId v = 0; v < num_nodes(); ++v) labeled[v] = !labels_[v].empty();
  auto root = [&](NodeId v) {
    while (rep[v] != v) v = rep[v] = rep[rep[v]];
    return v;
  };

  std::vector<char> contracted(num_edges(), 0);
  for (int e : order) {
    double w = edges_[e].weight;
    bool small = signed_cut ? (w <= cut) : (std::abs(w) <= cut);
    if (!small) continue;
    NodeId a = root(edges_[e].u), b = root(edges_[e].v);
    if (labeled[a] && labeled[b]) continue;
    if (labeled[b]) std::swap(a, b);
    rep[b] = a;
    contracted[e] = 1;
  }

  WeightedTree out;
  std::vector<NodeId> new_id(num_nodes(), kNoNode);
  for (NodeId v = 0; v < num_nodes(); ++v) {
    NodeId r = root(v);
    if (new_id[r] == kNoNode) new_id[r] = out.add_node();
  }
  for (NodeId v = 0; v < num_nodes(); ++v)
    if (labeled[v]) out.set_label(new_id[root(v)], labels_[v]);
  for (int e = 0; e < num_edges(); ++e)
    if (!contracted[e])
      out.add_edge(new_id[root(edges_[e].u)], new_id[root(edges_[e].v)], edges_[e].weight);
  out.set_relaxed(relaxed_ || !out.satisfies_strict_rules());
  return out;
}

WeightedTree WeightedTree::suppress_degree_two() const {
  std::vector<char> drop(num_nodes(), 0);
  for (NodeId v = 0; v < num_nodes(); ++v)
    drop[v] = degree(v) == 2 && labels_[v].empty();

  WeightedTree out;
  std::vector<NodeId> new_id(num_nodes(), kNoNode);
  for (NodeId v = 0; v < num_nodes(); ++v)
    if (!drop[v]) new_id[v] = out.add_node(labels_[v]);
  // Walk from every kept node through chains of dropped nodes.
  for (NodeId v = 0; v < num_nodes(); ++v) {
    if (drop[v]) continue;
    for (const auto& nb : adj_[v]) {
      NodeId prev = v, cur = nb.node;
      double w = edges_[nb.edge].weight;
      while (drop[cur]) {
        const auto& n2 = adj_[cur];
        const Neighbor& next = n2[0].node == prev ? n2[1] : n2[0];
        w += edges_[next.edge].weight;
        prev = cur;
        cur = next.node;
      }
      if (v < cur) out.add_edge(new_id[v], new_id[cur], w);
    }
  }
  out.set_relaxed(relaxed_ && !out.satisfies_strict_rules());
  return out;
}

RootedTree::RootedTree(const WeightedTree& tree, NodeId root) : tree_(&tree), root_(root) {
  const int n = tree.num_nodes();
  if (root < 0 || root >= n) throw InvalidInput("RootedTree: unknown root id");
  parent_.assign(n, kNoNode);
  parent_edge_.assign(n, -1);
  children_.assign(n, {});
  depth_.assign(n, 0);
  root_dist_.assign(n, 0.0);
  std::vector<char> seen(n, 0);
  std::deque<NodeId> queue{root};
  seen[root] = 1;
  while (!queue.empty()) {
    NodeId v = queue.front();
    queue.pop_front();
    order_.push_back(v);
    for (const auto& nb : tree.neighbors(v)) {
      if (seen[nb.node]) continue;
      seen[nb.node] = 1;
      parent_[nb.node] = v;
      parent_edge_[nb.node] = nb.edge;
      children_[v].push_back(nb.node);
      depth_[nb.node] = depth_[v] + 1;
      root_dist_[nb.node] = root_dist_[v] + tree.edge(nb.edge).weight;
      queue.push_back(nb.node);
    }
  }
  if (static_cast<int>(order_.size()) != n) throw InvalidInput("RootedTree: tree is not connected");
}

std::vector<NodeId> RootedTree::ancestors(NodeId v) const {
  std::vector<NodeId> out;
  for (NodeId p = parent_.at(v); p != kNoNode; p = parent_[p]) out.push_back(p);
  return out;
}

std::vector<NodeId> RootedTree::descendants(NodeId v) const {
  std::vector<NodeId> out;
  std::vector<NodeId> stack(children_.at(v).rbegin(), children_.at(v).rend());
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    out.push_back(u);
    for (auto it = children_[u].rbegin(); it != children_[u].rend(); ++it) stack.push_back(*it);
  }
  return out;
}

std::vector<NodeId> RootedTree::leaf_descendants(NodeId v) const {
  std::vector<NodeId> out;
  for (NodeId u : descendants(v))
    if (children_[u].empty()) out.push_back(u);
  return out;
}

NodeId RootedTree::lca(NodeId a, NodeId b) const {
  while (depth_.at(a) > depth_.at(b)) a = parent_[a];
  while (depth_[b] > depth_[a]) b = parent_[b];
  while (a != b) {
    a = parent_[a];
    b = parent_[b];
  }
  return a;
}

double RootedTree::distance(NodeId a, NodeId b) const {
  NodeId m = lca(a, b);
  double d = 0.0;
  for (; a != m; a = parent_[a]) d += tree_->edge(parent_edge_[a]).weight;
  for (; b != m; b = parent_[b]) d += tree_->edge(parent_edge_[b]).weight;
  return d;
}

std::vector<NodeId> RootedTree::path(NodeId a, NodeId b) const {
  NodeId m = lca(a, b);
  std::vector<NodeId> up, down;
  for (; a != m; a = parent_[a]) up.push_back(a);
  for (; b != m; b = parent_[b]) down.push_back(b);
  up.push_back(m);
  up.insert(up.end(), down.rbegin(), down.rend());
  return up;
}

namespace {

// Distances from `src` to every node, optionally ignoring one edge.
std::vector<double> distances_from(const WeightedTree& tree, NodeId src, int skip_edge = -1) {
  std::vector<double> dist(tree.num_nodes(), std::numeric_limits<double>::quiet_NaN());
  std::vector<NodeId> stack{src};
  dist[src] = 0.0;
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    for (const auto& nb : tree.neighbors(v)) {
      if (nb.edge == skip_edge || !std::isnan(dist[nb.node])) continue;
      dist[nb.node] = dist[v] + tree.edge(nb.edge).weight;
      stack.push_back(nb.node);
    }
  }
  return dist;
}

void check_node(const WeightedTree& tree, NodeId v) {
  if (v < 0 || v >= tree.num_nodes())
    throw InvalidInput("unknown node id " + std::to_string(v));
}

}  // namespace

double additive_distance(const WeightedTree& tree, NodeId i, NodeId j) {
  check_node(tree, i);
  check_node(tree, j);
  if (i == j) return 0.0;
  return distances_from(tree, i)[j];
}

DistanceMatrix pairwise_distances(const WeightedTree& tree, const std::vector<NodeId>& subset) {
  if (subset.empty()) throw InvalidInput("pairwise_distances: empty subset");
  std::vector<NodeId> sorted = subset;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidInput("pairwise_distances: duplicate node ids");
  for (NodeId v : subset) check_node(tree, v);

  const int m = static_cast<int>(subset.size());
  DistanceMatrix out;
  out.values = Eigen::MatrixXd::Zero(m, m);
  for (NodeId v : subset)
    out.labels.push_back(tree.label(v).empty() ? "#" + std::to_string(v) : tree.label(v));
  for (int a = 0; a < m; ++a) {
    auto dist = distances_from(tree, subset[a]);
    for (int b = a + 1; b < m; ++b) out.values(a, b) = out.values(b, a) = dist[subset[b]];
  }
  return out;
}

DistanceMatrix leaf_distances(const WeightedTree& tree) {
  return pairwise_distances(tree, tree.leaves());
}

UltrametricResult is_ultrametric(const WeightedTree& tree, double tol) {
  UltrametricResult res;
  auto leaves = tree.leaves();
  auto spread = [&](const std::vector<double>& dist, const std::vector<NodeId>& set,
                    double& lo, double& hi) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (NodeId l : set) {
      lo = std::min(lo, dist[l]);
      hi = std::max(hi, dist[l]);
    }
  };

  for (NodeId r = 0; r < tree.num_nodes(); ++r) {
    double lo, hi;
    spread(distances_from(tree, r), leaves, lo, hi);
    if (hi - lo <= tol) {
      res.ultrametric = true;
      res.root_node = r;
      res.height = hi;
      return res;
    }
  }

  // Interior point of edge (u, v) at offset t from u: leaves behind u sit at
  // a + t and leaves behind v at b + w - t, so t = (b + w - a) / 2.
  for (int e = 0; e < tree.num_edges(); ++e) {
    const Edge& ed = tree.edge(e);
    if (ed.weight <= 0.0) continue;
    auto du = distances_from(tree, ed.u, e);
    auto dv = distances_from(tree, ed.v, e);
    std::vector<NodeId> side_u, side_v;
    for (NodeId l : leaves) (std::isnan(du[l]) ? side_v : side_u).push_back(l);
    if (side_u.empty() || side_v.empty()) continue;
    double ulo, uhi, vlo, vhi;
    spread(du, side_u, ulo, uhi);
    spread(dv, side_v, vlo, vhi);
    if (uhi - ulo > tol || vhi - vlo > tol) continue;
    double a = 0.5 * (ulo + uhi), b = 0.5 * (vlo + vhi);
    double t = 0.5 * (b + ed.weight - a);
    if (t <= 0.0 || t >= ed.weight) continue;
    res.ultrametric = true;
    res.root_edge = e;
    res.root_offset = t;
    res.height = a + t;
    return res;
  }
  return res;
}

namespace {

int words_for(std::size_t n) { return static_cast<int>((n + 63) / 64); }

bool test_bit(const Split& s, std::size_t i) { return (s[i / 64] >> (i % 64)) & 1u; }
void set_bit(Split& s, std::size_t i) { s[i / 64] |= std::uint64_t{1} << (i % 64); }

std::size_t popcount(const Split& s) {
  std::size_t c = 0;
  for (auto w : s) c += static_cast<std::size_t>(__builtin_popcountll(w));
  return c;
}

Split complement(const Split& s, std::size_t n) {
  Split out(s.size());
  for (std::size_t i = 0; i < n; ++i)
    if (!test_bit(s, i)) set_bit(out, i);
  return out;
}

std::vector<std::string> sorted_unique(const std::vector<std::string>& labels) {
  std::vector<std::string> out = labels;
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end())
    throw InvalidInput("observed set has duplicate labels");
  return out;
}

}  // namespace

bool SplitSet::contains(const std::vector<std::string>& side) const {
  Split s(words_for(observed.size()), 0);
  for (const auto& l : side) {
    auto it = std::lower_bound(observed.begin(), observed.end(), l);
    if (it == observed.end() || *it != l) return false;
    set_bit(s, static_cast<std::size_t>(it - observed.begin()));
  }
  if (!observed.empty() && test_bit(s, 0)) s = complement(s, observed.size());
  return splits.count(s) > 0;
}

std::set<Split> SplitSet::nontrivial() const {
  std::set<Split> out;
  const std::size_t n = observed.size();
  for (const auto& s : splits) {
    std::size_t c = popcount(s);
    if (c >= 2 && n - c >= 2) out.insert(s);
  }
  return out;
}

SplitSet splits(const WeightedTree& tree, const std::vector<std::string>& observed) {
  SplitSet out;
  out.observed = sorted_unique(observed);
  const std::size_t n = out.observed.size();
  const int words = words_for(n);
  if (tree.num_nodes() == 0) return out;

  std::vector<int> obs_index(tree.num_nodes(), -1);
  for (std::size_t i = 0; i < n; ++i) obs_index[tree.at(out.observed[i])] = static_cast<int>(i);

  RootedTree rooted(tree, 0);
  std::vector<Split> below(tree.num_nodes(), Split(words, 0));
  const auto& order = rooted.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeId v = *it;
    if (obs_index[v] >= 0) set_bit(below[v], static_cast<std::size_t>(obs_index[v]));
    NodeId p = rooted.parent(v);
    if (p == kNoNode) continue;
    for (int w = 0; w < words; ++w) below[p][w] |= below[v][w];
    std::size_t c = popcount(below[v]);
    if (c == 0 || c == n) continue;
    out.splits.insert(test_bit(below[v], 0) ? complement(below[v], n) : below[v]);
  }
  return out;
}

double robinson_foulds(const WeightedTree& t1, const WeightedTree& t2,
                       const std::vector<std::string>& observed, bool normalized) {
  auto s1 = splits(t1, observed).nontrivial();
  auto s2 = splits(t2, observed).nontrivial();
  std::size_t diff = 0;
  for (const auto& s : s1) diff += s2.count(s) == 0;
  for (const auto& s : s2) diff += s1.count(s) == 0;
  if (!normalized) return static_cast<double>(diff);
  std::size_t total = s1.size() + s2.size();
  return total == 0 ? 0.0 : static_cast<double>(diff) / static_cast<double>(total);
}

bool trees_equivalent(const WeightedTree& t1, const WeightedTree& t2,
                      const std::vector<std::string>& observed) {
  auto obs = sorted_unique(observed);
  for (const WeightedTree* t : {&t1, &t2}) {
    for (NodeId v = 0; v < t->num_nodes(); ++v) {
      if (t->degree(v) >= 3) continue;
      if (!std::binary_search(obs.begin(), obs.end(), t->label(v)))
        throw InvalidInput("trees_equivalent: node of degree " + std::to_string(t->degree(v)) +
                           " is not in the observed set");
    }
  }
  return splits(t1, obs).splits == splits(t2, obs).splits;
}

double WeightLaw::draw(Rng& rng) const {
  if (kind == Kind::constant) return a + shift;
  std::uniform_real_distribution<double> u(a, b);
  return u(rng) + shift;
}

void WeightLaw::check() const {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(shift))
    throw InvalidInput("weight law: non-finite parameter");
  if (kind == Kind::uniform && !(a < b))
    throw InvalidInput("weight law: uniform lower bound must be below upper bound");
}

TreeKind parse_tree_kind(std::string_view name) {
  if (name == "balanced_binary") return TreeKind::balanced_binary;
  if (name == "random_binary") return TreeKind::random_binary;
  if (name == "random_multifurcating") return TreeKind::random_multifurcating;
  if (name == "star") return TreeKind::star;
  throw InvalidInput("unknown tree kind '" + std::string(name) + "'");
}

std::string_view to_string(TreeKind kind) {
  switch (kind) {
    case TreeKind::balanced_binary: return "balanced_binary";
    case TreeKind::random_binary: return "random_binary";
    case TreeKind::random_multifurcating: return "random_multifurcating";
    case TreeKind::star: return "star";
  }
  return "";
}

WeightLaw default_weight_law(TreeKind kind) {
  switch (kind) {
    case TreeKind::balanced_binary: return WeightLaw::constant_weight(0.5);
    case TreeKind::star: return WeightLaw::constant_weight(1.5);
    case TreeKind::random_binary:
    case TreeKind::random_multifurcating: return WeightLaw::uniform(0.0, 1.0, 0.1);
  }
  return {};
}

namespace {

// Attaches a subtree over leaves[lo, hi) below a fresh internal node and
// returns that node (or the leaf itself for a single leaf).
NodeId build_balanced(WeightedTree& t, const std::vector<NodeId>& leaves, int lo, int hi,
                      const WeightLaw& law, Rng& rng) {
  if (hi - lo == 1) return leaves[lo];
  int mid = lo + (hi - lo + 1) / 2;
  NodeId v = t.add_node();
  NodeId left = build_balanced(t, leaves, lo, mid, law, rng);
  t.add_edge(v, left, law.draw(rng));
  NodeId right = build_balanced(t, leaves, mid, hi, law, rng);
  t.add_edge(v, right, law.draw(rng));
  return v;
}

// Random rooted binary shape: split sizes drawn uniformly from 1..n-1.
NodeId build_random(WeightedTree& t, std::vector<NodeId>& leaves, int lo, int hi,
                    const WeightLaw& law, Rng& rng) {
  if (hi - lo == 1) return leaves[lo];
  std::uniform_int_distribution<int> cut(1, hi - lo - 1);
  int mid = lo + cut(rng);
  NodeId v = t.add_node();
  NodeId left = build_random(t, leaves, lo, mid, law, rng);
  t.add_edge(v, left, law.draw(rng));
  NodeId right = build_random(t, leaves, mid, hi, law, rng);
  t.add_edge(v, right, law.draw(rng));
  return v;
}

}  // namespace

WeightedTree random_tree(TreeKind kind, int n_leaves, const WeightLaw& law, Rng& rng,
                         const std::string& leaf_prefix) {
  if (n_leaves < 2) throw InvalidInput("random_tree: need at least 2 leaves");
  law.check();
  WeightedTree t;
  std::vector<NodeId> leaves;
  for (int i = 1; i <= n_leaves; ++i) leaves.push_back(t.add_node(leaf_prefix + std::to_string(i)));

  switch (kind) {
    case TreeKind::star: {
      NodeId c = t.add_node();
      for (NodeId l : leaves) t.add_edge(c, l, law.draw(rng));
      break;
    }
    case TreeKind::balanced_binary:
      build_balanced(t, leaves, 0, n_leaves, law, rng);
      break;
    case TreeKind::random_binary:
    case TreeKind::random_multifurcating: {
      std::shuffle(leaves.begin(), leaves.end(), rng);
      build_random(t, leaves, 0, n_leaves, law, rng);
      // Unroot: the degree-2 root is joined into a single edge.
      t.set_relaxed(true);
      t = t.suppress_degree_two();
      if (kind == TreeKind::random_multifurcating) {
        for (int e = 0; e < t.num_edges(); ++e) {
          const Edge& ed = t.edge(e);
          if (!t.is_leaf(ed.u) && !t.is_leaf(ed.v) && ed.weight < 0.5) t.set_weight(e, 0.0);
        }
        t = t.collapse_zero_edges();
      }
      break;
    }
  }
  t.set_relaxed(!t.satisfies_strict_rules());
  t.validate();
  return t;
}

}  // namespace tsg
