#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "tsg/error.hpp"
#include "tsg/tree.hpp"

using namespace tsg;

namespace {

WeightedTree star(int n, double w) {
  WeightedTree t;
  NodeId c = t.add_node();
  for (int i = 0; i < n; ++i) t.add_edge(c, t.add_node(std::string(1, char('a' + i))), w);
  return t;
}

// ((a,b),(c,d)) with pendant weight p and internal weight q.
WeightedTree quartet(double p, double q, const char* names = "abcd") {
  WeightedTree t;
  NodeId x = t.add_node(), y = t.add_node();
  t.add_edge(x, y, q);
  t.add_edge(x, t.add_node(std::string(1, names[0])), p);
  t.add_edge(x, t.add_node(std::string(1, names[1])), p);
  t.add_edge(y, t.add_node(std::string(1, names[2])), p);
  t.add_edge(y, t.add_node(std::string(1, names[3])), p);
  return t;
}

// Scans candidate roots densely along every edge; used as an independent check.
bool ultrametric_by_scan(const WeightedTree& t, double tol) {
  auto leaves = t.leaves();
  for (int e = 0; e < t.num_edges(); ++e) {
    const Edge& ed = t.edge(e);
    for (int s = 0; s <= 2000; ++s) {
      double off = ed.weight * s / 2000.0;
      double lo = 1e300, hi = -1e300;
      for (NodeId l : leaves) {
        double du = oracle::path_distance(t, ed.u, l), dv = oracle::path_distance(t, ed.v, l);
        double d = std::min(du + off, dv + ed.weight - off);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
      if (hi - lo <= tol) return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("additive distance on small trees") {
  auto s = star(5, 0.7);
  auto lv = s.leaves();
  CHECK(additive_distance(s, lv[0], lv[3]) == doctest::Approx(1.4));
  CHECK(additive_distance(s, lv[2], lv[2]) == 0.0);

  WeightedTree cat;
  NodeId a = cat.add_node("a"), u = cat.add_node(), v = cat.add_node(), b = cat.add_node("b");
  cat.add_edge(a, u, 1.0);
  cat.add_edge(u, v, 0.5);
  cat.add_edge(v, b, 2.0);
  CHECK(additive_distance(cat, a, b) == doctest::Approx(oracle::path_distance(cat, a, b)));
  CHECK(additive_distance(cat, a, b) == doctest::Approx(3.5));
  CHECK_THROWS_AS(additive_distance(cat, a, 17), InvalidInput);
}

TEST_CASE("pairwise distances") {
  auto q = quartet(1.0, 1.0);
  auto d = leaf_distances(q);
  Eigen::Matrix4d expect;
  expect << 0, 2, 3, 3, 2, 0, 3, 3, 3, 3, 0, 2, 3, 3, 2, 0;
  CHECK((d.values - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(d.labels == std::vector<std::string>{"a", "b", "c", "d"});

  auto one = pairwise_distances(q, {q.at("c")});
  CHECK(one.values.rows() == 1);
  CHECK(one.values(0, 0) == 0.0);

  auto s = leaf_distances(star(6, 0.5));
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) CHECK(s(i, j) == (i == j ? 0.0 : 1.0));

  CHECK_THROWS_AS(pairwise_distances(q, {0, 0}), InvalidInput);
  CHECK_THROWS_AS(pairwise_distances(q, {}), InvalidInput);
}

TEST_CASE("distances agree with exhaustive path search on random trees") {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    auto t = random_tree(TreeKind::random_binary, 9, default_weight_law(TreeKind::random_binary), rng);
    RootedTree r0(t, t.internal_nodes().front()), r1(t, t.internal_nodes().back());
    for (NodeId i = 0; i < t.num_nodes(); ++i)
      for (NodeId j = 0; j < t.num_nodes(); ++j) {
        double ref = oracle::path_distance(t, i, j);
        CHECK(additive_distance(t, i, j) == doctest::Approx(ref).epsilon(1e-13));
        // Re-rooting never changes distances.
        CHECK(r0.distance(i, j) == doctest::Approx(ref).epsilon(1e-13));
        CHECK(r1.distance(i, j) == doctest::Approx(ref).epsilon(1e-13));
      }
  }
}

TEST_CASE("additivity along paths and four-point condition") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    auto t = random_tree(TreeKind::random_binary, 8, default_weight_law(TreeKind::random_binary), rng);
    RootedTree r(t, t.internal_nodes().front());
    auto lv = t.leaves();
    for (NodeId i : lv)
      for (NodeId k : lv)
        for (NodeId j : r.path(i, k))
          CHECK(additive_distance(t, i, k) ==
                doctest::Approx(additive_distance(t, i, j) + additive_distance(t, j, k)).epsilon(1e-14));
    auto d = leaf_distances(t);
    for (int a = 0; a < 8; ++a)
      for (int b = a + 1; b < 8; ++b)
        for (int c = b + 1; c < 8; ++c)
          for (int e = c + 1; e < 8; ++e) {
            double s[3] = {d(a, b) + d(c, e), d(a, c) + d(b, e), d(a, e) + d(b, c)};
            std::sort(s, s + 3);
            CHECK(s[2] == doctest::Approx(s[1]).epsilon(1e-12));
          }
  }
}

TEST_CASE("ultrametric detection") {
  Rng rng(1);
  auto bb = random_tree(TreeKind::balanced_binary, 8, WeightLaw::constant_weight(0.5), rng);
  auto r = is_ultrametric(bb);
  CHECK(r.ultrametric);
  CHECK(r.height == doctest::Approx(1.5));

  // Unequal pendant weights below a shared parent.
  WeightedTree uneven;
  NodeId x = uneven.add_node(), y = uneven.add_node();
  uneven.add_edge(x, y, 1.0);
  uneven.add_edge(x, uneven.add_node("a"), 1.0);
  uneven.add_edge(x, uneven.add_node("b"), 2.0);
  uneven.add_edge(y, uneven.add_node("c"), 1.0);
  uneven.add_edge(y, uneven.add_node("d"), 1.0);
  CHECK_FALSE(is_ultrametric(uneven).ultrametric);
  CHECK_FALSE(ultrametric_by_scan(uneven, 1e-3));

  // Equidistant only from an interior point of the x-y edge (offset 1.25).
  WeightedTree mid;
  x = mid.add_node();
  y = mid.add_node();
  int e = mid.add_edge(x, y, 2.0);
  mid.add_edge(x, mid.add_node("a"), 1.0);
  mid.add_edge(x, mid.add_node("b"), 1.0);
  mid.add_edge(y, mid.add_node("c"), 1.5);
  mid.add_edge(y, mid.add_node("d"), 1.5);
  auto m = is_ultrametric(mid);
  CHECK(m.ultrametric);
  CHECK(ultrametric_by_scan(mid, 1e-3));
  REQUIRE(m.root_edge.has_value());
  CHECK(*m.root_edge == e);
  CHECK(m.root_offset == doctest::Approx(1.25));
  CHECK(m.height == doctest::Approx(2.25));

  for (int rep = 0; rep < 10; ++rep) {
    auto t = random_tree(TreeKind::random_binary, 5, default_weight_law(TreeKind::random_binary), rng);
    CHECK(is_ultrametric(t, 1e-3).ultrametric == ultrametric_by_scan(t, 1e-3));
  }
}

TEST_CASE("splits and Robinson-Foulds") {
  auto q = quartet(1.0, 1.0, "1234");
  std::vector<std::string> obs{"1", "2", "3", "4"};
  auto s = splits(q, obs);
  CHECK(s.contains({"1", "2"}));
  CHECK(s.contains({"3", "4"}));
  CHECK_FALSE(s.contains({"1", "3"}));
  CHECK(s.nontrivial().size() == 1);

  auto st = star(5, 1.0);
  auto ss = splits(st, st.leaf_labels());
  CHECK(ss.size() == 5);
  CHECK(ss.nontrivial().empty());

  Rng rng(3);
  auto six = random_tree(TreeKind::random_binary, 6, default_weight_law(TreeKind::random_binary), rng);
  int pendant = 0;
  for (const auto& e : six.edges()) pendant += six.is_leaf(e.u) || six.is_leaf(e.v);
  CHECK(splits(six, six.leaf_labels()).nontrivial().size() ==
        static_cast<std::size_t>(six.num_edges() - pendant));
  CHECK(splits(six, six.leaf_labels()).nontrivial().size() == 3);

  auto q2 = quartet(1.0, 1.0, "1324");
  CHECK(robinson_foulds(q, q, obs, true) == 0.0);
  CHECK(robinson_foulds(q, q2, obs, true) == 1.0);
  CHECK(robinson_foulds(q, q2, obs, false) == 2.0);
  CHECK(robinson_foulds(q2, q, obs, true) == robinson_foulds(q, q2, obs, true));

  // A zero-length subdivision, once collapsed, leaves the split set unchanged.
  WeightedTree sub = q;
  sub.set_relaxed(true);
  NodeId extra = sub.add_node();
  sub.add_edge(sub.at("1"), extra, 0.0);
  CHECK(robinson_foulds(q, sub.collapse_zero_edges(), obs, true) == 0.0);

  CHECK_THROWS_AS(robinson_foulds(q, q, {"1", "2", "9"}, true), InvalidInput);
}

TEST_CASE("tree equivalence") {
  std::vector<std::string> obs{"a", "b", "c", "d"};
  auto q = quartet(1.0, 1.0);
  CHECK(trees_equivalent(q, q, obs));
  CHECK_FALSE(trees_equivalent(q, quartet(1.0, 1.0, "acbd"), obs));
  CHECK(trees_equivalent(q, quartet(0.3, 2.0), obs));
  // Internal nodes are unobserved and have degree 3, leaves are observed.
  CHECK_THROWS_AS(trees_equivalent(q, q, {"a", "b", "c"}), InvalidInput);

  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    auto t1 = random_tree(TreeKind::random_binary, 7, default_weight_law(TreeKind::random_binary), rng);
    auto t2 = random_tree(TreeKind::random_binary, 7, default_weight_law(TreeKind::random_binary), rng);
    auto o = t1.leaf_labels();
    double rf = robinson_foulds(t1, t2, o, false);
    CHECK(rf >= 0.0);
    CHECK((rf == 0.0) == trees_equivalent(t1, t2, o));
  }
}

TEST_CASE("random tree generation") {
  Rng rng(42);
  auto s = random_tree(TreeKind::star, 4, WeightLaw::constant_weight(1.5), rng);
  CHECK(s.num_edges() == 4);
  for (const auto& e : s.edges()) CHECK(e.weight == 1.5);
  CHECK(s.leaves().size() == 4);

  auto bb = random_tree(TreeKind::balanced_binary, 8, WeightLaw::constant_weight(0.5), rng);
  CHECK(bb.relaxed());
  CHECK(bb.leaves().size() == 8);
  for (const auto& e : bb.edges()) CHECK(e.weight == 0.5);
  RootedTree rb(bb, 8);  // leaves take ids 0..7, the root is created next
  for (NodeId l : bb.leaves()) CHECK(rb.level(l) == 3);

  Rng a(9), b(9);
  auto law = default_weight_law(TreeKind::random_binary);
  auto t1 = random_tree(TreeKind::random_binary, 12, law, a);
  auto t2 = random_tree(TreeKind::random_binary, 12, law, b);
  CHECK(to_newick(t1) == to_newick(t2));
  CHECK(t1.satisfies_strict_rules());
  for (const auto& e : t1.edges()) {
    CHECK(e.weight >= 0.1);
    CHECK(e.weight <= 1.1);
  }
  CHECK(t1.num_edges() == 2 * 12 - 3);

  for (int rep = 0; rep < 10; ++rep) {
    auto m = random_tree(TreeKind::random_multifurcating, 16, law, rng);
    CHECK(m.leaves().size() == 16);
    for (const auto& e : m.edges())
      if (!m.is_leaf(e.u) && !m.is_leaf(e.v)) CHECK(e.weight >= 0.5);
    for (NodeId v : m.internal_nodes()) CHECK(m.degree(v) >= 3);
  }

  CHECK_THROWS_AS(random_tree(TreeKind::star, 1, law, rng), InvalidInput);
  CHECK_THROWS_AS(random_tree(TreeKind::star, 4, WeightLaw::uniform(2.0, 1.0), rng), InvalidInput);
  CHECK(parse_tree_kind("star") == TreeKind::star);
  CHECK_THROWS_AS(parse_tree_kind("bush"), InvalidInput);
}

TEST_CASE("tree validation and collapsing") {
  WeightedTree t;
  NodeId a = t.add_node("a"), b = t.add_node("b"), c = t.add_node();
  t.add_edge(a, c, 1.0);
  t.add_edge(c, b, 1.0);
  CHECK_THROWS_AS(t.validate(), InvalidInput);  // degree-2 internal node
  t.set_relaxed(true);
  CHECK_NOTHROW(t.validate());
  auto s = t.suppress_degree_two();
  CHECK(s.num_nodes() == 2);
  CHECK(s.edge(0).weight == 2.0);

  // Two labeled endpoints are never merged.
  WeightedTree p;
  p.set_relaxed(true);
  NodeId x = p.add_node("x"), y = p.add_node("y");
  p.add_edge(x, y, 0.0);
  CHECK(p.collapse_zero_edges().num_nodes() == 2);

  WeightedTree cyc;
  cyc.add_node("a");
  cyc.add_node("b");
  CHECK_THROWS_AS(cyc.validate(), InvalidInput);
}

TEST_CASE("newick round trip") {
  auto s = star(4, 1.5);
  CHECK(to_newick(s) == "(a:1.5,b:1.5,c:1.5,d:1.5);");

  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    auto t = random_tree(TreeKind::random_multifurcating, 10, default_weight_law(TreeKind::random_binary), rng);
    auto back = parse_newick(to_newick(t));
    auto obs = t.leaf_labels();
    CHECK(trees_equivalent(t, back, obs));
    auto d1 = leaf_distances(t), d2 = leaf_distances(back).reordered(d1.labels);
    CHECK((d1.values - d2.values).cwiseAbs().maxCoeff() < 1e-10);
  }

  auto bb = random_tree(TreeKind::balanced_binary, 4, WeightLaw::constant_weight(0.5), rng);
  auto bb2 = parse_newick(to_newick(bb));
  CHECK(bb2.relaxed());
  CHECK(to_newick(bb2) == to_newick(bb));

  auto lab = parse_newick(" ( 'x y':1 , (b:2,c:3)h1:0.5 , d:-1e-1 ) ; ");
  CHECK(lab.find("x y") != kNoNode);
  CHECK(lab.find("h1") != kNoNode);
  CHECK(additive_distance(lab, lab.at("b"), lab.at("d")) == doctest::Approx(2.4));
  CHECK(parse_newick(to_newick(lab)).find("x y") != kNoNode);

  CHECK_THROWS_AS(parse_newick("((a:1,b:1):1,c:1;"), InvalidInput);
  CHECK_THROWS_AS(parse_newick("(a,b);"), InvalidInput);
  CHECK_THROWS_AS(parse_newick("(a:1,b:x);"), InvalidInput);
  CHECK_THROWS_AS(parse_newick("(a:1,a:1,c:1);"), InvalidInput);
  try {
    parse_newick("(a:1,b:1");
    FAIL("expected a parse error");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("offset 8") != std::string::npos);
  }
}

TEST_CASE("distance matrix TSV") {
  auto d = leaf_distances(quartet(1.0, 0.25));
  std::stringstream ss;
  write_distance_tsv(ss, d);
  auto back = read_distance_tsv(ss);
  CHECK(back.labels == d.labels);
  CHECK((back.values - d.values).cwiseAbs().maxCoeff() == 0.0);

  std::stringstream bad("\ta\tb\na\t0\t1\nb\t2\t0\n");
  CHECK_THROWS_AS(read_distance_tsv(bad), InvalidInput);
}
