#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "tsg/error.hpp"
#include "tsg/model.hpp"

using namespace tsg;

namespace {

WeightedTree random_binary(int n, Rng& rng) {
  return random_tree(TreeKind::random_binary, n, default_weight_law(TreeKind::random_binary), rng);
}

}  // namespace

TEST_CASE("rate matrix") {
  Rng rng(1);
  TsgModel star(random_tree(TreeKind::star, 5, WeightLaw::constant_weight(0.8), rng));
  auto lambda = rate_matrix(star);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) CHECK(lambda(i, j) == doctest::Approx(i == j ? 0.0 : std::exp(-1.6)));

  // Equal-weight star: every pair has the same rate (an Erdos-Renyi graph).
  CHECK(lambda.maxCoeff() == doctest::Approx(lambda(0, 1)));

  WeightedTree z;
  z.set_relaxed(true);
  NodeId c = z.add_node();
  for (int i = 0; i < 3; ++i) z.add_edge(c, z.add_node("x" + std::to_string(i)), 0.0);
  auto flat = rate_matrix(TsgModel(z, 2.5));
  CHECK(flat(0, 1) == 2.5);

  // Scaling multiplies every rate and leaves ratios unchanged.
  auto t = random_binary(7, rng);
  auto l1 = rate_matrix(TsgModel(t, 1.0)), l3 = rate_matrix(TsgModel(t, 3.0));
  CHECK((l3 - 3.0 * l1).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(l3(0, 2) / l3(1, 2) == doctest::Approx(l1(0, 2) / l1(1, 2)).epsilon(1e-14));

  CHECK_THROWS_AS(TsgModel(t, 0.0), InvalidInput);
}

TEST_CASE("DCSBM construction") {
  WeightedTree path;
  path.set_relaxed(true);
  NodeId a = path.add_node("a"), u = path.add_node(), v = path.add_node(), b = path.add_node("b");
  path.add_edge(a, u, 0.3);
  path.add_edge(u, v, 0.7);
  path.add_edge(v, b, 1.1);
  auto p = to_dcsbm(TsgModel(path));
  CHECK(p.k() == 2);
  CHECK(p.theta(0) == doctest::Approx(std::exp(-0.3)));
  CHECK(p.theta(1) == doctest::Approx(std::exp(-1.1)));
  CHECK(p.B(0, 1) == doctest::Approx(std::exp(-0.7)));
  CHECK(p.theta(0) * p.B(p.z[0], p.z[1]) * p.theta(1) == doctest::Approx(std::exp(-2.1)));

  Rng rng(2);
  auto star = to_dcsbm(TsgModel(random_tree(TreeKind::star, 6, WeightLaw::constant_weight(0.4), rng)));
  CHECK(star.k() == 1);
  CHECK(star.B(0, 0) == 1.0);

  for (int rep = 0; rep < 20; ++rep) {
    TsgModel m(random_binary(10, rng), rep % 2 ? 1.0 : 4.0);
    auto params = to_dcsbm(m);
    auto lambda = rate_matrix(m);
    double err = 0.0;
    for (int i = 0; i < m.size(); ++i)
      for (int j = 0; j < m.size(); ++j)
        if (i != j)
          err = std::max(err, std::abs(params.theta(i) * params.B(params.z[i], params.z[j]) *
                                           params.theta(j) - lambda(i, j)));
    CHECK(err < 1e-15);
    CHECK(params.B.diagonal().minCoeff() == 1.0);
    CHECK(std::abs(params.B.determinant()) > 1e-12);
    Eigen::MatrixXd pop = params.population_adjacency();
    pop.diagonal().setZero();
    CHECK((pop - lambda).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("covariance and distance conversions") {
  WeightedTree edge;
  edge.set_relaxed(true);
  edge.add_edge(edge.add_node("a"), edge.add_node("b"), 0.9);
  auto c2 = dist_to_cov(edge);
  CHECK(c2.sigma(0, 0) == 1.0);
  CHECK(c2.sigma(0, 1) == doctest::Approx(std::exp(-0.9)));
  CHECK(c2.min_eigenvalue > 0.0);

  Eigen::Matrix2d s;
  s << 1.0, std::exp(-1.0), std::exp(-1.0), 1.0;
  auto d = cov_to_dist(s, {"p", "q"});
  CHECK(d(0, 0) == 0.0);
  CHECK(d(0, 1) == doctest::Approx(1.0));
  s(0, 1) = 0.0;
  CHECK_THROWS_AS(cov_to_dist(s, {"p", "q"}), InvalidInput);

  Rng rng(3);
  for (int rep = 0; rep < 30; ++rep) {
    auto t = random_binary(3 + rep % 5, rng);  // at most 12 nodes
    auto cov = dist_to_cov(t);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov.sigma);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    CHECK(cov.min_eigenvalue == doctest::Approx(es.eigenvalues().minCoeff()));
    auto back = cov_to_dist(cov);
    for (NodeId i = 0; i < t.num_nodes(); ++i)
      for (NodeId j = 0; j < t.num_nodes(); ++j) {
        CHECK(std::abs(back(i, j) - oracle::path_distance(t, i, j)) < 1e-12);
        // Correlations multiply along paths.
        auto p = oracle::dfs_path(t, i, j);
        double prod = 1.0;
        for (std::size_t e = 0; e + 1 < p.size(); ++e) prod *= cov.sigma(p[e], p[e + 1]);
        CHECK(cov.sigma(i, j) == doctest::Approx(prod).epsilon(1e-13));
        if (i != j) {
          CHECK(cov.sigma(i, j) > 0.0);
          CHECK(cov.sigma(i, j) < 1.0);
        }
      }
  }
}

TEST_CASE("overlapping blockmodel") {
  Rng rng(4);
  auto bb = random_tree(TreeKind::balanced_binary, 4, WeightLaw::constant_weight(std::log(2.0)), rng);
  TsgModel m(bb);
  NodeId root = 4;  // leaves 0..3, then the root
  REQUIRE(bb.degree(root) == 2);
  auto p = to_osbm(m, root);
  for (std::size_t a = 0; a < p.internal.size(); ++a) {
    if (p.internal[a] == root)
      CHECK(p.B(a) == 1.0);
    else
      CHECK(p.B(a) == doctest::Approx(3.0));
  }
  CHECK((p.rates() - rate_matrix(m)).cwiseAbs().maxCoeff() < 1e-14);

  for (int rep = 0; rep < 20; ++rep) {
    TsgModel r(random_binary(9, rng), 1.0 + rep);
    auto internal = r.tree.internal_nodes();
    NodeId rt = internal[rep % internal.size()];
    auto o = to_osbm(r, rt);
    CHECK(o.B.minCoeff() > 0.0);
    auto lambda = rate_matrix(r);
    CHECK((o.rates() - lambda).cwiseAbs().maxCoeff() < 1e-13 * lambda.maxCoeff());
  }

  CHECK_THROWS_AS(to_osbm(m, 0), InvalidInput);
  WeightedTree neg = parse_newick("((a:1,b:1):-0.2,c:1,d:1);");
  neg.set_relaxed(true);
  TsgModel nm(neg);
  CHECK_THROWS_AS(to_osbm(nm, neg.internal_nodes().back()), InvalidInput);
}

TEST_CASE("RDPG latent positions") {
  Rng rng(5);
  TsgModel m(random_binary(6, rng));
  auto one = rdpg_sample(m, 1, rng);
  CHECK(one.X.cols() == 1);
  CHECK(one.lambda(0, 1) == doctest::Approx(std::abs(one.X(0, 0) * one.X(1, 0))));

  auto big = rdpg_sample(m, 20000, rng);
  auto lambda = rate_matrix(m);
  CHECK((big.lambda - lambda).cwiseAbs().maxCoeff() < 0.05);
  // Empirical covariance of the columns matches exp(-D) on the leaves.
  Eigen::MatrixXd emp = big.X * big.X.transpose() / 20000.0;
  CHECK(std::abs(emp(0, 0) - 1.0) < 0.05);

  CHECK_THROWS_AS(rdpg_sample(m, 0, rng), InvalidInput);
}

TEST_CASE("median node and HSE") {
  WeightedTree q = parse_newick("((i:1,j:1)p:1,(l:1,x:1):1);");
  CHECK(median_node(q, q.at("i"), q.at("j"), q.at("l")) == q.at("p"));

  Rng rng(6);
  auto s = random_tree(TreeKind::star, 5, WeightLaw::constant_weight(1.0), rng);
  CHECK(median_node(s, 0, 1, 2) == 5);

  for (int rep = 0; rep < 10; ++rep) {
    auto t = random_tree(TreeKind::random_multifurcating, 9, default_weight_law(TreeKind::random_binary), rng);
    auto lv = t.leaves();
    for (NodeId a : lv)
      for (NodeId b : lv)
        for (NodeId c : lv) {
          if (a == b || b == c || a == c) continue;
          NodeId m = median_node(t, a, b, c);
          CHECK(oracle::on_path(t, a, b, m));
          CHECK(oracle::on_path(t, a, c, m));
          CHECK(oracle::on_path(t, b, c, m));
        }
    TsgModel model(t, 0.5 + rep);
    CHECK(hse_check(model, 1e-12));

    auto lambda = rate_matrix(model);
    std::normal_distribution<double> noise(0.0, 0.01);
    Eigen::MatrixXd noisy = lambda;
    for (int i = 0; i < model.size(); ++i)
      for (int j = i + 1; j < model.size(); ++j) noisy(i, j) = noisy(j, i) = lambda(i, j) * (1 + noise(rng));
    CHECK_FALSE(hse_check(model.tree, model.leaves, noisy, 1e-9));
  }

  TsgModel three(random_tree(TreeKind::star, 3, WeightLaw::constant_weight(0.3), rng));
  CHECK(hse_check(three, 1e-12));
}
