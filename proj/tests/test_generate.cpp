#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "chain_oracle.hpp"
#include "oracles.hpp"
#include "stats.hpp"
#include "tsg/error.hpp"
#include "tsg/generate.hpp"

using namespace tsg;

namespace {

TsgModel six_leaf_model() {
  return TsgModel(parse_newick("((1:0.3,2:0.6):0.4,(3:0.2,4:0.5):0.7,(5:0.4,6:0.1):0.3);"));
}

std::vector<double> upper_probs(const Eigen::MatrixXd& w) {
  std::vector<double> p;
  double total = 0.0;
  for (int i = 0; i < w.rows(); ++i)
    for (int j = i + 1; j < w.cols(); ++j) total += w(i, j);
  for (int i = 0; i < w.rows(); ++i)
    for (int j = i + 1; j < w.cols(); ++j) p.push_back(w(i, j) / total);
  return p;
}

int pair_cell(int i, int j, int n) {
  if (i > j) std::swap(i, j);
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

}  // namespace

TEST_CASE("direct sampling") {
  Rng rng(1);
  auto empty = sample_direct(Eigen::MatrixXd::Zero(5, 5), EdgeLaw::poisson, rng);
  CHECK(empty.num_edges() == 0);

  TsgModel m(parse_newick("((a:0.2,b:0.4):0.3,c:0.1,d:0.5);"));
  Rng r1(5), r2(5);
  std::ostringstream s1, s2;
  write_edge_list(s1, sample_direct(m, EdgeLaw::poisson, r1));
  write_edge_list(s2, sample_direct(m, EdgeLaw::poisson, r2));
  CHECK(s1.str() == s2.str());

  auto lambda = rate_matrix(m);
  const int reps = 100000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(4, 4);
  for (int r = 0; r < reps; ++r) sum += sample_direct(lambda, EdgeLaw::poisson, rng).dense();
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      double sd = std::sqrt(lambda(i, j) / reps);
      CHECK(std::abs(sum(i, j) / reps - lambda(i, j)) < 4 * sd);
    }

  Eigen::MatrixXd big = Eigen::MatrixXd::Constant(3, 3, 1.5);
  CHECK_THROWS_AS(sample_direct(big, EdgeLaw::bernoulli, rng), InvalidInput);
  CHECK_NOTHROW(sample_direct(big, EdgeLaw::poisson, rng));
}

TEST_CASE("poisson edge sequence") {
  Rng rng(2);
  Eigen::MatrixXd w(4, 4);
  w << 0, 1, 2, 3, 1, 0, 4, 5, 2, 4, 0, 6, 3, 5, 6, 0;
  PairSampler sampler(w);
  CHECK(sampler.total() == 21.0);

  int empty = 0;
  for (int r = 0; r < 1000; ++r) empty += algorithm1(1e-4, 4, sampler, rng).num_edges() == 0;
  CHECK(empty > 990);

  const int reps = 20000;
  double total = 0.0;
  for (int r = 0; r < reps; ++r) total += algorithm1(7.5, 4, sampler, rng).total_weight() / 2;
  CHECK(std::abs(total / reps - 7.5) < 4 * std::sqrt(7.5 / reps));

  // Given m, the counts are multinomial(m, w / sum w).
  std::vector<double> counts(6, 0.0);
  for (int r = 0; r < 5000; ++r) {
    auto g = algorithm1(10.0, 4, sampler, rng);
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) counts[pair_cell(i, j, 4)] += g(i, j);
  }
  CHECK(stats::chi_square_pvalue(counts, upper_probs(w)) > 0.001);

  CHECK_THROWS_AS(algorithm1(0.0, 4, sampler, rng), InvalidInput);
}

TEST_CASE("edge sequence matches direct Poisson moments") {
  Rng rng(3);
  auto m = six_leaf_model();
  auto lambda = rate_matrix(m);
  PairSampler sampler(lambda);
  const int reps = 20000;
  Eigen::MatrixXd s1 = Eigen::MatrixXd::Zero(6, 6), s2 = s1;
  for (int r = 0; r < reps; ++r) {
    Eigen::MatrixXd a = algorithm1(sampler.total(), 6, sampler, rng).dense();
    s1 += a;
    s2 += a.cwiseProduct(a);
  }
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) {
      double mean = s1(i, j) / reps, var = s2(i, j) / reps - mean * mean;
      CHECK(std::abs(mean - lambda(i, j)) < 5 * std::sqrt(lambda(i, j) / reps));
      // Poisson: variance equals the mean.
      CHECK(std::abs(var - lambda(i, j)) < 0.05 * lambda(i, j) + 0.01);
    }
}

TEST_CASE("DCSBM edge sampler") {
  DcsbmParams p;
  p.z = {0, 0, 1, 1, 1};
  p.theta = Eigen::VectorXd::LinSpaced(5, 0.5, 1.0);
  p.B.resize(2, 2);
  p.B << 1.0, 0.3, 0.3, 1.0;
  DcsbmEdgeSampler s(p);
  Eigen::MatrixXd w = p.population_adjacency();
  w.diagonal().setZero();
  CHECK(s.total() == doctest::Approx(w.sum() / 2));
  Rng rng(4);
  std::vector<double> counts(10, 0.0);
  for (int r = 0; r < 200000; ++r) {
    auto [i, j] = s(rng);
    REQUIRE(i < j);
    counts[pair_cell(i, j, 5)] += 1;
  }
  CHECK(stats::chi_square_pvalue(counts, upper_probs(w)) > 0.001);
}

TEST_CASE("top-down generator") {
  Rng rng(5);
  TsgModel star(random_tree(TreeKind::star, 5, WeightLaw::constant_weight(0.5), rng));
  auto gs = TopDownGenerator::from_tsg(star, 5);
  REQUIRE(gs.transitions(5).size() == 1);
  CHECK(gs.transitions(5)[0].target == kNoNode);
  CHECK(gs.transitions(5)[0].prob == doctest::Approx(1.0));
  for (int r = 0; r < 100; ++r) CHECK(gs.walk(rng) == 5);

  auto m = six_leaf_model();
  auto lambda = rate_matrix(m);
  for (NodeId root : m.tree.internal_nodes()) {
    auto g = TopDownGenerator::from_tsg(m, root);
    for (NodeId u : m.tree.internal_nodes()) {
      double total = 0.0;
      for (const auto& s : g.transitions(u)) total += s.prob;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    }
    Eigen::MatrixXd p = g.pair_probabilities();
    CHECK((p - lambda / (lambda.sum() / 2)).cwiseAbs().maxCoeff() < 1e-14);
  }

  auto g = TopDownGenerator::from_tsg(m, m.tree.internal_nodes().front());
  std::vector<double> counts(15, 0.0);
  for (int r = 0; r < 200000; ++r) {
    auto [i, j] = g(rng);
    counts[pair_cell(i, j, 6)] += 1;
  }
  CHECK(stats::chi_square_pvalue(counts, upper_probs(lambda)) > 0.001);
}

TEST_CASE("bottom-up half-tree constants") {
  auto q = parse_newick("((a:0.3,b:0.5)x:1.1,c:0.2,d:0.9)y;");
  TsgModel qm(q);
  auto gq = BottomUpGenerator::from_tsg(qm);
  NodeId x = q.at("x"), y = q.at("y");
  // Two-level unrolling: the half-tree {c, d} seen from x.
  double expect = std::exp(-1.1) * (std::exp(-0.2) + std::exp(-0.9));
  CHECK(gq.half_tree_constant(x, y) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(gq.half_tree_constant(y, x) == doctest::Approx(std::exp(-1.1) * (std::exp(-0.3) + std::exp(-0.5))));
  CHECK(gq.half_tree_constant(x, q.at("a")) == doctest::Approx(std::exp(-0.3)));

  // Closed form: c~_{r,u} = sum over leaves l behind u of exp(-d(r, l)).
  Rng rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    TsgModel m(random_tree(TreeKind::random_multifurcating, 9, default_weight_law(TreeKind::random_binary), rng));
    auto g = BottomUpGenerator::from_tsg(m);
    for (const auto& e : m.tree.edges())
      for (auto [r, u] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
        double closed = 0.0;
        for (NodeId l : m.leaves)
          if (oracle::on_path(m.tree, r, l, u)) closed += std::exp(-oracle::path_distance(m.tree, r, l));
        CHECK(g.half_tree_constant(r, u) == doctest::Approx(closed).epsilon(1e-12));
      }
  }
}

TEST_CASE("bottom-up symmetry and absorption") {
  auto m = six_leaf_model();
  auto g = BottomUpGenerator::from_tsg(m);
  CHECK(g.pi().sum() == doctest::Approx(1.0));
  Eigen::MatrixXd solved = oracle::absorption_by_solve(g);
  Eigen::MatrixXd paths = g.absorption_probabilities();
  CHECK((solved - paths).cwiseAbs().maxCoeff() < 1e-13);
  auto lambda = rate_matrix(m);
  for (int i = 0; i < 6; ++i) {
    CHECK(solved.row(i).sum() == doctest::Approx(1.0).epsilon(1e-13));
    for (int j = 0; j < 6; ++j) {
      if (i == j) continue;
      CHECK(std::abs(g.pi()(i) * solved(i, j) - g.pi()(j) * solved(j, i)) < 1e-12);
      CHECK(g.pi()(i) * solved(i, j) == doctest::Approx(lambda(i, j) / lambda.sum()).epsilon(1e-12));
    }
  }

  Rng rng(7);
  long steps = 0;
  while (steps < 100000) {
    auto walk = g.walk(rng);
    for (std::size_t s = 1; s < walk.size(); ++s) {
      REQUIRE(walk[s].first == walk[s - 1].second);
      REQUIRE(walk[s].second != walk[s - 1].first);
    }
    CHECK(walk.back().second != walk.front().first);
    CHECK(m.tree.is_leaf(walk.back().second));
    steps += static_cast<long>(walk.size());
  }

  std::vector<double> counts(15, 0.0);
  for (int r = 0; r < 200000; ++r) {
    auto [i, j] = g(rng);
    counts[pair_cell(i, j, 6)] += 1;
  }
  CHECK(stats::chi_square_pvalue(counts, upper_probs(lambda)) > 0.001);

  // Three-leaf star: the absorption matrix follows the pendant weights.
  TsgModel s3(parse_newick("(a:0.1,b:0.5,c:1.0);"));
  auto g3 = BottomUpGenerator::from_tsg(s3);
  Eigen::MatrixXd p3 = oracle::absorption_by_solve(g3);
  CHECK(p3(0, 1) == doctest::Approx(std::exp(-0.5) / (std::exp(-0.5) + std::exp(-1.0))));

  CHECK_THROWS_AS(BottomUpGenerator::from_tsg(TsgModel(parse_newick("(a:1,b:1);"))), InvalidInput);
}

TEST_CASE("symmetrize adjacency") {
  std::vector<Eigen::Triplet<double>> t{{0, 1, 2.0}, {1, 0, 2.0}, {1, 2, 1.0}, {2, 1, 1.0}};
  SparseMatrix a(3, 3);
  a.setFromTriplets(t.begin(), t.end());
  auto s = symmetrize_adjacency(a, SymmetrizeMode::sum);
  CHECK((s.dense() - 2 * Eigen::MatrixXd(a)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.total_weight() == 2 * a.sum());

  // A permutation matrix P gives P P^T = I, which is empty once loops go.
  std::vector<Eigen::Triplet<double>> p{{0, 2, 1.0}, {1, 0, 1.0}, {2, 1, 1.0}};
  SparseMatrix perm(3, 3);
  perm.setFromTriplets(p.begin(), p.end());
  CHECK(symmetrize_adjacency(perm, SymmetrizeMode::left).num_edges() == 0);
  CHECK(symmetrize_adjacency(perm, SymmetrizeMode::right).num_edges() == 0);

  SparseMatrix d(3, 3);
  std::vector<Eigen::Triplet<double>> dt{{0, 1, 1.0}, {0, 2, 1.0}};
  d.setFromTriplets(dt.begin(), dt.end());
  auto right = symmetrize_adjacency(d, SymmetrizeMode::right);
  CHECK(right(1, 2) == 1.0);  // columns 1 and 2 share row 0
  CHECK(symmetrize_adjacency(d, SymmetrizeMode::left).num_edges() == 0);

  CHECK_THROWS_AS(symmetrize_adjacency(SparseMatrix(2, 3), SymmetrizeMode::sum), InvalidInput);
  CHECK_THROWS_AS(parse_symmetrize_mode("both"), InvalidInput);
}

TEST_CASE("graph file formats") {
  Rng rng(8);
  auto g = sample_direct(rate_matrix(six_leaf_model()) * 3.0, EdgeLaw::poisson, rng);
  std::stringstream el;
  write_edge_list(el, g);
  auto back = symmetrize_adjacency(read_edge_list(el), SymmetrizeMode::sum);
  CHECK((back.dense() - g.dense()).cwiseAbs().maxCoeff() == 0.0);

  std::stringstream mm;
  write_matrix_market(mm, g);
  bool sym = false;
  auto full = read_matrix_market(mm, &sym);
  CHECK(sym);
  CHECK((Eigen::MatrixXd(full) - g.dense()).cwiseAbs().maxCoeff() == 0.0);

  std::stringstream isolated("# n=5\n0 1 2\n");
  CHECK(read_edge_list(isolated).rows() == 5);
  std::stringstream bad("0 1 -2\n");
  CHECK_THROWS_AS(read_edge_list(bad), InvalidInput);
  std::stringstream junk("0 x\n");
  CHECK_THROWS_AS(read_edge_list(junk), InvalidInput);

  SparseMatrix asym(2, 2);
  asym.insert(0, 1) = 1.0;
  CHECK_THROWS_AS(SparseGraph{asym}, InvalidInput);
}
