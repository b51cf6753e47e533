#include "tsg/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "tsg/error.hpp"
#include "tsg/generate.hpp"
#include "tsg/rng.hpp"

namespace tsg {

namespace {

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd ca = a.array() - a.mean(), cb = b.array() - b.mean();
  double den = ca.norm() * cb.norm();
  return den > 0 ? ca.dot(cb) / den : 0.0;
}

}  // namespace

std::vector<int> match_columns(const Eigen::MatrixXd& z_hat, const Eigen::MatrixXd& z_true) {
  if (z_hat.rows() != z_true.rows() || z_hat.cols() != z_true.cols())
    throw InvalidInput("match_columns: matrices must have the same shape");
  const int k = static_cast<int>(z_hat.cols());
  Eigen::MatrixXd corr(k, k);
  for (int j = 0; j < k; ++j)
    for (int t = 0; t < k; ++t) corr(j, t) = correlation(z_hat.col(j), z_true.col(t));

  std::vector<std::vector<int>> prefs(k);
  for (int j = 0; j < k; ++j) {
    prefs[j].resize(k);
    for (int t = 0; t < k; ++t) prefs[j][t] = t;
    std::stable_sort(prefs[j].begin(), prefs[j].end(), [&](int a, int b) { return corr(j, a) > corr(j, b); });
  }
  std::vector<int> next(k, 0), holder(k, -1), perm(k, -1);
  std::vector<int> free;
  for (int j = k - 1; j >= 0; --j) free.push_back(j);
  while (!free.empty()) {
    int j = free.back();
    free.pop_back();
    int t = prefs[j][next[j]++];
    int cur = holder[t];
    if (cur < 0) {
      holder[t] = j;
      perm[j] = t;
    } else if (corr(j, t) > corr(cur, t) || (corr(j, t) == corr(cur, t) && j < cur)) {
      holder[t] = j;
      perm[j] = t;
      perm[cur] = -1;
      free.push_back(cur);
    } else {
      free.push_back(j);
    }
  }
  return perm;
}

void ExperimentConfig::check() const {
  if (k < 2) throw InvalidInput("config: k must be at least 2");
  if (nodes() <= k) throw InvalidInput("config: n must exceed k");
  if (replicates < 1) throw InvalidInput("config: replicates must be positive");
  if (degrees.empty()) throw InvalidInput("config: degrees must not be empty");
  for (double d : degrees)
    if (!(d > 0.0) || !std::isfinite(d)) throw InvalidInput("config: degrees must be positive");
  if (!(theta_min > 0.0 && theta_min <= 1.0)) throw InvalidInput("config: theta_min must be in (0, 1]");
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw InvalidInput("config: weight must be >= 0");
  if (cutoff == CutoffRule::fixed && !(cutoff_value >= 0.0)) throw InvalidInput("config: cutoff must be >= 0");
  if (dense_threshold < 0) throw InvalidInput("config: dense_threshold must be >= 0");
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw InvalidInput("config: key '" + key + "' expects a number, got '" + v + "'");
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  double d = to_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 9e15)
    throw InvalidInput("config: key '" + key + "' expects an integer, got '" + v + "'");
  return static_cast<long long>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidInput("config: key '" + key + "' expects true or false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key == "tree") {
      try {
        cfg.tree = parse_tree_kind(value);
      } catch (const InvalidInput&) {
        throw InvalidInput("config: key 'tree' has unknown kind '" + value + "'");
      }
    } else if (key == "k") {
      cfg.k = static_cast<int>(to_integer(key, value));
    } else if (key == "n") {
      cfg.n = static_cast<int>(to_integer(key, value));
    } else if (key == "weight") {
      cfg.weight = to_double(key, value);
    } else if (key == "degrees" || key == "degree") {
      cfg.degrees.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) cfg.degrees.push_back(to_double(key, trim(item)));
    } else if (key == "replicates") {
      cfg.replicates = static_cast<int>(to_integer(key, value));
    } else if (key == "theta_min") {
      cfg.theta_min = to_double(key, value);
    } else if (key == "estimator") {
      cfg.estimator = parse_bnn_estimator(value);
    } else if (key == "cutoff") {
      if (value == "auto") {
        cfg.cutoff = CutoffRule::automatic;
      } else if (value == "estimated") {
        cfg.cutoff = CutoffRule::estimated;
      } else {
        cfg.cutoff = CutoffRule::fixed;
        cfg.cutoff_value = to_double(key, value);
      }
    } else if (key == "baselines") {
      cfg.baselines = to_bool(key, value);
    } else if (key == "seed") {
      long long s = to_integer(key, value);
      if (s < 0) throw InvalidInput("config: key 'seed' must be >= 0");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "dense_threshold") {
      cfg.dense_threshold = static_cast<int>(to_integer(key, value));
    } else {
      throw InvalidInput("config: unknown key '" + key + "'");
    }
  }
  cfg.check();
  return cfg;
}

void write_config(std::ostream& os, const ExperimentConfig& cfg) {
  os << "tree = " << to_string(cfg.tree) << "\n";
  os << "k = " << cfg.k << "\n";
  os << "n = " << cfg.nodes() << "\n";
  os << "weight = " << fmt(cfg.weight) << "\n";
  os << "degrees = ";
  for (std::size_t i = 0; i < cfg.degrees.size(); ++i) os << (i ? "," : "") << fmt(cfg.degrees[i]);
  os << "\n";
  os << "replicates = " << cfg.replicates << "\n";
  os << "theta_min = " << fmt(cfg.theta_min) << "\n";
  os << "estimator = " << to_string(cfg.estimator) << "\n";
  os << "cutoff = "
     << (cfg.cutoff == CutoffRule::automatic ? std::string("auto")
         : cfg.cutoff == CutoffRule::estimated ? std::string("estimated")
                                               : fmt(cfg.cutoff_value))
     << "\n";
  os << "baselines = " << (cfg.baselines ? "true" : "false") << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "dense_threshold = " << cfg.dense_threshold << "\n";
}

ReplicateData simulate_replicate(const ExperimentConfig& cfg, double degree, Rng& rng) {
  const int k = cfg.k, n = cfg.nodes();
  WeightLaw law = cfg.weight > 0 ? WeightLaw::constant_weight(cfg.weight) : default_weight_law(cfg.tree);
  ReplicateData r;
  r.truth = random_tree(cfg.tree, k, law, rng);
  std::vector<NodeId> blocks = r.truth.leaves();
  for (NodeId v : blocks) r.truth_labels.push_back(r.truth.label(v));
  r.B = (-pairwise_distances(r.truth, blocks).values.array()).exp().matrix();

  DcsbmParams& p = r.params;
  p.block_nodes = blocks;
  p.B = r.B;
  p.z.resize(n);
  p.theta.resize(n);
  std::uniform_int_distribution<int> block(0, k - 1);
  std::uniform_real_distribution<double> th(cfg.theta_min, 1.0);
  for (int i = 0; i < n; ++i) {
    p.z[i] = block(rng);
    p.theta(i) = cfg.theta_min < 1.0 ? th(rng) : 1.0;
  }
  // Expected degree sum_{i != j} lambda_ij / n, from block totals.
  Eigen::VectorXd s = Eigen::VectorXd::Zero(k), q = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < n; ++i) {
    s(p.z[i]) += p.theta(i);
    q(p.z[i]) += p.theta(i) * p.theta(i);
  }
  double total = s.dot(r.B * s) - q.dot(r.B.diagonal());
  double rho = degree * n / total;
  p.theta *= std::sqrt(rho);

  DcsbmEdgeSampler sampler(p);
  r.graph = algorithm1(n * degree / 2.0, n, std::cref(sampler), rng);
  return r;
}

namespace {

struct Outcome {
  bool failed = false;
  double rf = 1.0;
  double b_error = 0.0;
  double membership_error = 1.0;
};

Eigen::MatrixXd indicator(const std::vector<int>& z, int k) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(z.size()), k);
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z[i] >= 0 && z[i] < k) m(i, z[i]) = 1.0;
  return m;
}

// Scores an estimate whose column j carries tree label "b<j+1>" and block
// matrix b_hat (k_hat x k_hat, k_hat <= k).
Outcome score(const ReplicateData& r, const Eigen::MatrixXd& z_hat_full, const std::vector<int>& hard,
              const WeightedTree& tree, const Eigen::MatrixXd& b_hat) {
  const int k = static_cast<int>(r.truth_labels.size());
  const int k_hat = static_cast<int>(b_hat.rows());
  Eigen::MatrixXd z_hat = Eigen::MatrixXd::Zero(z_hat_full.rows(), k);
  z_hat.leftCols(k_hat) = z_hat_full;
  std::vector<int> perm = match_columns(z_hat, indicator(r.params.z, k));

  Outcome o;
  const int n = static_cast<int>(hard.size());
  int wrong = 0;
  for (int i = 0; i < n; ++i) wrong += perm[hard[i]] != r.params.z[i];
  o.membership_error = static_cast<double>(wrong) / n;

  Eigen::MatrixXd b_full = Eigen::MatrixXd::Identity(k, k);
  b_full.topLeftCorner(k_hat, k_hat) = b_hat;
  Eigen::MatrixXd b_perm(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) b_perm(perm[a], perm[b]) = b_full(a, b);
  o.b_error = (b_perm - r.B).norm();

  if (k_hat < k) {
    o.rf = 1.0;
    return o;
  }
  WeightedTree named = tree;
  for (NodeId v = 0; v < named.num_nodes(); ++v) {
    const std::string& l = named.label(v);
    if (l.size() > 1 && l[0] == 'b') named.set_label(v, r.truth_labels[perm[std::stoi(l.substr(1)) - 1]]);
  }
  o.rf = robinson_foulds(named, r.truth, r.truth_labels, true);
  return o;
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& z) {
  std::vector<int> out(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index j;
    z.row(i).maxCoeff(&j);
    out[i] = static_cast<int>(j);
  }
  return out;
}

MethodMetrics summarize(const std::string& name, const std::vector<Outcome>& outs) {
  MethodMetrics m;
  m.method = name;
  m.replicates = static_cast<int>(outs.size());
  std::vector<double> rf, be, me;
  int recovered = 0;
  for (const auto& o : outs) {
    if (o.failed) {
      ++m.failures;
      continue;
    }
    rf.push_back(o.rf);
    be.push_back(o.b_error);
    me.push_back(o.membership_error);
    recovered += o.rf == 0.0;
  }
  auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = sd = 0.0;
    if (v.empty()) return;
    for (double x : v) mean += x;
    mean /= v.size();
    if (v.size() < 2) return;
    for (double x : v) sd += (x - mean) * (x - mean);
    sd = std::sqrt(sd / (v.size() - 1));
  };
  mean_sd(rf, m.rf_mean, m.rf_sd);
  mean_sd(be, m.b_error_mean, m.b_error_sd);
  mean_sd(me, m.membership_error_mean, m.membership_error_sd);
  m.recovery = m.replicates ? static_cast<double>(recovered) / m.replicates : 0.0;
  return m;
}

bool binary_kind(TreeKind kind) {
  return kind == TreeKind::balanced_binary || kind == TreeKind::random_binary;
}

}  // namespace

std::vector<ConditionReport> run_experiment(const ExperimentConfig& cfg) {
  cfg.check();
  const int k = cfg.k;
  std::vector<ConditionReport> reports;
  const std::vector<std::pair<std::string, BaselineVariant>> baselines{
      {"bipartition_adjacency", BaselineVariant::adjacency}, {"bipartition_laplacian", BaselineVariant::laplacian}};

  for (std::size_t c = 0; c < cfg.degrees.size(); ++c) {
    const double degree = cfg.degrees[c];
    std::vector<Outcome> syn(cfg.replicates);
    std::vector<std::vector<Outcome>> base(baselines.size(), std::vector<Outcome>(cfg.replicates));
    for (int rep = 0; rep < cfg.replicates; ++rep) {
      const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, c), static_cast<std::uint64_t>(rep));
      Rng rng(seed);
      ReplicateData data = simulate_replicate(cfg, degree, rng);

      EigOptions eig;
      eig.dense_threshold = cfg.dense_threshold;
      eig.seed = seed;
      SynthesisOptions opt;
      opt.estimator = cfg.estimator;
      opt.eig = eig;
      if (cfg.cutoff == CutoffRule::fixed) opt.phi = cfg.cutoff_value;
      else if (cfg.cutoff == CutoffRule::automatic && binary_kind(cfg.tree)) opt.phi = 0.0;
      try {
        EstimationResult res = synthesis(data.graph, k, opt);
        syn[rep] = score(data, res.membership.Z, argmax_rows(res.membership.Z), res.tree, fitted_dcsbm(res).B);
      } catch (const std::runtime_error&) {
        syn[rep].failed = true;
      }

      if (!cfg.baselines) continue;
      for (std::size_t b = 0; b < baselines.size(); ++b) {
        try {
          BaselineResult br = bipartition_baseline(data.graph, k, baselines[b].second, eig);
          Eigen::MatrixXd bb = fitted_block_model(data.graph, br).B;
          Eigen::VectorXd d = bb.diagonal().cwiseMax(0.0).cwiseSqrt();
          for (int u = 0; u < bb.rows(); ++u)
            for (int v = 0; v < bb.cols(); ++v) bb(u, v) = d(u) * d(v) > 0 ? bb(u, v) / (d(u) * d(v)) : 0.0;
          base[b][rep] = score(data, indicator(br.membership, br.clusters), br.membership, br.tree, bb);
        } catch (const std::runtime_error&) {
          base[b][rep].failed = true;
        }
      }
    }
    ConditionReport report;
    report.degree = degree;
    report.methods.push_back(summarize("synthesis", syn));
    if (cfg.baselines)
      for (std::size_t b = 0; b < baselines.size(); ++b) report.methods.push_back(summarize(baselines[b].first, base[b]));
    reports.push_back(report);
  }
  return reports;
}

void write_report_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<ConditionReport>& rows) {
  os << "tree,k,n,degree,method,replicates,failures,rf_mean,rf_sd,recovery,b_error_mean,b_error_sd,"
        "b_error_per_entry,membership_error_mean,membership_error_sd\n";
  const double entries = static_cast<double>(cfg.k) * cfg.k;
  for (const auto& row : rows)
    for (const auto& m : row.methods)
      os << to_string(cfg.tree) << ',' << cfg.k << ',' << cfg.nodes() << ',' << fmt6(row.degree) << ',' << m.method
         << ',' << m.replicates << ',' << m.failures << ',' << fmt6(m.rf_mean) << ',' << fmt6(m.rf_sd) << ','
         << fmt6(m.recovery) << ',' << fmt6(m.b_error_mean) << ',' << fmt6(m.b_error_sd) << ','
         << fmt6(m.b_error_mean / entries) << ',' << fmt6(m.membership_error_mean) << ','
         << fmt6(m.membership_error_sd) << '\n';
}

}  // namespace tsg
