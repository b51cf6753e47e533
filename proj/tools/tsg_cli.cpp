#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "tsg/bench.hpp"
#include "tsg/diagnose.hpp"
#include "tsg/error.hpp"
#include "tsg/estimate.hpp"
#include "tsg/generate.hpp"
#include "tsg/graph.hpp"
#include "tsg/matrix_io.hpp"
#include "tsg/model.hpp"
#include "tsg/tree.hpp"

#ifndef TSG_VERSION
#define TSG_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace tsg;

namespace {

/// Bad flag values or flag combinations; exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Resolved parameters of one run. Keys starting with "resolved." record
/// derived values and are ignored on replay.
struct Params {
  std::string command;
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const {
    auto it = values.find(key);
    return it != values.end() && !it->second.empty() && it->second != "auto";
  }
  std::string str(const std::string& key) const {
    auto it = values.find(key);
    return it == values.end() ? std::string() : it->second;
  }
  double num(const std::string& key) const {
    const std::string s = str(key);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw UsageError("--" + key + ": expected a number, got '" + s + "'");
    return v;
  }
  long long integer(const std::string& key) const {
    double v = num(key);
    if (v != static_cast<double>(static_cast<long long>(v)))
      throw UsageError("--" + key + ": expected an integer, got '" + str(key) + "'");
    return static_cast<long long>(v);
  }
  std::uint64_t seed() const {
    long long s = integer("seed");
    if (s < 0) throw UsageError("--seed must be nonnegative");
    return static_cast<std::uint64_t>(s);
  }
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

fs::path out_dir(const Params& p) {
  if (!p.has("out-dir")) throw UsageError("--out-dir is required");
  fs::path dir = p.str("out-dir");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  body(out);
  out.flush();
  if (!out) throw InvalidInput("write failed for '" + path.string() + "'");
}

void write_manifest(const fs::path& dir, const Params& p) {
  write_file(dir / "manifest.txt", [&](std::ostream& os) {
    os << "# tsg run manifest\n";
    os << "command = " << p.command << "\n";
    os << "version = " << TSG_VERSION << "\n";
    for (const auto& [key, value] : p.values) os << key << " = " << value << "\n";
  });
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Params read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open manifest '" + path + "'");
  Params p;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidInput("manifest: malformed line '" + line + "'");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key == "command") p.command = value;
    else if (key == "version" || key.rfind("resolved.", 0) == 0) continue;
    else p.values[key] = value;
  }
  if (p.command.empty()) throw InvalidInput("manifest: no command recorded");
  return p;
}

SparseGraph load_input_graph(const Params& p) {
  if (!p.has("graph")) throw UsageError("--graph is required");
  if (p.has("symmetrize")) {
    SymmetrizeMode mode;
    try {
      mode = parse_symmetrize_mode(p.str("symmetrize"));
    } catch (const InvalidInput& e) {
      throw UsageError(e.what());
    }
    return load_graph(p.str("graph"), &mode);
  }
  return load_graph(p.str("graph"));
}

template <class F>
auto parse_choice(F parse, const std::string& value) {
  try {
    return parse(value);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
}

void write_graph(const fs::path& dir, const SparseGraph& g, const std::string& format, const std::string& stem) {
  if (format == "mtx") {
    write_file(dir / (stem + ".mtx"), [&](std::ostream& os) { write_matrix_market(os, g); });
  } else {
    write_file(dir / (stem + ".tsv"), [&](std::ostream& os) { write_edge_list(os, g); });
  }
}

// simulate ------------------------------------------------------------------

void run_simulate(Params& p) {
  const fs::path dir = out_dir(p);
  Rng rng(p.seed());
  WeightedTree tree;
  if (p.has("tree") == p.has("tree-kind")) throw UsageError("give exactly one of --tree and --tree-kind");
  if (p.has("tree")) {
    std::ifstream in(p.str("tree"));
    if (!in) throw InvalidInput("cannot open tree file '" + p.str("tree") + "'");
    std::stringstream text;
    text << in.rdbuf();
    tree = parse_newick(text.str());
  } else {
    TreeKind kind = parse_choice(parse_tree_kind, p.str("tree-kind"));
    WeightLaw law = p.has("weight") ? WeightLaw::constant_weight(p.num("weight")) : default_weight_law(kind);
    tree = random_tree(kind, static_cast<int>(p.integer("leaves")), law, rng);
  }
  TsgModel model(tree, p.num("c"));
  const int n = model.size();
  const std::string generator = p.str("generator");
  if (p.has("degree") && p.has("zeta")) throw UsageError("give at most one of --degree and --zeta");

  SparseGraph g;
  if (generator == "direct") {
    if (p.has("zeta")) throw UsageError("--zeta applies to sequential generators; use --degree or --c");
    Eigen::MatrixXd lambda = rate_matrix(model);
    if (p.has("degree")) lambda *= p.num("degree") * n / lambda.sum();
    EdgeLaw law = parse_choice(parse_edge_law, p.str("edge-law"));
    g = sample_direct(lambda, law, rng);
  } else {
    double zeta = 0.0;
    if (p.has("zeta")) zeta = p.num("zeta");
    else if (p.has("degree")) zeta = p.num("degree") * n / 2.0;
    else throw UsageError("--" + generator + " needs --zeta or --degree");
    if (generator == "algorithm1") {
      PairSampler sampler(rate_matrix(model));
      g = algorithm1(zeta, n, std::cref(sampler), rng);
    } else if (generator == "topdown") {
      NodeId root = kNoNode;
      for (NodeId v = 0; v < tree.num_nodes() && root == kNoNode; ++v)
        if (p.has("root") ? tree.label(v) == p.str("root") : !tree.is_leaf(v)) root = v;
      if (root == kNoNode) throw InvalidInput("no node labeled '" + p.str("root") + "' for --root");
      TopDownGenerator gen = TopDownGenerator::from_tsg(model, root);
      g = algorithm1(zeta, n, std::cref(gen), rng);
    } else if (generator == "bottomup") {
      BottomUpGenerator gen = BottomUpGenerator::from_tsg(model);
      g = algorithm1(zeta, n, std::cref(gen), rng);
    } else {
      throw UsageError("--generator must be direct, algorithm1, topdown or bottomup");
    }
  }

  write_graph(dir, g, p.str("format"), "graph");
  write_file(dir / "tree.nwk", [&](std::ostream& os) { os << to_newick(tree) << "\n"; });
  write_file(dir / "nodes.tsv", [&](std::ostream& os) {
    os << "node\tlabel\n";
    for (int i = 0; i < n; ++i) os << i << '\t' << tree.label(model.leaves[i]) << '\n';
  });
  p.values["resolved.nodes"] = std::to_string(n);
  p.values["resolved.edges"] = std::to_string(g.num_edges());
  write_manifest(dir, p);
}

// estimate ------------------------------------------------------------------

SynthesisOptions synthesis_options(const Params& p) {
  SynthesisOptions opt;
  if (p.has("epsilon")) opt.epsilon = p.num("epsilon");
  if (p.has("phi")) opt.phi = p.num("phi");
  opt.estimator = parse_choice(parse_bnn_estimator, p.str("estimator"));
  opt.eig.seed = p.seed();
  return opt;
}

void run_estimate(Params& p) {
  const fs::path dir = out_dir(p);
  SparseGraph g = load_input_graph(p);
  SynthesisOptions opt = synthesis_options(p);
  opt.twigs = true;
  EstimationResult res = synthesis(g, static_cast<int>(p.integer("k")), opt);

  const DistanceEstimate& d = res.distances;
  std::vector<std::string> rows(g.n());
  for (int i = 0; i < g.n(); ++i) rows[i] = std::to_string(i);
  write_file(dir / "block_tree.nwk", [&](std::ostream& os) { os << to_newick(res.tree) << "\n"; });
  write_file(dir / "full_tree.nwk", [&](std::ostream& os) { os << to_newick(*res.full_tree) << "\n"; });
  write_file(dir / "Z.tsv", [&](std::ostream& os) { write_labeled_tsv(os, res.membership.Z, rows, d.labels); });
  write_file(dir / "B.tsv", [&](std::ostream& os) { write_labeled_tsv(os, d.B, d.labels, d.labels); });
  write_file(dir / "D.tsv", [&](std::ostream& os) { write_distance_tsv(os, d.D); });
  write_file(dir / "sigma.tsv", [&](std::ostream& os) { write_labeled_tsv(os, d.sigma, d.labels, d.labels); });
  p.values["resolved.epsilon"] = format_double(res.epsilon);
  p.values["resolved.phi"] = format_double(res.phi);
  p.values["resolved.phi_degenerate"] = res.phi_degenerate ? "true" : "false";
  p.values["resolved.all_contracted"] = res.all_contracted ? "true" : "false";
  write_manifest(dir, p);
  if (res.phi_degenerate) std::cerr << "warning: estimated cutoff is zero; the tree is plain neighbor joining\n";
}

// diagnose ------------------------------------------------------------------

void run_diagnose(Params& p) {
  const fs::path dir = out_dir(p);
  SparseGraph g = load_input_graph(p);
  Rng rng(p.seed());
  const int bootstrap = static_cast<int>(p.integer("bootstrap"));
  EigOptions eig;
  eig.seed = p.seed();
  SplittingDiagnostic d = diagnose_splitting(g, bootstrap, rng, eig);
  write_file(dir / "diagnostic.csv", [&](std::ostream& os) { write_diagnostic_csv(os, d); });
  write_file(dir / "summary.json", [&](std::ostream& os) { write_diagnostic_summary(os, d); });

  const std::string model = p.str("bootstrap-model");
  if (model != "none") {
    BootstrapOptions opt;
    opt.synthesis = synthesis_options(p);
    opt.baseline = parse_choice(parse_baseline_variant, p.str("baseline"));
    opt.silverman_bootstrap = bootstrap;
    if (!p.has("k")) throw UsageError("--bootstrap-model needs --k");
    BootstrapResult b = parametric_bootstrap(g, static_cast<int>(p.integer("k")),
                                             parse_choice(parse_bootstrap_model, model), rng, opt);
    write_graph(dir, b.graph, "tsv", "bootstrap_graph");
    write_file(dir / "bootstrap_diagnostic.csv", [&](std::ostream& os) { write_diagnostic_csv(os, b.diagnostic); });
    write_file(dir / "bootstrap_summary.json",
               [&](std::ostream& os) { write_diagnostic_summary(os, b.diagnostic); });
    p.values["resolved.bootstrap_p_value"] = format_double(b.diagnostic.silverman.p_value);
  }
  p.values["resolved.p_value"] = format_double(d.silverman.p_value);
  write_manifest(dir, p);
}

// bench ---------------------------------------------------------------------

void run_bench(Params& p) {
  const fs::path dir = out_dir(p);
  // The manifest carries the resolved configuration as "bench.<key>" entries.
  std::ostringstream text;
  for (const auto& [key, value] : p.values)
    if (key.rfind("bench.", 0) == 0) text << key.substr(6) << " = " << value << "\n";
  std::istringstream in(text.str());
  ExperimentConfig cfg = parse_config(in);
  auto rows = run_experiment(cfg);
  write_file(dir / "report.csv", [&](std::ostream& os) { write_report_csv(os, cfg, rows); });
  write_manifest(dir, p);
}

/// Reads the config file into bench.* entries; an explicit --seed wins.
void resolve_bench_config(Params& p, bool seed_given) {
  if (!p.has("config")) throw UsageError("--config is required");
  std::ifstream in(p.str("config"));
  if (!in) throw InvalidInput("cannot open config '" + p.str("config") + "'");
  ExperimentConfig cfg = parse_config(in);
  if (seed_given) cfg.seed = p.seed();
  p.values["seed"] = std::to_string(cfg.seed);
  std::ostringstream os;
  write_config(os, cfg);
  std::istringstream lines(os.str());
  std::string line;
  while (std::getline(lines, line)) {
    auto eq = line.find('=');
    p.values["bench." + trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
}

void dispatch(Params& p) {
  if (p.command == "simulate") run_simulate(p);
  else if (p.command == "estimate") run_estimate(p);
  else if (p.command == "diagnose") run_diagnose(p);
  else if (p.command == "bench") run_bench(p);
  else throw InvalidInput("unknown command '" + p.command + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree-stochastic graphs: simulation, hierarchy estimation and splitting diagnostics"};
  app.set_version_flag("--version", std::string(TSG_VERSION));
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> store;
  auto opt = [&](CLI::App* sub, const std::string& name, const std::string& def, const std::string& help) {
    auto& slot = store[sub->get_name()][name];
    slot = def;
    auto* o = sub->add_option("--" + name, slot, help);
    if (!def.empty()) o->capture_default_str();
    return o;
  };

  CLI::App* sim = app.add_subcommand("simulate", "Sample a graph from a tree model");
  opt(sim, "tree", "", "Newick file with the latent tree");
  opt(sim, "tree-kind", "", "random tree: star, balanced_binary, random_binary, random_multifurcating");
  opt(sim, "leaves", "16", "number of leaves for --tree-kind");
  opt(sim, "weight", "", "constant edge weight for --tree-kind (default: kind's law)");
  opt(sim, "c", "1", "rate scale c");
  opt(sim, "degree", "", "target expected degree");
  opt(sim, "zeta", "", "expected number of edges for sequential generators");
  opt(sim, "generator", "direct", "direct, algorithm1, topdown or bottomup");
  opt(sim, "edge-law", "poisson", "poisson or bernoulli (direct only)");
  opt(sim, "root", "", "root label for topdown (default: first internal node)");
  opt(sim, "format", "tsv", "graph format: tsv or mtx");

  CLI::App* est = app.add_subcommand("estimate", "Estimate the latent block tree with synthesis");
  opt(est, "graph", "", "edge list (.tsv) or Matrix Market (.mtx)")->required();
  opt(est, "k", "", "number of blocks")->required();
  opt(est, "epsilon", "auto", "regularizer (default 0.01 sqrt(mean degree) / n)");
  opt(est, "phi", "auto", "edge cutoff (default twice the largest standard error)");
  opt(est, "estimator", "quadratic", "quadratic, plus_quadratic or plus_projected");
  opt(est, "symmetrize", "", "sum, left or right for directed input");

  CLI::App* dia = app.add_subcommand("diagnose", "Splitting-vector diagnostics and Silverman test");
  opt(dia, "graph", "", "edge list (.tsv) or Matrix Market (.mtx)")->required();
  opt(dia, "bootstrap", "500", "Silverman bootstrap resamples");
  opt(dia, "symmetrize", "", "sum, left or right for directed input");
  opt(dia, "bootstrap-model", "none", "none, synthesis or bipartition");
  opt(dia, "k", "", "blocks for the fitted bootstrap model");
  opt(dia, "epsilon", "auto", "synthesis regularizer for the bootstrap fit");
  opt(dia, "phi", "auto", "synthesis cutoff for the bootstrap fit");
  opt(dia, "estimator", "quadratic", "synthesis estimator for the bootstrap fit");
  opt(dia, "baseline", "adjacency", "bipartition variant: adjacency or laplacian");

  CLI::App* ben = app.add_subcommand("bench", "Run a simulation benchmark from a config file");
  opt(ben, "config", "", "key = value configuration file")->required();

  for (CLI::App* sub : {sim, est, dia, ben}) {
    opt(sub, "seed", "0", "random seed");
    opt(sub, "out-dir", "", "output directory")->required();
  }

  CLI::App* rep = app.add_subcommand("replay", "Rerun a recorded manifest");
  std::string manifest_path, replay_dir;
  rep->add_option("manifest", manifest_path, "manifest.txt from an earlier run")->required();
  rep->add_option("--out-dir", replay_dir, "write outputs here instead of the recorded directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    Params p;
    if (rep->parsed()) {
      p = read_manifest(manifest_path);
      if (!replay_dir.empty()) p.values["out-dir"] = replay_dir;
    } else {
      CLI::App* sub = app.get_subcommands().front();
      p.command = sub->get_name();
      p.values = store[p.command];
      if (p.command == "bench") resolve_bench_config(p, sub->get_option("--seed")->count() > 0);
    }
    dispatch(p);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
