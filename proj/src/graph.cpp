#include "tsg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "tsg/error.hpp"

namespace tsg {

namespace {

std::string format_weight(double w) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", w);
  return buf;
}

SparseMatrix from_triplets(int rows, int cols, const std::vector<Eigen::Triplet<double>>& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

SparseMatrix drop_diagonal(const SparseMatrix& m) {
  SparseMatrix out = m;
  out.prune([](int i, int j, double v) { return i != j && v != 0.0; });
  out.makeCompressed();
  return out;
}

}  // namespace

SparseGraph::SparseGraph(int n) : a_(n, n) {}

SparseGraph::SparseGraph(SparseMatrix a) : a_(std::move(a)) {
  if (a_.rows() != a_.cols()) throw InvalidInput("adjacency matrix is not square");
  a_.prune(0.0, 0.0);
  a_.makeCompressed();
  for (int c = 0; c < a_.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(a_, c); it; ++it) {
      if (it.row() == it.col()) throw InvalidInput("adjacency matrix has a self-loop");
      if (!(it.value() >= 0.0) || !std::isfinite(it.value()))
        throw InvalidInput("adjacency matrix has a negative or non-finite entry");
    }
  SparseMatrix t = a_.transpose();
  if ((t - a_).norm() > 1e-12 * std::max(1.0, a_.norm()))
    throw InvalidInput("adjacency matrix is not symmetric");
}

double SparseGraph::total_weight() const { return a_.sum(); }

long SparseGraph::num_edges() const { return a_.nonZeros() / 2; }

Eigen::VectorXd SparseGraph::degrees() const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n());
  for (int c = 0; c < a_.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(a_, c); it; ++it) d(it.col()) += it.value();
  return d;
}

Eigen::VectorXi SparseGraph::neighbor_counts() const {
  Eigen::VectorXi d = Eigen::VectorXi::Zero(n());
  for (int c = 0; c < a_.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(a_, c); it; ++it)
      if (it.value() > 0.0) ++d(it.col());
  return d;
}

SymmetrizeMode parse_symmetrize_mode(const std::string& name) {
  if (name == "sum") return SymmetrizeMode::sum;
  if (name == "left") return SymmetrizeMode::left;
  if (name == "right") return SymmetrizeMode::right;
  throw InvalidInput("unknown symmetrize mode '" + name + "' (expected sum, left or right)");
}

SparseGraph symmetrize_adjacency(const SparseMatrix& a, SymmetrizeMode mode) {
  if (a.rows() != a.cols()) throw InvalidInput("symmetrize_adjacency: input is not square");
  SparseMatrix at = a.transpose();
  SparseMatrix out;
  switch (mode) {
    case SymmetrizeMode::sum: out = a + at; break;
    case SymmetrizeMode::left: out = (a * at).pruned(); break;
    case SymmetrizeMode::right: out = (at * a).pruned(); break;
  }
  return SparseGraph(drop_diagonal(out));
}

SparseMatrix read_edge_list(std::istream& is) {
  std::vector<Eigen::Triplet<double>> t;
  long declared = -1, max_id = -1, lineno = 0;
  std::string line;
  while (std::getline(is, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      auto pos = line.find("n=");
      if (pos != std::string::npos) declared = std::stol(line.substr(pos + 2));
      continue;
    }
    std::istringstream ss(line);
    long i, j;
    double w = 1.0;
    if (!(ss >> i >> j)) throw InvalidInput("edge list: malformed line " + std::to_string(lineno));
    if (!(ss >> w)) w = 1.0;
    std::string rest;
    if (ss >> rest) throw InvalidInput("edge list: extra fields on line " + std::to_string(lineno));
    if (i < 0 || j < 0) throw InvalidInput("edge list: negative node id on line " + std::to_string(lineno));
    if (!(w >= 0.0) || !std::isfinite(w))
      throw InvalidInput("edge list: negative or non-finite weight on line " + std::to_string(lineno));
    max_id = std::max({max_id, i, j});
    t.emplace_back(static_cast<int>(i), static_cast<int>(j), w);
  }
  long n = std::max(declared, max_id + 1);
  if (declared >= 0 && max_id >= declared)
    throw InvalidInput("edge list: node id exceeds declared n=" + std::to_string(declared));
  return from_triplets(static_cast<int>(n), static_cast<int>(n), t);
}

void write_edge_list(std::ostream& os, const SparseGraph& g) {
  os << "# n=" << g.n() << '\n';
  const SparseMatrix& a = g.matrix();
  for (int c = 0; c < a.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(a, c); it; ++it)
      if (it.row() < it.col()) os << it.row() << '\t' << it.col() << '\t' << format_weight(it.value()) << '\n';
}

SparseMatrix read_matrix_market(std::istream& is, bool* was_symmetric) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidInput("matrix market: empty input");
  std::istringstream head(line);
  std::string banner, object, format, field, symmetry;
  head >> banner >> object >> format >> field >> symmetry;
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (banner != "%%MatrixMarket" || object != "matrix" || format != "coordinate")
    throw InvalidInput("matrix market: expected a coordinate matrix header");
  if (field != "real" && field != "integer" && field != "pattern")
    throw InvalidInput("matrix market: unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw InvalidInput("matrix market: unsupported symmetry '" + symmetry + "'");
  const bool sym = symmetry == "symmetric";
  if (was_symmetric) *was_symmetric = sym;

  while (std::getline(is, line))
    if (!line.empty() && line[0] != '%') break;
  long rows, cols, nnz;
  std::istringstream size_line(line);
  if (!(size_line >> rows >> cols >> nnz)) throw InvalidInput("matrix market: bad size line");

  std::vector<Eigen::Triplet<double>> t;
  for (long k = 0; k < nnz; ++k) {
    if (!std::getline(is, line)) throw InvalidInput("matrix market: fewer entries than declared");
    std::istringstream ss(line);
    long i, j;
    double w = 1.0;
    if (!(ss >> i >> j)) throw InvalidInput("matrix market: malformed entry " + std::to_string(k + 1));
    if (field != "pattern" && !(ss >> w))
      throw InvalidInput("matrix market: missing value in entry " + std::to_string(k + 1));
    if (i < 1 || j < 1 || i > rows || j > cols)
      throw InvalidInput("matrix market: index out of range in entry " + std::to_string(k + 1));
    if (!(w >= 0.0) || !std::isfinite(w))
      throw InvalidInput("matrix market: negative or non-finite value in entry " + std::to_string(k + 1));
    t.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), w);
    if (sym && i != j) t.emplace_back(static_cast<int>(j - 1), static_cast<int>(i - 1), w);
  }
  return from_triplets(static_cast<int>(rows), static_cast<int>(cols), t);
}

void write_matrix_market(std::ostream& os, const SparseGraph& g) {
  const SparseMatrix& a = g.matrix();
  os << "%%MatrixMarket matrix coordinate real symmetric\n";
  os << g.n() << ' ' << g.n() << ' ' << g.num_edges() << '\n';
  for (int c = 0; c < a.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(a, c); it; ++it)
      if (it.row() > it.col())
        os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << format_weight(it.value()) << '\n';
}

SparseGraph load_graph(const std::string& path, const SymmetrizeMode* mode) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open graph file '" + path + "'");
  const bool mtx = path.size() >= 4 && path.compare(path.size() - 4, 4, ".mtx") == 0;
  if (!mtx) {
    SparseMatrix raw = read_edge_list(in);
    return symmetrize_adjacency(raw, mode ? *mode : SymmetrizeMode::sum);
  }
  bool sym = false;
  SparseMatrix raw = read_matrix_market(in, &sym);
  if (mode) return symmetrize_adjacency(raw, *mode);
  if (raw.rows() != raw.cols()) throw InvalidInput("matrix market input is not square");
  SparseMatrix t = raw.transpose();
  if (!sym && (t - raw).norm() > 0.0)
    throw InvalidInput("matrix market input is not symmetric; choose a symmetrize mode");
  return SparseGraph(drop_diagonal(raw));
}

}  // namespace tsg
