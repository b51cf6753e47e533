#include "tsg/matrix_io.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "tsg/error.hpp"

namespace tsg {

namespace {

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, '\t')) out.push_back(cell);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

}  // namespace

int DistanceMatrix::index_of(const std::string& label) const {
  for (int i = 0; i < size(); ++i)
    if (labels[i] == label) return i;
  return -1;
}

DistanceMatrix DistanceMatrix::reordered(const std::vector<std::string>& order) const {
  if (static_cast<int>(order.size()) != size())
    throw InvalidInput("reordered: label count mismatch");
  std::vector<int> idx;
  for (const auto& l : order) {
    int i = index_of(l);
    if (i < 0) throw InvalidInput("reordered: unknown label '" + l + "'");
    idx.push_back(i);
  }
  DistanceMatrix out{order, Eigen::MatrixXd(size(), size())};
  for (int a = 0; a < size(); ++a)
    for (int b = 0; b < size(); ++b) out.values(a, b) = values(idx[a], idx[b]);
  return out;
}

void check_distance_matrix(const DistanceMatrix& d, double tol) {
  const int n = d.size();
  if (d.values.rows() != n || d.values.cols() != n)
    throw InvalidInput("distance matrix: dimensions do not match label count");
  for (int i = 0; i < n; ++i) {
    if (d.values(i, i) != 0.0) throw InvalidInput("distance matrix: nonzero diagonal");
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(d.values(i, j)))
        throw InvalidInput("distance matrix: non-finite entry");
      if (std::abs(d.values(i, j) - d.values(j, i)) > tol * std::max(1.0, std::abs(d.values(i, j))))
        throw InvalidInput("distance matrix: not symmetric");
    }
  }
}

void write_labeled_tsv(std::ostream& os, const Eigen::MatrixXd& m,
                       const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels) {
  for (const auto& c : col_labels) os << '\t' << c;
  os << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << row_labels.at(i);
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << '\t' << format_number(m(i, j));
    os << '\n';
  }
}

void write_distance_tsv(std::ostream& os, const DistanceMatrix& d) {
  write_labeled_tsv(os, d.values, d.labels, d.labels);
}

DistanceMatrix read_distance_tsv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidInput("distance TSV: empty input");
  auto header = split_tabs(line);
  if (header.size() < 2 || !header[0].empty())
    throw InvalidInput("distance TSV: header must start with an empty cell");
  DistanceMatrix d;
  d.labels.assign(header.begin() + 1, header.end());
  const int n = d.size();
  d.values.resize(n, n);
  for (int i = 0; i < n; ++i) {
    if (!std::getline(is, line))
      throw InvalidInput("distance TSV: expected " + std::to_string(n) + " rows");
    auto cells = split_tabs(line);
    if (static_cast<int>(cells.size()) != n + 1)
      throw InvalidInput("distance TSV: row " + std::to_string(i + 1) + " has wrong width");
    if (cells[0] != d.labels[i])
      throw InvalidInput("distance TSV: row label '" + cells[0] + "' does not match header");
    for (int j = 0; j < n; ++j) {
      try {
        std::size_t used = 0;
        d.values(i, j) = std::stod(cells[j + 1], &used);
        if (used != cells[j + 1].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw InvalidInput("distance TSV: bad number '" + cells[j + 1] + "' at row " +
                           std::to_string(i + 1));
      }
    }
  }
  check_distance_matrix(d);
  return d;
}

}  // namespace tsg
