#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tsg {

/// Dense symmetric matrix of pairwise distances with row/column labels.
struct DistanceMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd values;

  int size() const { return static_cast<int>(labels.size()); }
  double operator()(int i, int j) const { return values(i, j); }
  /// Index of `label`, or -1.
  int index_of(const std::string& label) const;
  /// Copy with rows/columns permuted so that labels follow `order`.
  DistanceMatrix reordered(const std::vector<std::string>& order) const;
};

/// Throws InvalidInput unless square, symmetric within tol, zero diagonal and finite.
void check_distance_matrix(const DistanceMatrix& d, double tol = 1e-12);

/// Labeled TSV: header row "\tl1\tl2...", then one row per label.
void write_labeled_tsv(std::ostream& os, const Eigen::MatrixXd& m,
                       const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels);
void write_distance_tsv(std::ostream& os, const DistanceMatrix& d);
DistanceMatrix read_distance_tsv(std::istream& is);

}  // namespace tsg
