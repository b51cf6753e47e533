#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace tsg {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// Symmetric adjacency matrix with nonnegative entries and no self-loops.
/// Entries are counts for Poisson-sampled graphs but may be any real >= 0.
class SparseGraph {
 public:
  SparseGraph() = default;
  explicit SparseGraph(int n);
  /// Validates symmetry, nonnegativity and an empty diagonal.
  explicit SparseGraph(SparseMatrix a);

  int n() const { return static_cast<int>(a_.rows()); }
  const SparseMatrix& matrix() const { return a_; }
  double operator()(int i, int j) const { return a_.coeff(i, j); }

  /// Sum over all entries (each undirected edge counted twice).
  double total_weight() const;
  /// Number of stored undirected pairs with positive weight.
  long num_edges() const;
  /// Weighted degree: row sums.
  Eigen::VectorXd degrees() const;
  /// Distinct neighbours: sum_j 1{A_ij > 0}.
  Eigen::VectorXi neighbor_counts() const;

  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(a_); }

 private:
  SparseMatrix a_;
};

enum class SymmetrizeMode { sum, left, right };

SymmetrizeMode parse_symmetrize_mode(const std::string& name);

/// sum: A + A^T; left: A A^T; right: A^T A. The diagonal is dropped.
SparseGraph symmetrize_adjacency(const SparseMatrix& a, SymmetrizeMode mode);

/// Whitespace-separated "i j weight" lines with 0-based ids ("i j" means weight 1).
/// Lines starting with '#' are comments; "# n=<count>" fixes the node count.
/// Entries are returned as given (directed); self-loops are kept for the caller.
SparseMatrix read_edge_list(std::istream& is);
/// Writes each undirected pair once (i < j) with a "# n=" header.
void write_edge_list(std::ostream& os, const SparseGraph& g);

/// Coordinate Matrix Market (real, integer or pattern; general or symmetric).
/// Symmetric storage is expanded to the full matrix.
SparseMatrix read_matrix_market(std::istream& is, bool* was_symmetric = nullptr);
void write_matrix_market(std::ostream& os, const SparseGraph& g);

/// Loads a graph file; ".mtx" selects Matrix Market, anything else the edge
/// list format. Without a mode, edge lists are read as undirected edges
/// (A + A^T) and Matrix Market input must already be symmetric.
SparseGraph load_graph(const std::string& path, const SymmetrizeMode* mode = nullptr);

}  // namespace tsg
