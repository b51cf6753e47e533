#include "tsg/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "tsg/error.hpp"
#include "tsg/rng.hpp"

namespace tsg {

namespace {

// Indices of the k leading values under the requested ordering.
std::vector<int> select_leading(const Eigen::VectorXd& values, int k, EigTarget target) {
  std::vector<int> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (target == EigTarget::magnitude) {
      double ma = std::abs(values(a)), mb = std::abs(values(b));
      if (ma != mb) return ma > mb;
    }
    return values(a) > values(b);
  });
  idx.resize(k);
  return idx;
}

void fix_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    double s = vectors.col(j).sum();
    if (std::abs(s) <= 1e-12 * std::sqrt(static_cast<double>(vectors.rows()))) {
      Eigen::Index at;
      vectors.col(j).cwiseAbs().maxCoeff(&at);
      s = vectors(at, j);
    }
    if (s < 0) vectors.col(j) *= -1.0;
  }
}

void check_request(Eigen::Index rows, Eigen::Index cols, int k) {
  if (rows != cols) throw InvalidInput("eigensolver: matrix is not square");
  if (k < 1 || k >= rows) throw InvalidInput("eigensolver: need 1 <= k < n");
}

template <class Matrix>
double residual(const Matrix& a, const EigenPairs& p) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < p.values.size(); ++j) {
    Eigen::VectorXd r = a * p.vectors.col(j) - p.values(j) * p.vectors.col(j);
    worst = std::max(worst, r.norm() / std::max(1.0, std::abs(p.values(j))));
  }
  return worst;
}

EigenPairs dense_eigs(const Eigen::MatrixXd& a, const EigOptions& opt) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw NumericalFailure("dense eigensolver failed");
  auto idx = select_leading(es.eigenvalues(), opt.k, opt.target);
  EigenPairs p;
  p.values.resize(opt.k);
  p.vectors.resize(a.rows(), opt.k);
  for (int j = 0; j < opt.k; ++j) {
    p.values(j) = es.eigenvalues()(idx[j]);
    p.vectors.col(j) = es.eigenvectors().col(idx[j]);
  }
  fix_signs(p.vectors);
  p.max_residual = residual(a, p);
  p.dense = true;
  return p;
}

template <class Matrix>
EigenPairs lanczos(const Matrix& a, const EigOptions& opt) {
  const int n = static_cast<int>(a.rows());
  const int k = opt.k;
  const int max_steps = opt.max_iter > 0 ? std::min(opt.max_iter, n) : std::min(n, 20 * k + 300);
  Rng rng(derive_seed(opt.seed, 0x4c414e43));
  std::normal_distribution<double> gauss;
  auto random_unit = [&](int cols_used, const Eigen::MatrixXd& basis) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = gauss(rng);
    for (int pass = 0; pass < 2; ++pass)
      if (cols_used > 0) v -= basis.leftCols(cols_used) * (basis.leftCols(cols_used).transpose() * v);
    return Eigen::VectorXd(v / v.norm());
  };

  Eigen::MatrixXd V(n, max_steps + 1);
  std::vector<double> alpha, beta;
  V.col(0) = random_unit(0, V);
  double anorm = 0.0;
  Eigen::VectorXd theta;
  Eigen::MatrixXd Y;
  std::vector<int> chosen;
  int m = 0;
  bool converged = false;

  for (int j = 0; j < max_steps; ++j) {
    Eigen::VectorXd w = a * V.col(j);
    if (j > 0) w -= beta[j - 1] * V.col(j - 1);
    double al = V.col(j).dot(w);
    w -= al * V.col(j);
    for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);
    alpha.push_back(al);
    double be = w.norm();
    anorm = std::max(anorm, std::abs(al) + be + (j > 0 ? beta[j - 1] : 0.0));
    m = j + 1;

    bool last = m == max_steps || m == n;
    if (m >= std::min(n, k + 1) && (m % 5 == 0 || last)) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        T(i, i) = alpha[i];
        if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      theta = es.eigenvalues();
      Y = es.eigenvectors();
      chosen = select_leading(theta, std::min(k, m), opt.target);
      converged = static_cast<int>(chosen.size()) == k;
      for (int c : chosen)
        if (std::abs(be * Y(m - 1, c)) > opt.tol * std::max(1.0, std::abs(theta(c)))) converged = false;
      if (converged || last) break;
    }
    if (be <= 1e-13 * std::max(1.0, anorm)) {
      // Invariant subspace: continue from a fresh direction, decoupled in T.
      beta.push_back(0.0);
      V.col(j + 1) = random_unit(j + 1, V);
    } else {
      beta.push_back(be);
      V.col(j + 1) = w / be;
    }
  }
  if (static_cast<int>(chosen.size()) < k) throw NumericalFailure("Lanczos: too few iterations for k");

  EigenPairs p;
  p.dense = false;
  p.values.resize(k);
  p.vectors = Eigen::MatrixXd(n, k);
  for (int j = 0; j < k; ++j) {
    p.values(j) = theta(chosen[j]);
    p.vectors.col(j) = V.leftCols(m) * Y.col(chosen[j]);
    p.vectors.col(j).normalize();
  }
  fix_signs(p.vectors);
  p.max_residual = residual(a, p);
  if (!converged && p.max_residual > opt.tol * 10.0)
    throw NumericalFailure("Lanczos did not converge: residual " + std::to_string(p.max_residual) +
                           " after " + std::to_string(m) + " steps");
  return p;
}

}  // namespace

EigenPairs top_k_eigs(const SparseMatrix& a, const EigOptions& opt) {
  check_request(a.rows(), a.cols(), opt.k);
  if (a.rows() <= opt.dense_threshold) return dense_eigs(Eigen::MatrixXd(a), opt);
  return lanczos(a, opt);
}

EigenPairs top_k_eigs(const Eigen::MatrixXd& a, const EigOptions& opt) {
  check_request(a.rows(), a.cols(), opt.k);
  if (a.rows() <= opt.dense_threshold) return dense_eigs(a, opt);
  return lanczos(a, opt);
}

EigenPairs lanczos_eigs(const SparseMatrix& a, const EigOptions& opt) {
  check_request(a.rows(), a.cols(), opt.k);
  return lanczos(a, opt);
}

double varimax_objective(const Eigen::MatrixXd& y) {
  const double n = static_cast<double>(y.rows());
  double v = 0.0;
  for (Eigen::Index l = 0; l < y.cols(); ++l) {
    Eigen::ArrayXd sq = y.col(l).array().square();
    double m2 = sq.sum() / n;
    v += sq.square().sum() / n - m2 * m2;
  }
  return v;
}

VarimaxResult varimax(const Eigen::MatrixXd& u, double tol, int max_sweeps) {
  const int k = static_cast<int>(u.cols());
  const double n = static_cast<double>(u.rows());
  VarimaxResult res;
  res.R = Eigen::MatrixXd::Identity(k, k);
  Eigen::MatrixXd y = u;
  res.objective = res.initial_objective = varimax_objective(y);
  if (k < 2) {
    res.converged = true;
    return res;
  }
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    for (int p = 0; p < k - 1; ++p)
      for (int q = p + 1; q < k; ++q) {
        Eigen::ArrayXd x = y.col(p).array(), z = y.col(q).array();
        Eigen::ArrayXd uu = x.square() - z.square(), vv = 2.0 * x * z;
        double A = uu.sum(), B = vv.sum();
        double C = (uu.square() - vv.square()).sum(), D = 2.0 * (uu * vv).sum();
        double phi = 0.25 * std::atan2(D - 2.0 * A * B / n, C - (A * A - B * B) / n);
        if (phi == 0.0) continue;
        double c = std::cos(phi), s = std::sin(phi);
        Eigen::VectorXd yp = y.col(p), yq = y.col(q);
        y.col(p) = c * yp + s * yq;
        y.col(q) = -s * yp + c * yq;
        Eigen::VectorXd rp = res.R.col(p), rq = res.R.col(q);
        res.R.col(p) = c * rp + s * rq;
        res.R.col(q) = -s * rp + c * rq;
      }
    double now = varimax_objective(y);
    double gain = now - res.objective;
    res.objective = now;
    res.sweeps = sweep;
    if (gain < tol * std::abs(now)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

namespace {

MembershipEstimate finish_vsp(const EigenPairs& eig) {
  const double n = static_cast<double>(eig.vectors.rows());
  MembershipEstimate est;
  est.eigenvalues = eig.values;
  Eigen::MatrixXd scaled = std::sqrt(n) * eig.vectors;
  auto vm = varimax(scaled);
  est.R = vm.R;
  est.varimax_converged = vm.converged;
  est.Z = scaled * vm.R;
  const int k = static_cast<int>(est.Z.cols());
  est.signs.resize(k);
  for (int j = 0; j < k; ++j) {
    double s = est.Z.col(j).sum();
    est.signs(j) = s > 0 ? 1.0 : (s < 0 ? -1.0 : 0.0);
    if (s == 0.0) est.zero_column = true;
    est.Z.col(j) *= est.signs(j);
  }
  return est;
}

}  // namespace

MembershipEstimate vsp(const SparseGraph& a, int k, const EigOptions& opt) {
  EigOptions o = opt;
  o.k = k;
  return finish_vsp(top_k_eigs(a.matrix(), o));
}

MembershipEstimate vsp(const Eigen::MatrixXd& a, int k, const EigOptions& opt) {
  EigOptions o = opt;
  o.k = k;
  return finish_vsp(top_k_eigs(a, o));
}

}  // namespace tsg
