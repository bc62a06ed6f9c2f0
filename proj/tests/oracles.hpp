#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's kernel, solver or herding code; formulas are written out from
// their definitions.

#include <cpme/dataset.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

using cpme::Index;
using cpme::Matrix;
using cpme::Vector;

inline double gauss(double sq_dist, double ell) { return std::exp(-sq_dist / (2.0 * ell * ell)); }

inline double gauss_rows(const Matrix& A, Index i, const Matrix& B, Index j, double ell) {
  double s = 0.0;
  for (Index c = 0; c < A.cols(); ++c) s += (A(i, c) - B(j, c)) * (A(i, c) - B(j, c));
  return gauss(s, ell);
}

inline double gauss1(double a, double b, double ell) { return gauss((a - b) * (a - b), ell); }

/// Product Gaussian Gram between (A1, X1) and (A2, X2), written entrywise.
inline Matrix product_gauss(const Matrix& A1, const Matrix& X1, const Matrix& A2, const Matrix& X2, double la,
                            double lx) {
  Matrix K(A1.rows(), A2.rows());
  for (Index i = 0; i < A1.rows(); ++i)
    for (Index j = 0; j < A2.rows(); ++j) K(i, j) = gauss_rows(A1, i, A2, j, la) * gauss_rows(X1, i, X2, j, lx);
  return K;
}

/// x = M^{-1} b by full-pivot LU (a different factorization from the library's LLT).
inline Matrix dense_solve(const Matrix& M, const Matrix& b) { return M.fullPivLu().solve(b); }

/// Kernel ridge regression prediction at query columns: Kq^T (K + n lam I)^{-1} y.
inline Vector krr_predict(const Matrix& K, const Matrix& Kq, const Vector& y, double lam) {
  const auto n = static_cast<double>(K.rows());
  Matrix R = K;
  R.diagonal().array() += n * lam;
  return Kq.transpose() * dense_solve(R, y);
}

/// Unbiased MMD^2 by explicit double sums over i != j.
inline double mmd2_brute(const Vector& s1, const Vector& s2, double ell) {
  const Index m = s1.size(), l = s2.size();
  double xx = 0.0, yy = 0.0, xy = 0.0;
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j)
      if (i != j) xx += gauss1(s1[i], s1[j], ell);
  for (Index i = 0; i < l; ++i)
    for (Index j = 0; j < l; ++j)
      if (i != j) yy += gauss1(s2[i], s2[j], ell);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < l; ++j) xy += gauss1(s1[i], s2[j], ell);
  const double dm = static_cast<double>(m), dl = static_cast<double>(l);
  return xx / (dm * (dm - 1.0)) + yy / (dl * (dl - 1.0)) - 2.0 * xy / (dm * dl);
}

/// Weighted unbiased MMD^2 of the KPT statistic by the four-term double sum.
inline double kpt_brute(const Vector& w1, const Vector& w2, const Vector& y, double ell) {
  const Index n = y.size();
  double s = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double k = gauss1(y[i], y[j], ell);
      s += w1[i] * w1[j] * k + w2[i] * w2[j] * k - w1[i] * w2[j] * k - w2[i] * w1[j] * k;
    }
  return s / (static_cast<double>(n) * static_cast<double>(n - 1));
}

/// Herding by scanning every grid point at every step, objective
/// sum_j c_j k(atom_j, y) - (1/t) sum_{l<t} k(h_l, y); ties to the smaller value.
inline std::vector<double> herd_scan(const Vector& atoms, const Vector& coeffs, double ell,
                                     const std::vector<double>& grid, Index m) {
  std::vector<double> hist;
  for (Index t = 1; t <= m; ++t) {
    double best_y = 0.0, best_obj = -INFINITY;
    bool first = true;
    for (double y : grid) {
      double chi = 0.0;
      for (Index j = 0; j < atoms.size(); ++j) chi += coeffs[j] * gauss1(atoms[j], y, ell);
      double h = 0.0;
      for (double v : hist) h += gauss1(v, y, ell);
      const double obj = chi - (t > 1 ? h / static_cast<double>(t) : 0.0);
      if (first || obj > best_obj || (obj == best_obj && y < best_y)) {
        best_obj = obj;
        best_y = y;
        first = false;
      }
    }
    hist.push_back(best_y);
  }
  return hist;
}

/// Median of all pairwise Euclidean distances over i < j.
inline double median_pairwise(const Matrix& P) {
  std::vector<double> d;
  for (Index i = 0; i < P.rows(); ++i)
    for (Index j = i + 1; j < P.rows(); ++j) d.push_back((P.row(i) - P.row(j)).norm());
  std::sort(d.begin(), d.end());
  const std::size_t k = d.size();
  return k % 2 == 1 ? d[k / 2] : 0.5 * (d[k / 2 - 1] + d[k / 2]);
}

/// Standard normal density.
inline double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

/// Composite Simpson rule on [a, b] with 2 * half_steps intervals.
template <typename F>
double simpson(F f, double a, double b, int half_steps = 2000) {
  const int n = 2 * half_steps;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace oracle
