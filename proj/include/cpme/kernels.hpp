#pragma once

#include "cpme/types.hpp"

#include <span>
#include <string>

namespace cpme {

enum class KernelFamily { Gaussian, Linear };

/// A positive semi-definite kernel on R^p.
///
/// Gaussian: k(w, w') = exp(-||w - w'||^2 / (2 l^2)) with lengthscale l > 0.
/// Linear:   k(w, w') = <w, w'>; the lengthscale is ignored.
struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  double lengthscale = 1.0;

  static KernelSpec gaussian(double lengthscale) { return {KernelFamily::Gaussian, lengthscale}; }
  static KernelSpec linear() { return {KernelFamily::Linear, 1.0}; }

  void validate() const;
  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

std::string to_string(const KernelSpec& spec);
/// Parses the form produced by to_string ("gaussian(0.5)", "linear").
KernelSpec parse_kernel_spec(const std::string& text);

double eval_kernel(const KernelSpec& spec, std::span<const double> w, std::span<const double> w2);

/// Gram matrix between two point sets; each row of W1/W2 is one point.
/// Rows are assembled in parallel; output does not depend on thread count.
GramMatrix gram(const KernelSpec& spec, const Matrix& W1, const Matrix& W2);

/// Symmetric Gram matrix of one point set. The upper triangle is mirrored
/// into the lower one, so the result is exactly symmetric.
GramMatrix gram(const KernelSpec& spec, const Matrix& W);

/// K(W1, W2) * weights without storing the Gram matrix beyond one cache-sized
/// block. Serial; callers parallelize over independent calls.
Vector kernel_mean(const KernelSpec& spec, const Matrix& W1, const Eigen::Ref<const Matrix>& W2,
                   const Eigen::Ref<const Vector>& weights);

/// Hadamard product of an action Gram and a covariate Gram:
/// entry (i, j) = kA(A1_i, A2_j) * kX(X1_i, X2_j).
GramMatrix product_gram(const KernelSpec& kA, const KernelSpec& kX, const Matrix& A1,
                        const Matrix& X1, const Matrix& A2, const Matrix& X2);

/// Median of the pairwise Euclidean distances over i < j.
///
/// If more than half the pairs coincide (median 0) but the set is not
/// degenerate, the median of the strictly positive distances is returned.
/// Throws ConfigError("degenerate point set") when all points coincide.
double median_heuristic(const Matrix& points);
double median_heuristic(const Vector& points);

/// Pivoted partial Cholesky factor U (n x r) with K ~= U U^T. Columns are
/// added at the largest residual diagonal until that falls to
/// rel_tol * max diag(K), so trace(K - U U^T) <= n * rel_tol * max diag(K).
Matrix pivoted_cholesky(const GramMatrix& K, double rel_tol);

}  // namespace cpme
