#include "cpme/kernels.hpp"

#include "vector_exp.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <charconv>
#include <cmath>
#include <vector>

namespace cpme {
namespace {

inline double sq_dist(const double* a, const double* b, Index p) {
  double s = 0.0;
  for (Index k = 0; k < p; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

inline double dot(const double* a, const double* b, Index p) {
  double s = 0.0;
  for (Index k = 0; k < p; ++k) s += a[k] * b[k];
  return s;
}

// Points as contiguous columns.
inline double kernel_at(const KernelSpec& spec, double inv_two_l2, const double* a, const double* b,
                        Index p) {
  if (spec.family == KernelFamily::Gaussian) return std::exp(-sq_dist(a, b, p) * inv_two_l2);
  return dot(a, b, p);
}

void check_points(const Matrix& W, const char* what) {
  require(W.rows() > 0, std::string(what) + ": empty point set");
  if (!W.allFinite()) throw ConfigError(std::string(what) + ": non-finite input");
}

}  // namespace

void KernelSpec::validate() const {
  if (family == KernelFamily::Gaussian) {
    require(std::isfinite(lengthscale) && lengthscale > 0.0,
            "Gaussian kernel requires a positive finite lengthscale");
  }
}

std::string to_string(const KernelSpec& spec) {
  if (spec.family == KernelFamily::Linear) return "linear";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, spec.lengthscale);
  return "gaussian(" + std::string(buf, res.ptr) + ")";
}

KernelSpec parse_kernel_spec(const std::string& text) {
  if (text == "linear") return KernelSpec::linear();
  const std::string prefix = "gaussian(";
  if (text.rfind(prefix, 0) == 0 && text.size() > prefix.size() + 1 && text.back() == ')') {
    double l = 0.0;
    const char* first = text.data() + prefix.size();
    const char* last = text.data() + text.size() - 1;
    auto [ptr, ec] = std::from_chars(first, last, l);
    if (ec == std::errc() && ptr == last) {
      auto spec = KernelSpec::gaussian(l);
      spec.validate();
      return spec;
    }
  }
  throw ConfigError("cannot parse kernel spec '" + text + "'");
}

double eval_kernel(const KernelSpec& spec, std::span<const double> w, std::span<const double> w2) {
  spec.validate();
  require(w.size() == w2.size(), "eval_kernel: dimension mismatch");
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (!std::isfinite(w[k]) || !std::isfinite(w2[k])) throw ConfigError("eval_kernel: non-finite input");
  }
  const double inv = 1.0 / (2.0 * spec.lengthscale * spec.lengthscale);
  return kernel_at(spec, inv, w.data(), w2.data(), static_cast<Index>(w.size()));
}

GramMatrix gram(const KernelSpec& spec, const Matrix& W1, const Matrix& W2) {
  spec.validate();
  check_points(W1, "gram");
  check_points(W2, "gram");
  require(W1.cols() == W2.cols(), "gram: dimension mismatch");
  const Index n1 = W1.rows(), n2 = W2.rows(), p = W1.cols();
  GramMatrix K(n1, n2);
  if (spec.family == KernelFamily::Linear) {
    K.noalias() = W1 * W2.transpose();
    return K;
  }
  const double inv = 1.0 / (2.0 * spec.lengthscale * spec.lengthscale);
  // Column j: squared distances accumulated per coordinate, then one
  // vectorized exp.
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < n2; ++j) {
    auto col = K.col(j).array();
    col = (W1.col(0).array() - W2(j, 0)).square();
    for (Index c = 1; c < p; ++c) col += (W1.col(c).array() - W2(j, c)).square();
    col *= -inv;
    detail::exp_inplace(K.col(j).data(), n1);
  }
  return K;
}

GramMatrix gram(const KernelSpec& spec, const Matrix& W) {
  spec.validate();
  check_points(W, "gram");
  const Index n = W.rows();
  if (spec.family == KernelFamily::Linear) {
    GramMatrix K = W * W.transpose();
    // Mirror so that the result is exactly symmetric.
    K.triangularView<Eigen::StrictlyLower>() = K.transpose();
    return K;
  }
  GramMatrix K = gram(spec, W, W);
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) K(i, j) = K(j, i);
  return K;
}

Vector kernel_mean(const KernelSpec& spec, const Matrix& W1, const Eigen::Ref<const Matrix>& W2,
                   const Eigen::Ref<const Vector>& weights) {
  require(W1.cols() == W2.cols(), "kernel_mean: dimension mismatch");
  require(W2.rows() == weights.size(), "kernel_mean: one weight per point required");
  if (spec.family == KernelFamily::Linear) return W1 * (W2.transpose() * weights);
  const Index n = W1.rows(), p = W1.cols();
  const double inv = 1.0 / (2.0 * spec.lengthscale * spec.lengthscale);
  constexpr Index kBlock = 64;
  Vector out = Vector::Zero(n);
  Eigen::ArrayXXd D;
  for (Index s0 = 0; s0 < W2.rows(); s0 += kBlock) {
    const Index k = std::min(kBlock, W2.rows() - s0);
    D.resize(n, k);
    for (Index s = 0; s < k; ++s) {
      auto col = D.col(s);
      col = (W1.col(0).array() - W2(s0 + s, 0)).square();
      for (Index c = 1; c < p; ++c) col += (W1.col(c).array() - W2(s0 + s, c)).square();
    }
    D *= -inv;
    detail::exp_inplace(D.data(), D.size());
    out.noalias() += D.matrix() * weights.segment(s0, k);
  }
  return out;
}

GramMatrix product_gram(const KernelSpec& kA, const KernelSpec& kX, const Matrix& A1,
                        const Matrix& X1, const Matrix& A2, const Matrix& X2) {
  require(A1.rows() == X1.rows(), "product_gram: |A1| != |X1|");
  require(A2.rows() == X2.rows(), "product_gram: |A2| != |X2|");
  return gram(kA, A1, A2).cwiseProduct(gram(kX, X1, X2));
}

namespace {

// Number of pairs i < j of the sorted values with v[j] - v[i] <= t.
std::uint64_t pairs_within(const std::vector<double>& v, double t) {
  std::uint64_t count = 0;
  std::size_t lo = 0;
  for (std::size_t hi = 0; hi < v.size(); ++hi) {
    while (v[hi] - v[lo] > t) ++lo;
    count += hi - lo;
  }
  return count;
}

// k-th smallest (1-based) pairwise distance of sorted scalars. Bisection
// over the bit patterns of non-negative doubles, which order like the values.
double kth_pairwise_distance(const std::vector<double>& v, std::uint64_t k) {
  std::uint64_t lo = 0;
  std::uint64_t hi = std::bit_cast<std::uint64_t>(v.back() - v.front());
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (pairs_within(v, std::bit_cast<double>(mid)) >= k) hi = mid;
    else lo = mid + 1;
  }
  return std::bit_cast<double>(lo);
}

double median_of_sorted_pairs(const std::vector<double>& v) {
  const std::uint64_t n = v.size();
  const std::uint64_t m = n * (n - 1) / 2;
  const double upper = kth_pairwise_distance(v, m / 2 + 1);
  if (m % 2 == 1) return upper;
  return 0.5 * (kth_pairwise_distance(v, m / 2) + upper);
}

}  // namespace

double median_heuristic(const Matrix& points) {
  require(points.rows() >= 2, "median_heuristic: at least two points required");
  if (!points.allFinite()) throw ConfigError("median_heuristic: non-finite input");
  const Index n = points.rows(), p = points.cols();

  if (p == 1) {
    std::vector<double> v(points.data(), points.data() + n);
    std::sort(v.begin(), v.end());
    if (v.front() == v.back()) throw ConfigError("median_heuristic: degenerate point set");
    double med = median_of_sorted_pairs(v);
    if (med > 0.0) return med;
    // More than half the pairs coincide: median over the positive distances.
    const std::uint64_t zero = pairs_within(v, 0.0);
    const std::uint64_t m = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1) / 2 - zero;
    const double upper = kth_pairwise_distance(v, zero + m / 2 + 1);
    if (m % 2 == 1) return upper;
    return 0.5 * (kth_pairwise_distance(v, zero + m / 2) + upper);
  }

  // Squared distances; the square root is monotone, so only the middle
  // elements need it.
  const Matrix P = points.transpose();
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) d.push_back(sq_dist(P.col(i).data(), P.col(j).data(), p));

  auto median_sqrt = [](std::vector<double>& v) {
    const std::size_t m = v.size();
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(m / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (m % 2 == 1) return std::sqrt(*mid);
    return 0.5 * (std::sqrt(*std::max_element(v.begin(), mid)) + std::sqrt(*mid));
  };

  double med = median_sqrt(d);
  if (med > 0.0) return med;
  std::erase_if(d, [](double v) { return !(v > 0.0); });
  if (d.empty()) throw ConfigError("median_heuristic: degenerate point set");
  return median_sqrt(d);
}

double median_heuristic(const Vector& points) {
  return median_heuristic(Matrix(points));
}

Matrix pivoted_cholesky(const GramMatrix& K, double rel_tol) {
  require(K.rows() == K.cols(), "pivoted_cholesky: matrix must be square");
  require(rel_tol >= 0.0, "pivoted_cholesky: tolerance must be >= 0");
  const Index n = K.rows();
  Matrix U(n, n);
  if (n == 0) return U;
  Vector diag = K.diagonal();
  const double stop = rel_tol * diag.maxCoeff();
  Index r = 0;
  for (; r < n; ++r) {
    Index p = 0;
    const double top = diag.maxCoeff(&p);
    if (!(top > stop)) break;
    U.col(r) = K.col(p);
    if (r > 0) U.col(r).noalias() -= U.leftCols(r) * U.row(p).head(r).transpose();
    U.col(r) /= std::sqrt(top);
    diag -= U.col(r).cwiseAbs2();
    diag[p] = 0.0;
  }
  return U.leftCols(r);
}

}  // namespace cpme
