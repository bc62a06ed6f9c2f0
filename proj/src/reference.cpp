#include "cpme/reference.hpp"

#include "cpme/testing.hpp"

namespace cpme::reference {
namespace {

double k_rows(const KernelSpec& k, const Matrix& W1, Index i, const Matrix& W2, Index j) {
  const Vector a = W1.row(i).transpose();
  const Vector b = W2.row(j).transpose();
  return eval_kernel(k, std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                     std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
}

}  // namespace

GramMatrix gram(const KernelSpec& spec, const Matrix& W1, const Matrix& W2) {
  require(W1.cols() == W2.cols(), "reference::gram: dimension mismatch");
  GramMatrix K(W1.rows(), W2.rows());
  for (Index i = 0; i < W1.rows(); ++i)
    for (Index j = 0; j < W2.rows(); ++j) K(i, j) = k_rows(spec, W1, i, W2, j);
  return K;
}

GramMatrix product_gram(const KernelSpec& kA, const KernelSpec& kX, const Matrix& A1, const Matrix& X1,
                        const Matrix& A2, const Matrix& X2) {
  require(A1.rows() == X1.rows() && A2.rows() == X2.rows(), "reference::product_gram: length mismatch");
  GramMatrix K(A1.rows(), A2.rows());
  for (Index i = 0; i < A1.rows(); ++i)
    for (Index j = 0; j < A2.rows(); ++j) K(i, j) = k_rows(kA, A1, i, A2, j) * k_rows(kX, X1, i, X2, j);
  return K;
}

Matrix policy_kernel_means(const CmeModel& m, const PolicyAtoms& atoms) {
  const Index n = m.size();
  Matrix out(n, atoms.rows());
  for (Index i = 0; i < atoms.rows(); ++i) {
    const Index g = atoms.row_group[static_cast<std::size_t>(i)];
    const Index b = atoms.group_begin[static_cast<std::size_t>(g)];
    const Index e = atoms.group_begin[static_cast<std::size_t>(g) + 1];
    for (Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Index a = b; a < e; ++a) s += atoms.weights[a] * k_rows(m.kA(), m.train_A(), j, atoms.features, a);
      out(j, i) = s * k_rows(m.kX(), m.train_X(), j, atoms.group_X, g);
    }
  }
  return out;
}

double weighted_mmd2(const Vector& d, const GramMatrix& K) {
  const Index n = d.size();
  double s = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j) s += d[i] * d[j] * K(i, j);
  return s / (static_cast<double>(n) * static_cast<double>(n - 1));
}

std::vector<double> permutation_statistics(const Vector& d, const GramMatrix& K, Index n_perm, std::uint64_t seed) {
  const Index n = d.size();
  const Rng base(seed, kPermutationStream);
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(n_perm));
  for (Index b = 0; b < n_perm; ++b) {
    const auto perm = cpme::permutation(n, base, b);
    Vector dp(n);
    for (Index i = 0; i < n; ++i) dp[i] = d[perm[static_cast<std::size_t>(i)]];
    stats.push_back(weighted_mmd2(dp, K));
  }
  return stats;
}

double mmd2_unbiased(const Vector& s1, const Vector& s2, const KernelSpec& k) {
  const Index m = s1.size(), l = s2.size();
  auto kk = [&](double a, double b) {
    return eval_kernel(k, std::span<const double>(&a, 1), std::span<const double>(&b, 1));
  };
  double xx = 0.0, yy = 0.0, xy = 0.0;
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j)
      if (i != j) xx += kk(s1[i], s1[j]);
  for (Index i = 0; i < l; ++i)
    for (Index j = 0; j < l; ++j)
      if (i != j) yy += kk(s2[i], s2[j]);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < l; ++j) xy += kk(s1[i], s2[j]);
  const double dm = static_cast<double>(m), dl = static_cast<double>(l);
  return xx / (dm * (dm - 1.0)) + yy / (dl * (dl - 1.0)) - 2.0 * xy / (dm * dl);
}

std::vector<double> herd(const EmbeddingFunctional& chi, const HerdConfig& cfg) {
  cfg.validate();
  std::vector<double> history;
  for (Index t = 0; t < cfg.m; ++t) {
    std::size_t best = 0;
    double best_obj = herd_objective(chi, history, cfg.grid[0], cfg.classic_normalization);
    for (std::size_t g = 1; g < cfg.grid.size(); ++g) {
      const double obj = herd_objective(chi, history, cfg.grid[g], cfg.classic_normalization);
      if (obj > best_obj || (obj == best_obj && cfg.grid[g] < cfg.grid[best])) {
        best = g;
        best_obj = obj;
      }
    }
    history.push_back(cfg.grid[best]);
  }
  return history;
}

}  // namespace cpme::reference
