#include "cpme/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace cpme {

double mmd2_unbiased(const Vector& s1, const Vector& s2, const KernelSpec& k) {
  require(s1.size() >= 2 && s2.size() >= 2, "mmd2_unbiased: each sample needs at least two points");
  const double m = static_cast<double>(s1.size());
  const double l = static_cast<double>(s2.size());
  const GramMatrix K11 = gram(k, Matrix(s1));
  const GramMatrix K22 = gram(k, Matrix(s2));
  const GramMatrix K12 = gram(k, Matrix(s1), Matrix(s2));
  const double xx = (K11.sum() - K11.trace()) / (m * (m - 1.0));
  const double yy = (K22.sum() - K22.trace()) / (l * (l - 1.0));
  return xx + yy - 2.0 * K12.sum() / (m * l);
}

double mmd_between_embeddings(const EmbeddingFunctional& e1, const EmbeddingFunctional& e2) {
  require(e1.kY == e2.kY, "mmd_between_embeddings: outcome kernels differ");
  double sq = 0.0;
  if (e1.size() > 0) sq += e1.squared_norm();
  if (e2.size() > 0) sq += e2.squared_norm();
  if (e1.size() > 0 && e2.size() > 0)
    sq -= 2.0 * e1.coeffs.dot(gram(e1.kY, Matrix(e1.atoms), Matrix(e2.atoms)) * e2.coeffs);
  if (sq < 0.0) {
    if (sq < -1e-10) throw NumericalError("mmd_between_embeddings: negative squared distance");
    sq = 0.0;
  }
  return std::sqrt(sq);
}

double wasserstein1d(Vector s1, Vector s2) {
  require(s1.size() >= 1 && s2.size() >= 1, "wasserstein1d: empty sample");
  std::sort(s1.begin(), s1.end());
  std::sort(s2.begin(), s2.end());
  const Index m = s1.size(), l = s2.size();
  if (m == l) return (s1 - s2).cwiseAbs().mean();
  // Quantile functions are step functions with jumps at i/m and j/l.
  double total = 0.0, u = 0.0;
  Index i = 0, j = 0;
  while (i < m && j < l) {
    const double next_i = static_cast<double>(i + 1) / static_cast<double>(m);
    const double next_j = static_cast<double>(j + 1) / static_cast<double>(l);
    const double next = std::min(next_i, next_j);
    total += (next - u) * std::abs(s1[i] - s2[j]);
    u = next;
    if (next_i <= next) ++i;
    if (next_j <= next) ++j;
  }
  return total;
}

DistanceReport compare_samples(const Vector& s1, const Vector& s2, const KernelSpec& k) {
  return {mmd2_unbiased(s1, s2, k), wasserstein1d(s1, s2), s1.size(), s2.size()};
}

double ope_dm(const CmeModel& cme, const LoggedDataset& data, const Policy& policy, Index mc_draws, Rng& rng) {
  require(data.size() >= 1, "ope_dm: empty data");
  const auto atoms = policy_atoms(policy, data.X, data.space, mc_draws, rng);
  const Matrix Kbar = policy_kernel_means(cme, atoms);
  return cme.train_Y().dot(cme.solve(Vector(Kbar.rowwise().sum()))) / static_cast<double>(data.size());
}

double ope_wips(const LoggedDataset& data, const Policy& policy, const PropensitySource& prop,
                const WeightOptions& opts) {
  require(data.size() >= 1, "ope_wips: empty data");
  const Vector w = importance_weights(data, policy, prop, opts).w;
  const double total = w.sum();
  if (!(total > 0.0)) throw NumericalError("ope_wips: importance weights sum to zero");
  return w.dot(data.Y) / total;
}

double ope_dr(const CmeModel& cme, const LoggedDataset& data, const Policy& policy, const PropensitySource& prop,
              Index mc_draws, Rng& rng, const WeightOptions& opts) {
  require(cme.trained_on(data), "ope_dr: data must be the rows the CME was fitted on");
  const Vector w = importance_weights(data, policy, prop, opts).w;
  const double dm = ope_dm(cme, data, policy, mc_draws, rng);
  const Vector fitted = cme.gram() * cme.solve(data.Y);  // eta(x_i, a_i) = beta(a_i, x_i)^T Y
  return dm + w.dot(data.Y - fitted) / static_cast<double>(data.size());
}

void write_metric_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  out << "scenario,method,metric,value,ci_low,ci_high\n";
  for (const auto& r : rows)
    out << r.scenario << ',' << r.method << ',' << r.metric << ',' << format_double(r.value) << ','
        << format_double(r.ci_low) << ',' << format_double(r.ci_high) << '\n';
}

}  // namespace cpme
