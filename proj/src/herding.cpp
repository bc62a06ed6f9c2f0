#include "cpme/herding.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace cpme {
namespace {

inline double k1(const KernelSpec& k, double a, double b) {
  return eval_kernel(k, std::span<const double>(&a, 1), std::span<const double>(&b, 1));
}

inline double history_factor(Index t, bool classic) {
  if (t <= 1) return 0.0;
  return classic ? 1.0 / static_cast<double>(t - 1) : 1.0 / static_cast<double>(t);
}

// (objective, value) ordering: larger objective wins, then smaller value.
inline bool better(double obj, double value, double best_obj, double best_value) {
  return obj > best_obj || (obj == best_obj && value < best_value);
}

}  // namespace

void HerdConfig::validate() const {
  require(m >= 1, "herd: m must be >= 1");
  require(!grid.empty(), "herd: empty grid");
  for (double g : grid) require(std::isfinite(g), "herd: non-finite grid value");
}

std::vector<double> linear_grid(double lo, double hi, Index points) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "grid: need lo < hi");
  require(points >= 2, "grid: at least two points required");
  std::vector<double> g(static_cast<std::size_t>(points));
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (Index i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = lo + step * static_cast<double>(i);
  g.back() = hi;
  return g;
}

std::vector<double> default_herd_grid(const Vector& y, Index points) {
  require(y.size() >= 1, "default_herd_grid: empty outcome sample");
  const double mean = y.mean();
  const double sd = y.size() > 1 ? std::sqrt((y.array() - mean).square().sum() / static_cast<double>(y.size() - 1)) : 0.0;
  const double half = sd > 0.0 ? 3.0 * sd : 1.0;
  return linear_grid(y.minCoeff() - half, y.maxCoeff() + half, points);
}

double herd_objective(const EmbeddingFunctional& chi, const std::vector<double>& history, double y,
                      bool classic_normalization) {
  double sum = 0.0;
  for (double h : history) sum += k1(chi.kY, h, y);
  const auto t = static_cast<Index>(history.size()) + 1;
  return chi(y) - sum * history_factor(t, classic_normalization);
}

std::vector<double> herd(const EmbeddingFunctional& chi, const HerdConfig& cfg) {
  cfg.validate();
  chi.validate();
  const auto G = static_cast<Index>(cfg.grid.size());
  const double* grid = cfg.grid.data();
  Vector target(G);
#pragma omp parallel for schedule(static)
  for (Index g = 0; g < G; ++g) target[g] = chi(grid[g]);

  Vector hist = Vector::Zero(G);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(cfg.m));
  for (Index t = 1; t <= cfg.m; ++t) {
    const double c = history_factor(t, cfg.classic_normalization);
    Index best = 0;
    double best_obj = target[0] - hist[0] * c;
    for (Index g = 1; g < G; ++g) {
      const double obj = target[g] - hist[g] * c;
      if (better(obj, grid[g], best_obj, grid[best])) {
        best = g;
        best_obj = obj;
      }
    }
    const double pick = grid[best];
    out.push_back(pick);
#pragma omp parallel for schedule(static)
    for (Index g = 0; g < G; ++g) hist[g] += k1(chi.kY, pick, grid[g]);
  }
  return out;
}

EmbeddingFunctional empirical_embedding(const std::vector<double>& samples, const KernelSpec& kY) {
  require(!samples.empty(), "empirical_embedding: no samples");
  const auto m = static_cast<Index>(samples.size());
  EmbeddingFunctional e;
  e.atoms = Eigen::Map<const Vector>(samples.data(), m);
  e.coeffs = Vector::Constant(m, 1.0 / static_cast<double>(m));
  e.kY = kY;
  return e;
}

void write_samples_csv(std::ostream& out, const std::vector<double>& samples) {
  out << "t,y_tilde\n";
  for (std::size_t t = 0; t < samples.size(); ++t) out << t + 1 << ',' << format_double(samples[t]) << '\n';
}

}  // namespace cpme
