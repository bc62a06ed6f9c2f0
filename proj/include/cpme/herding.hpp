#pragma once

#include "cpme/embedding.hpp"

#include <iosfwd>
#include <vector>

namespace cpme {

struct HerdConfig {
  Index m = 500;
  std::vector<double> grid;  ///< candidate outcomes; argmax is exact on this set
  /// Weight the history sum by 1/(t-1) instead of 1/t.
  bool classic_normalization = false;

  void validate() const;
};

/// `points` equally spaced values on [lo, hi].
std::vector<double> linear_grid(double lo, double hi, Index points);

/// [min y - 3 sd, max y + 3 sd] with `points` entries (sd with Bessel
/// correction; a constant sample gets a unit half-width).
std::vector<double> default_herd_grid(const Vector& y, Index points = 2048);

/// chi(y) - (1/t) sum_{l < t} k_Y(ytilde_l, y), with t = |history| + 1.
double herd_objective(const EmbeddingFunctional& chi, const std::vector<double>& history, double y,
                      bool classic_normalization = false);

/// Greedy herding: step t picks the grid point maximizing herd_objective;
/// ties go to the smallest grid value.
std::vector<double> herd(const EmbeddingFunctional& chi, const HerdConfig& cfg);

/// Uniform-weight embedding (1/m) sum_t phi(samples_t); duplicates are kept.
EmbeddingFunctional empirical_embedding(const std::vector<double>& samples, const KernelSpec& kY);

void write_samples_csv(std::ostream& out, const std::vector<double>& samples);

}  // namespace cpme
