#pragma once

#include "cpme/embedding.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace cpme {

/// Unbiased MMD^2 between two outcome samples (each of size >= 2).
double mmd2_unbiased(const Vector& s1, const Vector& s2, const KernelSpec& k);

/// RKHS distance between two embeddings with the same outcome kernel.
/// Squared values in (-1e-10, 0) are clamped to 0.
double mmd_between_embeddings(const EmbeddingFunctional& e1, const EmbeddingFunctional& e2);

/// 1-D Wasserstein-1 distance: mean absolute difference of order statistics
/// for equal sizes, otherwise the integral of |F1^{-1} - F2^{-1}|.
double wasserstein1d(Vector s1, Vector s2);

struct DistanceReport {
  double mmd2 = 0.0;
  double wasserstein1 = 0.0;
  Index m1 = 0;
  Index m2 = 0;
};

DistanceReport compare_samples(const Vector& s1, const Vector& s2, const KernelSpec& k);

/// Direct method: (1/n) sum_i E_{a ~ pi(.|x_i)} beta(a, x_i)^T Y over the rows
/// of `data`.
double ope_dm(const CmeModel& cme, const LoggedDataset& data, const Policy& policy, Index mc_draws, Rng& rng);

/// Self-normalized IPS: sum w_i y_i / sum w_i.
double ope_wips(const LoggedDataset& data, const Policy& policy, const PropensitySource& prop,
                const WeightOptions& opts = {});

/// Doubly robust: (1/n) sum_i [E_pi eta(x_i, a) + w_i (y_i - eta(x_i, a_i))] with
/// eta(x, a) = beta(a, x)^T Y. `data` must be the CME training rows.
double ope_dr(const CmeModel& cme, const LoggedDataset& data, const Policy& policy, const PropensitySource& prop,
              Index mc_draws, Rng& rng, const WeightOptions& opts = {});

/// One row of `scenario,method,metric,value,ci_low,ci_high`.
struct MetricRow {
  std::string scenario;
  std::string method;
  std::string metric;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

void write_metric_csv(std::ostream& out, const std::vector<MetricRow>& rows);

}  // namespace cpme
