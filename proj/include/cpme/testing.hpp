#pragma once

#include "cpme/embedding.hpp"
#include "cpme/scenarios.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace cpme {

enum class Method { DrKpt, Kpt, PtLinear };

std::string to_string(Method m);
/// "dr-kpt", "kpt", "pt-linear".
Method parse_method(const std::string& text);

struct TestResult {
  Method method = Method::DrKpt;
  double statistic = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  bool reject = false;
  bool degenerate = false;  ///< zero variance (DR-KPT): p set to 1
  std::map<std::string, double> diagnostics;
};

/// Studentized cross U-statistic.
struct CrossStatistic {
  Vector f;            ///< f_i = rows_hat_i G mean_j rows_tilde_j
  double mean = 0.0;   ///< f-bar
  double sd = 0.0;     ///< population (divide by m) standard deviation
  double t = 0.0;      ///< sqrt(m) f-bar / sd; 0 when degenerate
  bool degenerate = false;
};

CrossStatistic cross_statistic(const Matrix& rows_hat, const Matrix& rows_tilde, const GramMatrix& cross_gram);
/// Same statistic from factored rows without forming them.
CrossStatistic cross_statistic(const EifFactors& hat, const EifFactors& tilde, const GramMatrix& cross_gram);

struct DrKptConfig {
  NuisanceConfig nuisance;
  Index mc_draws = 32;
  /// Fit nuisances on all n rows and use every row on both sides. This
  /// breaks the sample splitting and is kept only to show miscalibration.
  bool no_split = false;
  /// Randomly permute rows before splitting (for non-exchangeable inputs).
  bool shuffle = false;
  /// Common random numbers for the two policy integrals.
  bool shared_policy_draws = false;
  WeightOptions weights;
  /// Outcome kernel; Gaussian with median-heuristic lengthscale when unset.
  std::optional<KernelSpec> kY;
  std::uint64_t seed = 0;
};

/// Doubly robust kernel policy test of H0: nu(pi) = nu(pi2).
TestResult dr_kpt(const LoggedDataset& data, const Policy& pi, const Policy& pi2, double alpha,
                  const DrKptConfig& cfg);

/// Unbiased weighted MMD^2 with weight difference d = w_pi - w_pi2:
///   (d^T K d - sum_i d_i^2 K_ii) / (n (n - 1)).
double weighted_mmd2(const Vector& d, const GramMatrix& K);

/// The b-th permutation of 0..n-1 drawn from substream b of `base`.
std::vector<Index> permutation(Index n, const Rng& base, Index b);

/// weighted_mmd2 of d under n_perm seeded permutations (parallel over
/// permutations; permutation b depends only on (seed, b)).
std::vector<double> permutation_statistics(const Vector& d, const GramMatrix& K, Index n_perm, std::uint64_t seed);

/// Stream id of the permutation generator used by permutation_statistics.
inline constexpr std::uint64_t kPermutationStream = 0x6b7074ULL;

struct KptConfig {
  Index n_perm = 10000;
  /// Gaussian with median-heuristic lengthscale when unset.
  std::optional<KernelSpec> kernel;
  double propensity_floor = 1e-3;
  WeightOptions weights;
  std::uint64_t seed = 0;
};

/// Permutation test on the weighted MMD^2 (weights from an OLS propensity
/// fitted on all rows). p = (1 + #{perm >= observed}) / (1 + n_perm).
TestResult kpt_permutation(const LoggedDataset& data, const Policy& pi, const Policy& pi2, double alpha,
                           const KptConfig& cfg);

/// kpt_permutation with a linear outcome kernel (difference in means).
/// Uses the O(n) identity d^T K d = (sum d_i y_i)^2.
TestResult pt_linear(const LoggedDataset& data, const Policy& pi, const Policy& pi2, double alpha,
                     KptConfig cfg);

/// (Phi^{-1}((i - 0.5) / n), i-th smallest statistic).
std::vector<std::pair<double, double>> qq_points(std::vector<double> statistics);

struct StudyConfig {
  ScenarioSpec scenario;  ///< kind and environment knobs; n and seed are set per replication
  std::vector<Index> n_grid{400};
  Index reps = 100;
  std::vector<Method> methods{Method::DrKpt};
  double alpha = 0.05;
  std::uint64_t seed = 0;
  DrKptConfig dr_kpt;
  KptConfig kpt;
  int jobs = 0;  ///< replication threads; 0 = OpenMP default
};

struct StudyRow {
  std::string scenario;
  Index n = 0;
  Method method = Method::DrKpt;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  Index reps = 0;
  double runtime_s = 0.0;  ///< mean wall-clock seconds per test
};

struct RepRecord {
  Index n = 0;
  Method method = Method::DrKpt;
  Index rep = 0;
  TestResult result;
  double runtime_s = 0.0;
};

struct StudyTable {
  std::vector<StudyRow> rows;
  std::vector<RepRecord> records;  ///< ordered by (n, rep, method)

  /// Statistics of one (n, method) cell in replication order.
  std::vector<double> statistics(Index n, Method method) const;
};

/// Replicated rejection rates with Wilson 95% intervals. Replication r at
/// sample size n draws its data from seed stream_tag(seed, n, r), so the
/// table does not depend on jobs.
StudyTable run_study(const StudyConfig& cfg);

void write_study_csv(std::ostream& out, const StudyTable& table);
void write_null_stats_csv(std::ostream& out, const std::vector<double>& stats);
void write_qq_csv(std::ostream& out, const std::vector<std::pair<double, double>>& points);

}  // namespace cpme
