#pragma once

#include "cpme/herding.hpp"
#include "cpme/metrics.hpp"
#include "cpme/scenarios.hpp"

#include <vector>

namespace cpme {

// ---------------------------------------------------------------------------
// Counterfactual sampling by herding

struct HerdStudyConfig {
  ScenarioSpec scenario;  ///< kind and knobs; n is the logged sample size
  Index m = 500;          ///< herded samples per estimator
  Index oracle_size = 0;  ///< oracle outcomes per replication; 0 = n
  Index grid_points = 2048;
  Index mc_draws = 32;
  Index reps = 100;
  bool classic_normalization = false;
  NuisanceConfig nuisance;
  std::uint64_t seed = 0;
  int jobs = 0;
};

struct HerdRep {
  double w1_plugin = 0.0, w1_dr = 0.0;
  double mmd2_plugin = 0.0, mmd2_dr = 0.0;
  double lambda = 0.0;
};

/// One replication; also returns the herded samples when requested.
HerdRep herd_replication(const HerdStudyConfig& cfg, Index rep, std::vector<double>* plugin_samples = nullptr,
                         std::vector<double>* dr_samples = nullptr);

struct HerdStudy {
  std::vector<HerdRep> reps;
  std::vector<MetricRow> rows;  ///< mean with normal 95% interval per (method, metric)
};

HerdStudy run_herd_study(const HerdStudyConfig& cfg);

// ---------------------------------------------------------------------------
// Off-policy evaluation on the recommendation environment

struct OpeStudyConfig {
  ScenarioSpec scenario;  ///< OpeRecommend knobs; alpha is overridden per setting
  std::vector<double> alphas{-1.0, 0.0, 1.0};
  Index reps = 30;
  Index mc_draws = 32;
  Index oracle_draws = 256;  ///< target-policy draws per logged row for the true value
  NuisanceConfig nuisance;   ///< defaults replaced by a 5-fold 1e-8..1e-3 grid
  double propensity_floor = 1e-300;  ///< list masses can be far below 1e-3
  std::uint64_t seed = 0;
  int jobs = 0;

  OpeStudyConfig();
};

struct OpeRep {
  double alpha = 0.0;
  Index rep = 0;
  double truth = 0.0;
  double cpme = 0.0, dr_cpme = 0.0, wips = 0.0;
  double lambda = 0.0;
};

struct OpeStudy {
  std::vector<OpeRep> reps;
  std::vector<MetricRow> rows;  ///< MSE per (alpha, estimator)
};

OpeRep ope_replication(const OpeStudyConfig& cfg, double alpha, Index rep);
OpeStudy run_ope_study(const OpeStudyConfig& cfg);

}  // namespace cpme
