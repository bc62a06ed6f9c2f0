#pragma once

#include "cpme/dataset.hpp"
#include "cpme/policy.hpp"
#include "cpme/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cpme {

enum class ScenarioKind {
  TestI,  ///< null: pi = pi'
  TestII,   ///< mean shift: pi' weight w + delta 1_d
  TestIII,  ///< mean-preserving 50/50 mixture w +/- shift 1_d
  TestIV,   ///< shifted mixture: 50/50 of w + delta 1_d and w
  HerdLogisticNonlinear,
  HerdLogisticQuadratic,
  HerdUniformNonlinear,
  HerdUniformQuadratic,
  OpeRecommend,
};

std::string to_string(ScenarioKind kind);
/// Accepts the names from to_string plus the short forms I, II, III, IV.
ScenarioKind parse_scenario_kind(const std::string& text);
bool is_test_scenario(ScenarioKind kind);
bool is_herding_scenario(ScenarioKind kind);

/// Every knob of a synthetic environment. Defaults reproduce the documented
/// settings; fields not used by a kind are ignored.
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::TestI;
  Index n = 400;
  Index d = 5;
  std::uint64_t seed = 0;

  // Outcome models: beta for sample i is beta_grid[i mod |grid|] * 1_d.
  std::vector<double> beta_grid{0.1, 0.2, 0.3, 0.4, 0.5};
  double gamma = 1.0;     ///< treatment effect in the linear test outcome
  double noise_sd = 1.0;  ///< outcome noise; 0 gives noiseless outcomes

  // Test scenarios.
  double delta = 2.0;          ///< shift of pi' in II and of one component in IV
  double mixture_shift = 1.0;  ///< opposing component shifts in III

  // Herding scenarios.
  double uniform_lo = -2.0;
  double uniform_hi = 2.0;
  double logistic_scale = 0.5513288954217920;  ///< sqrt(3)/pi: unit variance
  double target_weight_scale = 0.5;            ///< target pi weight = scale * w
  double target_sd = 0.5;

  // Recommendation scenario.
  double alpha = 1.0;  ///< logging similarity, in [-1, 1]
  Index items = 100;   ///< M
  Index users = 50;    ///< N
  int list_length = 4; ///< K

  void validate() const;
};

/// Generated environment: logged data plus the policies under study.
struct Scenario {
  ScenarioSpec spec;
  LoggedDataset data;
  Policy logging;
  Policy target;
  std::optional<Policy> alternative;  ///< pi' for test scenarios
  Matrix users;                       ///< recommendation only: N x d user features
};

/// Deterministic in spec (including seed): equal specs give identical data.
Scenario generate(const ScenarioSpec& spec);

/// i.i.d. outcomes from the true counterfactual law under `policy`, drawn
/// by direct simulation of the environment. Evaluation use only.
Vector oracle_outcomes(const Scenario& scenario, const Policy& policy, Index m, Rng& rng);

/// Ground-truth expected outcome of `policy` averaged over the covariates
/// of the logged rows (recommendation: expected click probability).
double oracle_policy_value(const Scenario& scenario, const Policy& policy, Index draws_per_row, Rng& rng);

/// Noiseless outcome f(x, a) of sample index i (the beta cycling index).
double outcome_mean(const ScenarioSpec& spec, Index i, const Eigen::Ref<const Vector>& x, const Action& a,
                    const ItemCatalog* catalog = nullptr);

}  // namespace cpme
