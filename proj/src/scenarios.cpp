#include "cpme/scenarios.hpp"

#include <cmath>
#include <map>

namespace cpme {
namespace {

const std::map<ScenarioKind, std::string>& kind_names() {
  static const std::map<ScenarioKind, std::string> names = {
      {ScenarioKind::TestI, "test-i"},
      {ScenarioKind::TestII, "test-ii"},
      {ScenarioKind::TestIII, "test-iii"},
      {ScenarioKind::TestIV, "test-iv"},
      {ScenarioKind::HerdLogisticNonlinear, "logistic-nonlinear"},
      {ScenarioKind::HerdLogisticQuadratic, "logistic-quadratic"},
      {ScenarioKind::HerdUniformNonlinear, "uniform-nonlinear"},
      {ScenarioKind::HerdUniformQuadratic, "uniform-quadratic"},
      {ScenarioKind::OpeRecommend, "ope-recommend"},
  };
  return names;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Vector draw_normal_vector(Index d, Rng& rng) {
  Vector x(d);
  for (Index k = 0; k < d; ++k) x[k] = rng.normal();
  return x;
}

Vector list_mean_features(const ItemCatalog& catalog, const ItemList& list) {
  Vector mean = Vector::Zero(catalog.dim());
  for (int item : list) mean += catalog.features.row(item).transpose();
  return mean / static_cast<double>(list.size());
}

}  // namespace

std::string to_string(ScenarioKind kind) { return kind_names().at(kind); }

ScenarioKind parse_scenario_kind(const std::string& text) {
  static const std::map<std::string, ScenarioKind> shorthand = {
      {"I", ScenarioKind::TestI},     {"II", ScenarioKind::TestII},   {"III", ScenarioKind::TestIII},
      {"IV", ScenarioKind::TestIV},   {"1", ScenarioKind::TestI},     {"2", ScenarioKind::TestII},
      {"3", ScenarioKind::TestIII},   {"4", ScenarioKind::TestIV},    {"ope", ScenarioKind::OpeRecommend},
  };
  if (auto it = shorthand.find(text); it != shorthand.end()) return it->second;
  for (const auto& [kind, name] : kind_names())
    if (name == text) return kind;
  throw ConfigError("unknown scenario '" + text + "'");
}

bool is_test_scenario(ScenarioKind kind) {
  return kind == ScenarioKind::TestI || kind == ScenarioKind::TestII || kind == ScenarioKind::TestIII ||
         kind == ScenarioKind::TestIV;
}

bool is_herding_scenario(ScenarioKind kind) {
  return kind == ScenarioKind::HerdLogisticNonlinear || kind == ScenarioKind::HerdLogisticQuadratic ||
         kind == ScenarioKind::HerdUniformNonlinear || kind == ScenarioKind::HerdUniformQuadratic;
}

void ScenarioSpec::validate() const {
  require(n > 0, "scenario: n must be > 0");
  require(d > 0, "scenario: d must be > 0");
  require(!beta_grid.empty(), "scenario: empty beta grid");
  require(noise_sd >= 0.0, "scenario: noise_sd must be >= 0");
  require(alpha >= -1.0 && alpha <= 1.0, "scenario: alpha must lie in [-1, 1]");
  require(uniform_lo < uniform_hi, "scenario: uniform_lo must be < uniform_hi");
  require(logistic_scale > 0.0 && target_sd > 0.0, "scenario: scales must be > 0");
  if (kind == ScenarioKind::OpeRecommend) {
    require(items >= 1 && users >= 1, "scenario: items and users must be >= 1");
    require(list_length >= 1 && list_length <= items, "scenario: list length must be in [1, items]");
  }
}

double outcome_mean(const ScenarioSpec& spec, Index i, const Eigen::Ref<const Vector>& x, const Action& a,
                    const ItemCatalog* catalog) {
  const double beta = spec.beta_grid[static_cast<std::size_t>(i) % spec.beta_grid.size()];
  const double xb = beta * x.sum();
  switch (spec.kind) {
    case ScenarioKind::TestI:
    case ScenarioKind::TestII:
    case ScenarioKind::TestIII:
    case ScenarioKind::TestIV:
      return xb + spec.gamma * std::get<double>(a);
    case ScenarioKind::HerdLogisticNonlinear:
    case ScenarioKind::HerdUniformNonlinear: {
      const double t = std::get<double>(a);
      return std::sin(xb) + t * t;
    }
    case ScenarioKind::HerdLogisticQuadratic:
    case ScenarioKind::HerdUniformQuadratic: {
      const double t = std::get<double>(a);
      return xb * xb + t * t;
    }
    case ScenarioKind::OpeRecommend:
      require(catalog != nullptr, "outcome_mean: recommendation outcome needs the item catalog");
      return list_mean_features(*catalog, std::get<ItemList>(a)).dot(x);
  }
  throw ConfigError("unknown scenario kind");
}

namespace {

// Outcome draw for row/sample index i given (x, a).
double draw_outcome(const ScenarioSpec& spec, Index i, const Eigen::Ref<const Vector>& x, const Action& a,
                    const ItemCatalog* catalog, Rng& rng) {
  if (spec.kind == ScenarioKind::OpeRecommend) {
    const double logit = outcome_mean(spec, i, x, a, catalog);
    const double theta = sigmoid(logit - rng.normal());
    return rng.bernoulli(theta) ? 1.0 : 0.0;
  }
  return outcome_mean(spec, i, x, a, catalog) + spec.noise_sd * rng.normal();
}

}  // namespace

Scenario generate(const ScenarioSpec& spec) {
  spec.validate();
  const std::uint64_t tag[] = {static_cast<std::uint64_t>(spec.kind)};
  const Rng base(spec.seed, stream_tag(tag));
  Rng env = base.split(1);
  Rng rows = base.split(2);

  Scenario sc;
  sc.spec = spec;
  const Index d = spec.d;
  const Vector w = Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  const Vector ones = Vector::Ones(d);

  switch (spec.kind) {
    case ScenarioKind::TestI:
      sc.logging = GaussianLinear{w, 1.0};
      sc.target = sc.logging;
      sc.alternative = sc.logging;
      break;
    case ScenarioKind::TestII:
      sc.logging = GaussianLinear{w, 1.0};
      sc.target = sc.logging;
      sc.alternative = GaussianLinear{w + spec.delta * ones, 1.0};
      break;
    case ScenarioKind::TestIII:
      sc.logging = GaussianLinear{w, 1.0};
      sc.target = sc.logging;
      sc.alternative = GaussianMixture{{{0.5, w + spec.mixture_shift * ones, 1.0},
                                        {0.5, w - spec.mixture_shift * ones, 1.0}}};
      break;
    case ScenarioKind::TestIV:
      sc.logging = GaussianLinear{w, 1.0};
      sc.target = sc.logging;
      sc.alternative = GaussianMixture{{{0.5, w + spec.delta * ones, 1.0}, {0.5, w, 1.0}}};
      break;
    case ScenarioKind::HerdLogisticNonlinear:
    case ScenarioKind::HerdLogisticQuadratic:
      sc.logging = LogisticLinear{w, spec.logistic_scale};
      sc.target = GaussianLinear{spec.target_weight_scale * w, spec.target_sd};
      break;
    case ScenarioKind::HerdUniformNonlinear:
    case ScenarioKind::HerdUniformQuadratic:
      sc.logging = UniformAction{spec.uniform_lo, spec.uniform_hi};
      sc.target = GaussianLinear{spec.target_weight_scale * w, spec.target_sd};
      break;
    case ScenarioKind::OpeRecommend: {
      auto catalog = std::make_shared<ItemCatalog>();
      catalog->features.resize(spec.items, d);
      for (Index l = 0; l < spec.items; ++l) catalog->features.row(l) = draw_normal_vector(d, env).transpose();
      catalog->list_length = spec.list_length;
      sc.users.resize(spec.users, d);
      for (Index u = 0; u < spec.users; ++u) sc.users.row(u) = draw_normal_vector(d, env).transpose();
      Matrix masked(spec.users, d);
      for (Index u = 0; u < spec.users; ++u)
        for (Index k = 0; k < d; ++k) masked(u, k) = env.bernoulli(0.5) ? sc.users(u, k) : 0.0;
      std::shared_ptr<const ItemCatalog> shared = catalog;
      sc.target = MultinomialList(masked, sc.users, shared);
      sc.logging = MultinomialList(spec.alpha * masked, sc.users, shared);
      sc.data.space = ActionSpace(shared);
      break;
    }
  }
  validate_policy(sc.logging);
  validate_policy(sc.target);

  const ItemCatalog* catalog = sc.data.space.catalog();
  sc.data.X.resize(spec.n, d);
  sc.data.Y.resize(spec.n);
  sc.data.A.reserve(static_cast<std::size_t>(spec.n));
  for (Index i = 0; i < spec.n; ++i) {
    Vector x;
    if (spec.kind == ScenarioKind::OpeRecommend) {
      x = sc.users.row(static_cast<Index>(rows.below(static_cast<std::uint64_t>(spec.users)))).transpose();
    } else {
      x = draw_normal_vector(d, rows);
    }
    Action a = sample_action(sc.logging, x, rows);
    sc.data.Y[i] = draw_outcome(spec, i, x, a, catalog, rows);
    sc.data.X.row(i) = x.transpose();
    sc.data.A.push_back(std::move(a));
  }
  return sc;
}

Vector oracle_outcomes(const Scenario& scenario, const Policy& policy, Index m, Rng& rng) {
  const auto& spec = scenario.spec;
  const ItemCatalog* catalog = scenario.data.space.catalog();
  Vector out(m);
  for (Index t = 0; t < m; ++t) {
    Vector x;
    if (spec.kind == ScenarioKind::OpeRecommend) {
      x = scenario.users.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(spec.users)))).transpose();
    } else {
      x = draw_normal_vector(spec.d, rng);
    }
    const Action a = sample_action(policy, x, rng);
    out[t] = draw_outcome(spec, t, x, a, catalog, rng);
  }
  return out;
}

double oracle_policy_value(const Scenario& scenario, const Policy& policy, Index draws_per_row, Rng& rng) {
  require(draws_per_row >= 1, "oracle_policy_value: draws_per_row must be >= 1");
  const auto& spec = scenario.spec;
  const auto& data = scenario.data;
  const ItemCatalog* catalog = data.space.catalog();
  double total = 0.0;
  for (Index i = 0; i < data.size(); ++i) {
    const Vector x = data.X.row(i).transpose();
    double row = 0.0;
    for (Index s = 0; s < draws_per_row; ++s) {
      const Action a = sample_action(policy, x, rng);
      if (spec.kind == ScenarioKind::OpeRecommend) {
        row += sigmoid(outcome_mean(spec, i, x, a, catalog) - rng.normal());
      } else {
        row += outcome_mean(spec, i, x, a, catalog);
      }
    }
    total += row / static_cast<double>(draws_per_row);
  }
  return total / static_cast<double>(data.size());
}

}  // namespace cpme
