#include "cpme/studies.hpp"

#include "cpme/stats.hpp"

#include <omp.h>

#include <bit>
#include <exception>

namespace cpme {
namespace {

// Runs body(i) for i in [0, count) on `jobs` threads and rethrows the first
// failure. Each body writes only its own output slot.
template <typename Body>
void parallel_reps(Index count, int jobs, Body body) {
  require(jobs >= 0, "jobs must be >= 0");
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (Index i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(cpme_rep_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

MetricRow summarize(const std::string& scenario, const std::string& method, const std::string& metric,
                    const std::vector<double>& values) {
  const auto ci = mean_interval(values);
  return {scenario, method, metric, mean(values), ci.low, ci.high};
}

}  // namespace

HerdRep herd_replication(const HerdStudyConfig& cfg, Index rep, std::vector<double>* plugin_samples,
                         std::vector<double>* dr_samples) {
  require(is_herding_scenario(cfg.scenario.kind), "herd: a herding scenario is required");
  const std::uint64_t parts[] = {cfg.seed, static_cast<std::uint64_t>(rep)};
  ScenarioSpec spec = cfg.scenario;
  spec.seed = stream_tag(parts);
  const Scenario sc = generate(spec);
  const LoggedDataset& data = sc.data;

  const KernelSpec kY = KernelSpec::gaussian(median_heuristic(data.Y));
  const auto nu = fit_nuisances(data, kY, cfg.nuisance, spec.seed ^ 0x6376ULL);
  const Rng base(spec.seed, 0x68657264ULL);
  Rng r_plugin = base.split(1), r_dr = base.split(2), r_oracle = base.split(3);

  const auto plugin =
      plugin_embedding(nu.cme, policy_weight_vector_resample(nu.cme, sc.target, r_plugin, cfg.mc_draws));
  const auto dr = dr_embedding(nu.cme, *nu.propensity, data, sc.target, cfg.mc_draws, r_dr);

  HerdConfig hc;
  hc.m = cfg.m;
  hc.grid = default_herd_grid(data.Y, cfg.grid_points);
  hc.classic_normalization = cfg.classic_normalization;
  const auto s_plugin = herd(plugin, hc);
  const auto s_dr = herd(dr, hc);

  const Index oracle_n = cfg.oracle_size > 0 ? cfg.oracle_size : spec.n;
  const Vector oracle = oracle_outcomes(sc, sc.target, oracle_n, r_oracle);
  const auto as_vec = [](const std::vector<double>& v) {
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
  };
  HerdRep out;
  out.w1_plugin = wasserstein1d(as_vec(s_plugin), oracle);
  out.w1_dr = wasserstein1d(as_vec(s_dr), oracle);
  out.mmd2_plugin = mmd2_unbiased(as_vec(s_plugin), oracle, kY);
  out.mmd2_dr = mmd2_unbiased(as_vec(s_dr), oracle, kY);
  out.lambda = nu.cme.lambda();
  if (plugin_samples) *plugin_samples = s_plugin;
  if (dr_samples) *dr_samples = s_dr;
  return out;
}

HerdStudy run_herd_study(const HerdStudyConfig& cfg) {
  require(cfg.reps >= 1, "herd study: reps must be >= 1");
  cfg.scenario.validate();
  HerdStudy study;
  study.reps.resize(static_cast<std::size_t>(cfg.reps));
  parallel_reps(cfg.reps, cfg.jobs, [&](Index r) { study.reps[static_cast<std::size_t>(r)] = herd_replication(cfg, r); });

  std::vector<double> w1p, w1d, mp, md;
  for (const auto& r : study.reps) {
    w1p.push_back(r.w1_plugin);
    w1d.push_back(r.w1_dr);
    mp.push_back(r.mmd2_plugin);
    md.push_back(r.mmd2_dr);
  }
  const std::string name = to_string(cfg.scenario.kind);
  study.rows = {summarize(name, "plugin", "wasserstein1", w1p), summarize(name, "dr", "wasserstein1", w1d),
                summarize(name, "plugin", "mmd2_unbiased", mp), summarize(name, "dr", "mmd2_unbiased", md)};
  return study;
}

OpeStudyConfig::OpeStudyConfig() {
  scenario.kind = ScenarioKind::OpeRecommend;
  scenario.n = 2000;
  scenario.d = 10;
  scenario.list_length = 4;
  nuisance.lambda_grid = log10_grid(-8, -3);
  nuisance.cv_folds = 5;
}

OpeRep ope_replication(const OpeStudyConfig& cfg, double alpha, Index rep) {
  const std::uint64_t parts[] = {cfg.seed, std::bit_cast<std::uint64_t>(alpha), static_cast<std::uint64_t>(rep)};
  ScenarioSpec spec = cfg.scenario;
  spec.kind = ScenarioKind::OpeRecommend;
  spec.alpha = alpha;
  spec.seed = stream_tag(parts);
  const Scenario sc = generate(spec);
  const LoggedDataset& data = sc.data;

  const auto nu = fit_nuisances(data, KernelSpec::linear(), cfg.nuisance, spec.seed ^ 0x6376ULL);
  const PropensitySource prop = KnownPropensity{sc.logging, cfg.propensity_floor};
  const Rng base(spec.seed, 0x6f7065ULL);
  Rng r_plugin = base.split(1), r_dr = base.split(2), r_truth = base.split(3);

  OpeRep out;
  out.alpha = alpha;
  out.rep = rep;
  out.lambda = nu.cme.lambda();
  out.cpme = plugin_embedding(nu.cme, policy_weight_vector_resample(nu.cme, sc.target, r_plugin, cfg.mc_draws))
                 .linear_reading();
  out.dr_cpme = dr_embedding(nu.cme, prop, data, sc.target, cfg.mc_draws, r_dr).linear_reading();
  out.wips = ope_wips(data, sc.target, prop);
  out.truth = oracle_policy_value(sc, sc.target, cfg.oracle_draws, r_truth);
  return out;
}

OpeStudy run_ope_study(const OpeStudyConfig& cfg) {
  require(cfg.reps >= 1, "ope study: reps must be >= 1");
  require(!cfg.alphas.empty(), "ope study: no alpha settings");
  OpeStudy study;
  const auto n_alpha = static_cast<Index>(cfg.alphas.size());
  study.reps.resize(static_cast<std::size_t>(n_alpha * cfg.reps));
  parallel_reps(n_alpha * cfg.reps, cfg.jobs, [&](Index t) {
    study.reps[static_cast<std::size_t>(t)] = ope_replication(cfg, cfg.alphas[static_cast<std::size_t>(t / cfg.reps)], t % cfg.reps);
  });

  for (double alpha : cfg.alphas) {
    std::vector<double> e_cpme, e_dr, e_wips;
    for (const auto& r : study.reps) {
      if (r.alpha != alpha) continue;
      e_cpme.push_back((r.cpme - r.truth) * (r.cpme - r.truth));
      e_dr.push_back((r.dr_cpme - r.truth) * (r.dr_cpme - r.truth));
      e_wips.push_back((r.wips - r.truth) * (r.wips - r.truth));
    }
    const std::string name = "ope-recommend(alpha=" + format_double(alpha) + ")";
    study.rows.push_back(summarize(name, "cpme", "mse", e_cpme));
    study.rows.push_back(summarize(name, "dr-cpme", "mse", e_dr));
    study.rows.push_back(summarize(name, "wips", "mse", e_wips));
  }
  return study;
}

}  // namespace cpme
