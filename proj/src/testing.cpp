#include "cpme/testing.hpp"

#include "cpme/stats.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <exception>
#include <numeric>
#include <ostream>

namespace cpme {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr std::uint64_t kDrKptStream = 0x64726b7074ULL;
constexpr std::uint64_t kKptStream = kPermutationStream;

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::DrKpt:
      return "dr-kpt";
    case Method::Kpt:
      return "kpt";
    case Method::PtLinear:
      return "pt-linear";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  if (text == "dr-kpt" || text == "drkpt") return Method::DrKpt;
  if (text == "kpt") return Method::Kpt;
  if (text == "pt-linear" || text == "ptlinear") return Method::PtLinear;
  throw ConfigError("unknown method '" + text + "' (expected dr-kpt, kpt, pt-linear)");
}

namespace {

CrossStatistic studentize(Vector f) {
  CrossStatistic s;
  s.f = std::move(f);
  const auto m = static_cast<double>(s.f.size());
  s.mean = s.f.mean();
  s.sd = std::sqrt((s.f.array() - s.mean).square().sum() / m);
  s.degenerate = !(s.sd > 0.0);
  s.t = s.degenerate ? 0.0 : std::sqrt(m) * s.mean / s.sd;
  return s;
}

}  // namespace

CrossStatistic cross_statistic(const Matrix& rows_hat, const Matrix& rows_tilde, const GramMatrix& cross_gram) {
  require(rows_hat.rows() >= 1, "cross_statistic: m must be >= 1");
  require(rows_tilde.rows() >= 1, "cross_statistic: second split is empty");
  require(rows_hat.cols() == cross_gram.rows() && rows_tilde.cols() == cross_gram.cols(),
          "cross_statistic: shapes do not conform");
  const Vector tilde_mean = rows_tilde.colwise().mean().transpose();
  return studentize(rows_hat * (cross_gram * tilde_mean));
}

CrossStatistic cross_statistic(const EifFactors& hat, const EifFactors& tilde, const GramMatrix& cross_gram) {
  require(hat.M.rows() >= 1, "cross_statistic: m must be >= 1");
  require(tilde.M.rows() >= 1, "cross_statistic: second split is empty");
  require(hat.M.rows() == cross_gram.rows() && tilde.M.rows() == cross_gram.cols(),
          "cross_statistic: shapes do not conform");
  return studentize(hat.apply(cross_gram * tilde.column_mean()));
}

TestResult dr_kpt(const LoggedDataset& data, const Policy& pi, const Policy& pi2, double alpha,
                  const DrKptConfig& cfg) {
  const auto t0 = Clock::now();
  require(data.size() >= 4, "dr_kpt: n >= 4 required");
  require(alpha > 0.0 && alpha < 1.0, "dr_kpt: alpha must lie in (0, 1)");
  require(data.space.continuous(), "dr_kpt: scalar actions required for the propensity model");
  const Rng base(cfg.seed, kDrKptStream);

  LoggedDataset rows = data;
  if (cfg.shuffle) {
    std::vector<Index> perm(static_cast<std::size_t>(data.size()));
    std::iota(perm.begin(), perm.end(), Index{0});
    Rng r = base.split(1);
    shuffle(perm.begin(), perm.end(), r);
    rows = data.subset(perm);
  }
  const KernelSpec kY = cfg.kY ? *cfg.kY : KernelSpec::gaussian(median_heuristic(rows.Y));
  EifOptions eopt;
  eopt.mc_draws = cfg.mc_draws;
  eopt.shared_draws = cfg.shared_policy_draws;
  eopt.weights = cfg.weights;

  TestResult res;
  res.method = Method::DrKpt;
  res.alpha = alpha;
  CrossStatistic cs;
  const Index n = rows.size();
  if (cfg.no_split) {
    const auto nu = fit_nuisances(rows, kY, cfg.nuisance, stream_tag(std::array<std::uint64_t, 2>{cfg.seed, 3}));
    Rng r = base.split(4);
    const auto eif = eif_difference_factors(nu.cme, *nu.propensity, rows, pi, pi2, r, eopt);
    cs = cross_statistic(eif, eif, gram(kY, Matrix(rows.Y)));
    res.diagnostics["m"] = static_cast<double>(n);
    res.diagnostics["n_tilde"] = static_cast<double>(n);
    res.diagnostics["lambda_hat"] = nu.cme.lambda();
  } else {
    const Index m = n / 2;
    const LoggedDataset d1 = rows.slice(0, m);
    const LoggedDataset d2 = rows.slice(m, n);
    const auto nu1 = fit_nuisances(d1, kY, cfg.nuisance, stream_tag(std::array<std::uint64_t, 2>{cfg.seed, 5}));
    const auto nu2 = fit_nuisances(d2, kY, cfg.nuisance, stream_tag(std::array<std::uint64_t, 2>{cfg.seed, 6}));
    Rng r1 = base.split(7);
    Rng r2 = base.split(8);
    // Each side's rows use only that side's nuisances.
    const auto hat = eif_difference_factors(nu1.cme, *nu1.propensity, d1, pi, pi2, r1, eopt);
    const auto tilde = eif_difference_factors(nu2.cme, *nu2.propensity, d2, pi, pi2, r2, eopt);
    cs = cross_statistic(hat, tilde, gram(kY, Matrix(hat.atoms), Matrix(tilde.atoms)));
    res.diagnostics["m"] = static_cast<double>(m);
    res.diagnostics["n_tilde"] = static_cast<double>(n - m);
    res.diagnostics["lambda_hat"] = nu1.cme.lambda();
    res.diagnostics["lambda_tilde"] = nu2.cme.lambda();
  }
  res.statistic = cs.t;
  res.degenerate = cs.degenerate;
  res.p_value = cs.degenerate ? 1.0 : 1.0 - normal_cdf(cs.t);
  res.reject = res.p_value <= alpha;
  res.diagnostics["f_bar"] = cs.mean;
  res.diagnostics["s_dagger"] = cs.sd;
  res.diagnostics["mc_draws"] = static_cast<double>(cfg.mc_draws);
  res.diagnostics["degenerate"] = cs.degenerate ? 1.0 : 0.0;
  res.diagnostics["runtime_s"] = seconds_since(t0);
  return res;
}

double weighted_mmd2(const Vector& d, const GramMatrix& K) {
  const Index n = d.size();
  require(n >= 2 && K.rows() == n && K.cols() == n, "weighted_mmd2: shape mismatch");
  const double quad = d.dot(K * d) - d.array().square().matrix().dot(K.diagonal());
  return quad / (static_cast<double>(n) * static_cast<double>(n - 1));
}

namespace {

Vector weight_difference(const LoggedDataset& data, const Policy& pi, const Policy& pi2, const KptConfig& cfg) {
  const PropensitySource prop = fit_propensity(data, cfg.propensity_floor);
  return importance_weights(data, pi, prop, cfg.weights).w - importance_weights(data, pi2, prop, cfg.weights).w;
}

TestResult finish_permutation(Method method, double observed, const std::vector<double>& perm_stats, double alpha,
                              Index n_perm, Clock::time_point t0) {
  // A permuted statistic equal to the observed one up to rounding counts as
  // exceeding it.
  const double tol = 1e-12 * std::max(1.0, std::abs(observed));
  const auto exceed = std::count_if(perm_stats.begin(), perm_stats.end(),
                                    [&](double s) { return s >= observed - tol; });
  TestResult res;
  res.method = method;
  res.alpha = alpha;
  res.statistic = observed;
  res.p_value = (1.0 + static_cast<double>(exceed)) / (1.0 + static_cast<double>(n_perm));
  res.reject = res.p_value <= alpha;
  res.diagnostics["n_perm"] = static_cast<double>(n_perm);
  res.diagnostics["exceed"] = static_cast<double>(exceed);
  res.diagnostics["runtime_s"] = seconds_since(t0);
  return res;
}

}  // namespace

std::vector<Index> permutation(Index n, const Rng& base, Index b) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng r = base.split(static_cast<std::uint64_t>(b));
  shuffle(perm.begin(), perm.end(), r);
  return perm;
}

std::vector<double> permutation_statistics(const Vector& d, const GramMatrix& K, Index n_perm, std::uint64_t seed) {
  const Index n = d.size();
  const Rng base(seed, kKptStream);
  std::vector<double> stats(static_cast<std::size_t>(n_perm));
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < n_perm; ++b) {
    const auto perm = permutation(n, base, b);
    Vector dp(n);
    for (Index i = 0; i < n; ++i) dp[i] = d[perm[static_cast<std::size_t>(i)]];
    stats[static_cast<std::size_t>(b)] = weighted_mmd2(dp, K);
  }
  return stats;
}

TestResult kpt_permutation(const LoggedDataset& data, const Policy& pi, const Policy& pi2, double alpha,
                           const KptConfig& cfg) {
  const auto t0 = Clock::now();
  require(data.size() >= 4, "kpt: n >= 4 required");
  require(cfg.n_perm >= 1, "kpt: n_perm must be >= 1");
  require(alpha > 0.0 && alpha < 1.0, "kpt: alpha must lie in (0, 1)");
  const Vector d = weight_difference(data, pi, pi2, cfg);
  const KernelSpec k = cfg.kernel ? *cfg.kernel : KernelSpec::gaussian(median_heuristic(data.Y));
  const GramMatrix K = gram(k, Matrix(data.Y));
  const double observed = weighted_mmd2(d, K);

  const auto stats = permutation_statistics(d, K, cfg.n_perm, cfg.seed);
  auto res = finish_permutation(Method::Kpt, observed, stats, alpha, cfg.n_perm, t0);
  res.diagnostics["lengthscale"] = k.family == KernelFamily::Gaussian ? k.lengthscale : 0.0;
  return res;
}

TestResult pt_linear(const LoggedDataset& data, const Policy& pi, const Policy& pi2, double alpha, KptConfig cfg) {
  const auto t0 = Clock::now();
  require(data.size() >= 4, "pt-linear: n >= 4 required");
  require(cfg.n_perm >= 1, "pt-linear: n_perm must be >= 1");
  require(alpha > 0.0 && alpha < 1.0, "pt-linear: alpha must lie in (0, 1)");
  const Index n = data.size();
  const Vector d = weight_difference(data, pi, pi2, cfg);
  const Vector& y = data.Y;
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
  auto stat = [&](const Vector& dv) {
    const double s = dv.dot(y);
    return (s * s - dv.array().square().matrix().dot(y.array().square().matrix())) * scale;
  };
  const double observed = stat(d);

  const Rng base(cfg.seed, kKptStream ^ 0x6c696eULL);
  std::vector<double> stats(static_cast<std::size_t>(cfg.n_perm));
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < cfg.n_perm; ++b) {
    const auto perm = permutation(n, base, b);
    Vector dp(n);
    for (Index i = 0; i < n; ++i) dp[i] = d[perm[static_cast<std::size_t>(i)]];
    stats[static_cast<std::size_t>(b)] = stat(dp);
  }
  return finish_permutation(Method::PtLinear, observed, stats, alpha, cfg.n_perm, t0);
}

std::vector<std::pair<double, double>> qq_points(std::vector<double> statistics) {
  require(statistics.size() >= 2, "qq_points: at least two statistics required");
  std::sort(statistics.begin(), statistics.end());
  const double n = static_cast<double>(statistics.size());
  std::vector<std::pair<double, double>> out;
  out.reserve(statistics.size());
  for (std::size_t i = 0; i < statistics.size(); ++i)
    out.emplace_back(normal_quantile((static_cast<double>(i) + 0.5) / n), statistics[i]);
  return out;
}

std::vector<double> StudyTable::statistics(Index n, Method method) const {
  std::vector<double> out;
  for (const auto& r : records)
    if (r.n == n && r.method == method) out.push_back(r.result.statistic);
  return out;
}

StudyTable run_study(const StudyConfig& cfg) {
  require(cfg.reps >= 1, "run_study: reps must be >= 1");
  require(!cfg.n_grid.empty() && !cfg.methods.empty(), "run_study: empty n grid or method list");
  require(cfg.jobs >= 0, "run_study: jobs must be >= 0");
  cfg.scenario.validate();

  struct Task {
    Index n, rep;
  };
  std::vector<Task> tasks;
  for (Index n : cfg.n_grid)
    for (Index r = 0; r < cfg.reps; ++r) tasks.push_back({n, r});
  const auto n_methods = cfg.methods.size();
  std::vector<RepRecord> records(tasks.size() * n_methods);
  std::exception_ptr failure;

  const int threads = cfg.jobs > 0 ? cfg.jobs : omp_get_max_threads();
  auto run_task = [&](std::size_t t) {
    const auto [n, rep] = tasks[t];
    const std::uint64_t parts[] = {cfg.seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)};
    ScenarioSpec spec = cfg.scenario;
    spec.n = n;
    spec.seed = stream_tag(parts);
    const Scenario sc = generate(spec);
    require(sc.alternative.has_value(), "run_study: scenario has no alternative policy");
    for (std::size_t k = 0; k < n_methods; ++k) {
      const Method method = cfg.methods[k];
      const std::uint64_t mparts[] = {spec.seed, static_cast<std::uint64_t>(method)};
      const std::uint64_t test_seed = stream_tag(mparts);
      const auto t0 = Clock::now();
      TestResult res;
      if (method == Method::DrKpt) {
        DrKptConfig c = cfg.dr_kpt;
        c.seed = test_seed;
        res = dr_kpt(sc.data, sc.target, *sc.alternative, cfg.alpha, c);
      } else {
        KptConfig c = cfg.kpt;
        c.seed = test_seed;
        res = method == Method::Kpt ? kpt_permutation(sc.data, sc.target, *sc.alternative, cfg.alpha, c)
                                    : pt_linear(sc.data, sc.target, *sc.alternative, cfg.alpha, c);
      }
      records[t * n_methods + k] = {n, method, rep, std::move(res), seconds_since(t0)};
    }
  };

  if (threads == 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
  } else {
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      try {
        run_task(t);
      } catch (...) {
#pragma omp critical(cpme_study_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  StudyTable table;
  table.records = std::move(records);
  for (Index n : cfg.n_grid) {
    for (Method method : cfg.methods) {
      Index rejects = 0, count = 0;
      double runtime = 0.0;
      for (const auto& r : table.records) {
        if (r.n != n || r.method != method) continue;
        rejects += r.result.reject ? 1 : 0;
        runtime += r.runtime_s;
        ++count;
      }
      const auto ci = wilson_interval(rejects, count);
      table.rows.push_back({to_string(cfg.scenario.kind), n, method,
                            static_cast<double>(rejects) / static_cast<double>(count), ci.low, ci.high, count,
                            runtime / static_cast<double>(count)});
    }
  }
  return table;
}

void write_study_csv(std::ostream& out, const StudyTable& table) {
  out << "scenario,n,method,rate,ci_low,ci_high,reps,runtime_s\n";
  for (const auto& r : table.rows)
    out << r.scenario << ',' << r.n << ',' << to_string(r.method) << ',' << format_double(r.rate) << ','
        << format_double(r.ci_low) << ',' << format_double(r.ci_high) << ',' << r.reps << ','
        << format_double(r.runtime_s) << '\n';
}

void write_null_stats_csv(std::ostream& out, const std::vector<double>& stats) {
  out << "rep,t_stat\n";
  for (std::size_t i = 0; i < stats.size(); ++i) out << i << ',' << format_double(stats[i]) << '\n';
}

void write_qq_csv(std::ostream& out, const std::vector<std::pair<double, double>>& points) {
  out << "theoretical,empirical\n";
  for (const auto& [q, e] : points) out << format_double(q) << ',' << format_double(e) << '\n';
}

}  // namespace cpme
