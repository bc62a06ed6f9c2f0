#include "commands.hpp"

#include <cpme/dataset.hpp>
#include <cpme/stats.hpp>
#include <cpme/studies.hpp>
#include <cpme/testing.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace cpme::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const json kSchemas = {
    {"dataset", "1: x_0..x_{d-1},a,y | x_0..x_{d-1},a_0..a_{K-1},y"},
    {"study", "1: scenario,n,method,rate,ci_low,ci_high,reps,runtime_s"},
    {"null_stats", "1: rep,t_stat"},
    {"qq", "1: theoretical,empirical"},
    {"samples", "1: t,y_tilde"},
    {"metrics", "1: scenario,method,metric,value,ci_low,ci_high"},
    {"herd_reps", "1: rep,w1_plugin,w1_dr,mmd2_plugin,mmd2_dr,lambda"},
    {"ope_reps", "1: alpha,rep,truth,cpme,dr_cpme,wips,lambda"},
};

std::string default_out() {
  const char* env = std::getenv("CPME_OUT");
  return env && *env ? std::string(env) : std::string("cpme_out");
}

fs::path prepare_out(const RunConfig& cfg) {
  const fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("output directory '" + cfg.out + "' is not writable");
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return f;
}

json scenario_json(const ScenarioSpec& s) {
  return {{"kind", to_string(s.kind)},   {"n", s.n},
          {"d", s.d},                    {"seed", s.seed},
          {"beta_grid", s.beta_grid},    {"gamma", s.gamma},
          {"noise_sd", s.noise_sd},      {"delta", s.delta},
          {"mixture_shift", s.mixture_shift}, {"uniform_lo", s.uniform_lo},
          {"uniform_hi", s.uniform_hi},  {"logistic_scale", s.logistic_scale},
          {"target_weight_scale", s.target_weight_scale}, {"target_sd", s.target_sd},
          {"alpha", s.alpha},            {"items", s.items},
          {"users", s.users},            {"list_length", s.list_length}};
}

void write_manifest(const fs::path& dir, const RunConfig& cfg, const std::vector<std::string>& outputs) {
  json m;
  m["tool"] = "cpme";
  m["version"] = kVersion;
  m["command"] = cfg.command;
  m["config"] = to_json(cfg);
  m["scenario"] = scenario_json(scenario_spec(cfg));
  m["schemas"] = kSchemas;
  m["outputs"] = outputs;
  auto f = open_out(dir / "manifest.json");
  f << m.dump(2) << '\n';
}

NuisanceConfig nuisance_config(const RunConfig& cfg) {
  NuisanceConfig nc;
  nc.lambda_grid = cfg.lambda_grid;
  nc.cv_folds = cfg.folds;
  nc.lambda = cfg.lambda;
  return nc;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(parse_method(n));
  return out;
}

json result_json(const TestResult& r) {
  json j = {{"method", to_string(r.method)}, {"statistic", r.statistic}, {"p_value", r.p_value},
            {"alpha", r.alpha},              {"reject", r.reject},       {"degenerate", r.degenerate}};
  j["diagnostics"] = json(r.diagnostics);
  return j;
}

StudyConfig study_config(const RunConfig& cfg) {
  StudyConfig sc;
  sc.scenario = scenario_spec(cfg);
  sc.n_grid = cfg.n_grid;
  sc.reps = cfg.reps;
  sc.methods = parse_methods(cfg.methods);
  sc.alpha = cfg.alpha;
  sc.seed = *cfg.seed;
  sc.dr_kpt.nuisance = nuisance_config(cfg);
  sc.dr_kpt.mc_draws = cfg.mc_draws;
  sc.dr_kpt.no_split = cfg.no_split;
  sc.dr_kpt.shuffle = cfg.shuffle;
  sc.dr_kpt.shared_policy_draws = cfg.shared_draws;
  sc.kpt.n_perm = cfg.n_perm;
  sc.jobs = cfg.jobs;
  return sc;
}

void cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = prepare_out(cfg);
  const Scenario sc = generate(scenario_spec(cfg));
  {
    auto f = open_out(dir / "dataset.csv");
    write_dataset_csv(f, sc.data);
  }
  write_manifest(dir, cfg, {"dataset.csv"});
  log << "wrote " << sc.data.size() << " rows to " << (dir / "dataset.csv").string() << '\n';
}

void cmd_test(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = prepare_out(cfg);
  Scenario sc = generate(scenario_spec(cfg));
  if (!cfg.data.empty()) sc.data = read_dataset_csv(cfg.data, sc.data.space.catalog_ptr());
  require(sc.alternative.has_value(), "test: scenario '" + cfg.scenario + "' defines no alternative policy");
  json records = json::array();
  const std::uint64_t seed = *cfg.seed;
  for (Method m : parse_methods(cfg.methods)) {
    TestResult r;
    if (m == Method::DrKpt) {
      DrKptConfig c;
      c.nuisance = nuisance_config(cfg);
      c.mc_draws = cfg.mc_draws;
      c.no_split = cfg.no_split;
      c.shuffle = cfg.shuffle;
      c.shared_policy_draws = cfg.shared_draws;
      c.seed = seed;
      r = dr_kpt(sc.data, sc.target, *sc.alternative, cfg.alpha, c);
    } else {
      KptConfig c;
      c.n_perm = cfg.n_perm;
      c.seed = seed;
      r = m == Method::Kpt ? kpt_permutation(sc.data, sc.target, *sc.alternative, cfg.alpha, c)
                           : pt_linear(sc.data, sc.target, *sc.alternative, cfg.alpha, c);
    }
    records.push_back(result_json(r));
  }
  {
    auto f = open_out(dir / "test_result.json");
    f << records.dump(2) << '\n';
  }
  write_manifest(dir, cfg, {"test_result.json"});
  log << records.dump(2) << '\n';
}

void cmd_study(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = prepare_out(cfg);
  const StudyTable table = run_study(study_config(cfg));
  std::vector<std::string> outputs{"study.csv"};
  {
    auto f = open_out(dir / "study.csv");
    write_study_csv(f, table);
  }
  if (cfg.command == "calibrate") {
    for (Index n : cfg.n_grid) {
      for (Method m : parse_methods(cfg.methods)) {
        const auto stats = table.statistics(n, m);
        const std::string tag = to_string(m) + "_n" + std::to_string(n);
        auto f = open_out(dir / ("null_stats_" + tag + ".csv"));
        write_null_stats_csv(f, stats);
        outputs.push_back("null_stats_" + tag + ".csv");
        if (m == Method::DrKpt && stats.size() >= 2) {
          auto q = open_out(dir / ("qq_" + tag + ".csv"));
          write_qq_csv(q, qq_points(stats));
          outputs.push_back("qq_" + tag + ".csv");
          const auto ks = ks_test_normal(stats);
          log << "dr-kpt n=" << n << ": KS distance to N(0,1) " << ks.distance << ", p " << ks.p_value << '\n';
        }
      }
    }
  }
  write_manifest(dir, cfg, outputs);
  write_study_csv(log, table);
}

void cmd_herd(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = prepare_out(cfg);
  HerdStudyConfig hc;
  hc.scenario = scenario_spec(cfg);
  hc.m = cfg.herd_m;
  hc.oracle_size = cfg.oracle_size;
  hc.grid_points = cfg.grid_points;
  hc.mc_draws = cfg.mc_draws;
  hc.reps = cfg.reps;
  hc.classic_normalization = cfg.classic_herding;
  hc.nuisance = nuisance_config(cfg);
  hc.seed = *cfg.seed;
  hc.jobs = cfg.jobs;
  const HerdStudy study = run_herd_study(hc);

  std::vector<double> s_plugin, s_dr;
  herd_replication(hc, 0, &s_plugin, &s_dr);
  {
    auto f = open_out(dir / "samples_plugin.csv");
    write_samples_csv(f, s_plugin);
    auto g = open_out(dir / "samples_dr.csv");
    write_samples_csv(g, s_dr);
    auto h = open_out(dir / "distances.csv");
    write_metric_csv(h, study.rows);
    auto r = open_out(dir / "herd_reps.csv");
    r << "rep,w1_plugin,w1_dr,mmd2_plugin,mmd2_dr,lambda\n";
    for (std::size_t i = 0; i < study.reps.size(); ++i) {
      const auto& x = study.reps[i];
      r << i << ',' << format_double(x.w1_plugin) << ',' << format_double(x.w1_dr) << ','
        << format_double(x.mmd2_plugin) << ',' << format_double(x.mmd2_dr) << ',' << format_double(x.lambda) << '\n';
    }
  }
  write_manifest(dir, cfg, {"samples_plugin.csv", "samples_dr.csv", "distances.csv", "herd_reps.csv"});
  write_metric_csv(log, study.rows);
}

void cmd_ope(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = prepare_out(cfg);
  OpeStudyConfig oc;
  oc.scenario = scenario_spec(cfg);
  oc.alphas = cfg.similarities;
  oc.reps = cfg.reps;
  oc.mc_draws = cfg.mc_draws;
  oc.nuisance = nuisance_config(cfg);
  oc.seed = *cfg.seed;
  oc.jobs = cfg.jobs;
  const OpeStudy study = run_ope_study(oc);
  {
    auto f = open_out(dir / "ope.csv");
    write_metric_csv(f, study.rows);
    auto r = open_out(dir / "ope_reps.csv");
    r << "alpha,rep,truth,cpme,dr_cpme,wips,lambda\n";
    for (const auto& x : study.reps)
      r << format_double(x.alpha) << ',' << x.rep << ',' << format_double(x.truth) << ',' << format_double(x.cpme)
        << ',' << format_double(x.dr_cpme) << ',' << format_double(x.wips) << ',' << format_double(x.lambda) << '\n';
  }
  write_manifest(dir, cfg, {"ope.csv", "ope_reps.csv"});
  write_metric_csv(log, study.rows);
}

}  // namespace

void apply_command_defaults(RunConfig& cfg) {
  const std::string& c = cfg.command;
  if (cfg.scenario.empty()) {
    if (c == "simulate" || c == "calibrate") cfg.scenario = "test-i";
    else if (c == "test" || c == "power") cfg.scenario = "test-ii";
    else if (c == "herd") cfg.scenario = "logistic-nonlinear";
    else if (c == "ope") cfg.scenario = "ope-recommend";
  }
  if (cfg.n < 0) cfg.n = c == "herd" ? 1000 : c == "ope" ? 2000 : 400;
  if (cfg.n_grid.empty()) {
    if (c == "power") cfg.n_grid = {100, 200, 400};
    else cfg.n_grid = {cfg.n};
  }
  if (cfg.reps < 0) cfg.reps = c == "ope" ? 30 : 100;
  if (cfg.lambda_grid.empty()) cfg.lambda_grid = c == "ope" ? log10_grid(-8, -3) : log10_grid(-4, 0);
  if (cfg.folds < 0) cfg.folds = c == "ope" ? 5 : 3;
  if (cfg.methods.empty()) {
    if (c == "power") cfg.methods = {"dr-kpt", "kpt", "pt-linear"};
    else cfg.methods = {"dr-kpt"};
  }
  if (cfg.d < 0) cfg.d = c == "ope" ? 10 : 5;
  if (cfg.similarities.empty()) cfg.similarities = {-1.0, 0.0, 1.0};
  if (cfg.out.empty()) cfg.out = default_out();
}

void validate(const RunConfig& cfg) {
  static const std::vector<std::string> commands{"simulate", "test", "calibrate", "power", "herd", "ope"};
  require(std::find(commands.begin(), commands.end(), cfg.command) != commands.end(),
          "unknown command '" + cfg.command + "'");
  require(cfg.seed.has_value(), "explicit seed required");
  require(cfg.n > 0, "--n must be > 0");
  for (Index n : cfg.n_grid) require(n > 0, "--n-grid entries must be > 0");
  require(cfg.reps >= 1, "--reps must be >= 1");
  require(cfg.alpha > 0.0 && cfg.alpha < 1.0, "--alpha must lie in (0, 1)");
  if (cfg.lambda) require(*cfg.lambda > 0.0, "--lambda must be > 0");
  for (double l : cfg.lambda_grid) require(l > 0.0, "--lambda-grid entries must be > 0");
  require(cfg.folds >= 2, "--folds must be >= 2");
  require(cfg.mc_draws >= 1, "--mc-draws must be >= 1");
  require(cfg.n_perm >= 1, "--n-perm must be >= 1");
  require(cfg.jobs >= 0, "--jobs must be >= 0");
  for (const auto& m : cfg.methods) parse_method(m);
  require(cfg.herd_m >= 1, "--herd-m must be >= 1");
  require(cfg.grid_points >= 2, "--grid-points must be >= 2");
  require(cfg.oracle_size >= 0, "--oracle-size must be >= 0");
  const ScenarioKind kind = parse_scenario_kind(cfg.scenario);
  if (cfg.command == "test" || cfg.command == "calibrate" || cfg.command == "power")
    require(is_test_scenario(kind), "command '" + cfg.command + "' needs a test scenario (I-IV)");
  if (cfg.command == "herd") require(is_herding_scenario(kind), "herd needs a herding scenario");
  if (cfg.command == "ope") require(kind == ScenarioKind::OpeRecommend, "ope needs the ope-recommend scenario");
  for (double a : cfg.similarities) require(a >= -1.0 && a <= 1.0, "--similarity values must lie in [-1, 1]");
  scenario_spec(cfg).validate();
}

ScenarioSpec scenario_spec(const RunConfig& cfg) {
  ScenarioSpec s;
  s.kind = parse_scenario_kind(cfg.scenario);
  s.n = cfg.n;
  s.d = cfg.d;
  s.seed = cfg.seed.value_or(0);
  s.noise_sd = cfg.noise_sd;
  s.delta = cfg.delta;
  s.alpha = cfg.similarity;
  s.items = cfg.items;
  s.users = cfg.users;
  s.list_length = cfg.list_length;
  return s;
}

json to_json(const RunConfig& c) {
  json j = {{"command", c.command},
            {"scenario", c.scenario},
            {"n", c.n},
            {"n_grid", c.n_grid},
            {"reps", c.reps},
            {"alpha", c.alpha},
            {"seed", c.seed ? json(*c.seed) : json(nullptr)},
            {"lambda", c.lambda ? json(*c.lambda) : json(nullptr)},
            {"lambda_grid", c.lambda_grid},
            {"folds", c.folds},
            {"mc_draws", c.mc_draws},
            {"n_perm", c.n_perm},
            {"methods", c.methods},
            {"no_split", c.no_split},
            {"shuffle", c.shuffle},
            {"shared_draws", c.shared_draws},
            {"jobs", c.jobs},
            {"out", c.out},
            {"data", c.data},
            {"herd_m", c.herd_m},
            {"grid_points", c.grid_points},
            {"oracle_size", c.oracle_size},
            {"classic_herding", c.classic_herding},
            {"d", c.d},
            {"similarity", c.similarity},
            {"similarities", c.similarities},
            {"items", c.items},
            {"users", c.users},
            {"list_length", c.list_length},
            {"noise_sd", c.noise_sd},
            {"delta", c.delta}};
  return j;
}

RunConfig from_json(const json& j) {
  RunConfig c;
  try {
    c.command = j.at("command").get<std::string>();
    c.scenario = j.at("scenario").get<std::string>();
    c.n = j.at("n").get<Index>();
    c.n_grid = j.at("n_grid").get<std::vector<Index>>();
    c.reps = j.at("reps").get<Index>();
    c.alpha = j.at("alpha").get<double>();
    if (!j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("lambda").is_null()) c.lambda = j.at("lambda").get<double>();
    c.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
    c.folds = j.at("folds").get<int>();
    c.mc_draws = j.at("mc_draws").get<Index>();
    c.n_perm = j.at("n_perm").get<Index>();
    c.methods = j.at("methods").get<std::vector<std::string>>();
    c.no_split = j.at("no_split").get<bool>();
    c.shuffle = j.at("shuffle").get<bool>();
    c.shared_draws = j.at("shared_draws").get<bool>();
    c.jobs = j.at("jobs").get<int>();
    c.out = j.at("out").get<std::string>();
    c.data = j.at("data").get<std::string>();
    c.herd_m = j.at("herd_m").get<Index>();
    c.grid_points = j.at("grid_points").get<Index>();
    c.oracle_size = j.at("oracle_size").get<Index>();
    c.classic_herding = j.at("classic_herding").get<bool>();
    c.d = j.at("d").get<Index>();
    c.similarity = j.at("similarity").get<double>();
    c.similarities = j.at("similarities").get<std::vector<double>>();
    c.items = j.at("items").get<Index>();
    c.users = j.at("users").get<Index>();
    c.list_length = j.at("list_length").get<int>();
    c.noise_sd = j.at("noise_sd").get<double>();
    c.delta = j.at("delta").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed manifest config: ") + e.what());
  }
  return c;
}

void run_command(const RunConfig& cfg, std::ostream& log) {
  validate(cfg);
  if (cfg.command == "simulate") cmd_simulate(cfg, log);
  else if (cfg.command == "test") cmd_test(cfg, log);
  else if (cfg.command == "calibrate" || cfg.command == "power") cmd_study(cfg, log);
  else if (cfg.command == "herd") cmd_herd(cfg, log);
  else if (cfg.command == "ope") cmd_ope(cfg, log);
}

namespace {

void add_common(CLI::App* sub, RunConfig& cfg, std::uint64_t& seed_value) {
  sub->add_option("--scenario", cfg.scenario, "scenario name (test-i..test-iv or I..IV, herding kinds, ope-recommend)");
  sub->add_option("--n", cfg.n, "logged sample size");
  sub->add_option("--seed", seed_value, "64-bit seed (required)");
  sub->add_option("--out", cfg.out, "output directory (default $CPME_OUT or ./cpme_out)");
  sub->add_option("--jobs", cfg.jobs, "replication threads (0 = OpenMP default)");
  sub->add_option("--d", cfg.d, "covariate dimension");
  sub->add_option("--noise-sd", cfg.noise_sd, "outcome noise standard deviation");
  sub->add_option("--delta", cfg.delta, "policy shift in scenarios II and IV");
  sub->add_option("--similarity", cfg.similarity, "recommendation logging similarity in [-1, 1]");
  sub->add_option("--items", cfg.items, "recommendation catalog size M");
  sub->add_option("--users", cfg.users, "recommendation user count N");
  sub->add_option("--list-length", cfg.list_length, "recommendation list length K");
}

void add_estimation(CLI::App* sub, RunConfig& cfg, double& lambda_value) {
  sub->add_option("--alpha", cfg.alpha, "test level");
  sub->add_option("--reps", cfg.reps, "replications");
  sub->add_option("--lambda", lambda_value, "fixed ridge parameter (skips cross-validation)");
  sub->add_option("--lambda-grid", cfg.lambda_grid, "cross-validation grid")->delimiter(',');
  sub->add_option("--folds", cfg.folds, "cross-validation folds");
  sub->add_option("--mc-draws", cfg.mc_draws, "policy draws per row for policy integrals");
}

void add_testing(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--method", cfg.methods, "dr-kpt, kpt, pt-linear (repeatable or comma separated)")->delimiter(',');
  sub->add_option("--n-perm", cfg.n_perm, "permutations for kpt and pt-linear");
  sub->add_flag("--no-split", cfg.no_split, "DR-KPT without sample splitting (miscalibrated)");
  sub->add_flag("--shuffle", cfg.shuffle, "shuffle rows before the DR-KPT split");
  sub->add_flag("--shared-draws", cfg.shared_draws, "common random numbers for the two policy integrals");
}

}  // namespace

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Counterfactual policy mean embeddings: simulation, testing, herding, and OPE"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "INI/TOML config; one [section] per command, flags override");
  app.require_subcommand(1);

  RunConfig cfg;
  std::uint64_t seed_value = 0;
  double lambda_value = 0.0;
  std::string manifest_path;

  auto* simulate = app.add_subcommand("simulate", "generate a logged dataset");
  add_common(simulate, cfg, seed_value);
  auto* test = app.add_subcommand("test", "run DR-KPT / KPT / PT-linear once");
  add_common(test, cfg, seed_value);
  add_estimation(test, cfg, lambda_value);
  add_testing(test, cfg);
  test->add_option("--data", cfg.data, "dataset CSV (default: simulate the scenario)");
  auto* calibrate = app.add_subcommand("calibrate", "rejection rate under the null plus null statistics");
  add_common(calibrate, cfg, seed_value);
  add_estimation(calibrate, cfg, lambda_value);
  add_testing(calibrate, cfg);
  calibrate->add_option("--n-grid", cfg.n_grid, "sample sizes")->delimiter(',');
  auto* power = app.add_subcommand("power", "rejection rates over sample sizes and methods");
  add_common(power, cfg, seed_value);
  add_estimation(power, cfg, lambda_value);
  add_testing(power, cfg);
  power->add_option("--n-grid", cfg.n_grid, "sample sizes")->delimiter(',');
  auto* herd = app.add_subcommand("herd", "herd from plug-in and DR embeddings and compare with oracle samples");
  add_common(herd, cfg, seed_value);
  add_estimation(herd, cfg, lambda_value);
  herd->add_option("--herd-m", cfg.herd_m, "herded samples");
  herd->add_option("--grid-points", cfg.grid_points, "herding grid resolution");
  herd->add_option("--oracle-size", cfg.oracle_size, "oracle outcomes per replication (0 = n)");
  herd->add_flag("--classic-herding", cfg.classic_herding, "use 1/(t-1) instead of 1/t");
  auto* ope = app.add_subcommand("ope", "off-policy value estimation on the recommendation environment");
  add_common(ope, cfg, seed_value);
  add_estimation(ope, cfg, lambda_value);
  ope->add_option("--similarities", cfg.similarities, "logging similarity settings")->delimiter(',');
  auto* replay = app.add_subcommand("replay", "re-run the configuration recorded in a manifest");
  replay->add_option("manifest", manifest_path, "manifest.json")->required();
  replay->add_option("--out", cfg.out, "output directory (default: as recorded)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (replay->parsed()) {
      std::ifstream in(manifest_path);
      if (!in) throw ConfigError("cannot open manifest '" + manifest_path + "'");
      json m;
      try {
        m = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError("manifest '" + manifest_path + "' is not valid JSON: " + e.what());
      }
      const std::string out_override = cfg.out;
      cfg = from_json(m.at("config"));
      if (!out_override.empty()) cfg.out = out_override;
    } else {
      for (auto* sub : app.get_subcommands()) {
        cfg.command = sub->get_name();
        if (sub->count("--seed") > 0) cfg.seed = seed_value;
        if (sub->get_option_no_throw("--lambda") && sub->count("--lambda") > 0) cfg.lambda = lambda_value;
      }
      apply_command_defaults(cfg);
    }
    run_command(cfg, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace cpme::cli
