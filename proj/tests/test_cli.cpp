#include <commands.hpp>

#include <cpme/dataset.hpp>

#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace cpme;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "cpme");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  Run r;
  r.code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("cpme_cli_" + name)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& sub = "") const { return (sub.empty() ? path : path / sub).string(); }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("configuration errors exit with 2 before any IO") {
    TempDir t("config");
    const std::string out = t.str("never");
    const auto no_seed = run({"simulate", "--n", "10", "--out", out});
    CHECK(no_seed.code == 2);
    CHECK(no_seed.err.find("explicit seed required") != std::string::npos);

    const auto zero_n = run({"simulate", "--n", "0", "--seed", "1", "--out", out});
    CHECK(zero_n.code == 2);
    CHECK(zero_n.err.find("--n must be > 0") != std::string::npos);
    CHECK(run({"calibrate", "--seed", "1", "--reps", "0", "--out", out}).code == 2);
    CHECK(run({"test", "--seed", "1", "--folds", "0", "--out", out}).code == 2);
    CHECK(run({"calibrate", "--seed", "1", "--scenario", "ope-recommend", "--out", out}).code == 2);
    CHECK(run({"test", "--seed", "1", "--method", "t-test", "--out", out}).code == 2);
    CHECK_FALSE(fs::exists(out));

    CHECK(run({"simulate", "--seed", "1", "--bogus"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"replay", t.str("missing.json")}).code == 2);
  }

  TEST_CASE("unwritable output exits with 2 before any work") {
    TempDir t("file");
    fs::create_directories(t.path);
    std::ofstream(t.path / "blocker") << "x";
    CHECK(run({"simulate", "--seed", "1", "--n", "5", "--out", t.str("blocker")}).code == 2);
  }

  TEST_CASE("simulate is deterministic and replayable") {
    TempDir a("sim_a"), b("sim_b"), c("sim_c");
    REQUIRE(run({"simulate", "--seed", "7", "--n", "30", "--out", a.str()}).code == 0);
    REQUIRE(run({"simulate", "--seed", "7", "--n", "30", "--out", b.str()}).code == 0);
    CHECK(slurp(a.path / "dataset.csv") == slurp(b.path / "dataset.csv"));
    CHECK(slurp(a.path / "manifest.json").find("\"seed\": 7") != std::string::npos);
    const auto data = read_dataset_csv(a.str("dataset.csv"));
    CHECK(data.size() == 30);

    REQUIRE(run({"replay", a.str("manifest.json"), "--out", c.str()}).code == 0);
    CHECK(slurp(c.path / "dataset.csv") == slurp(a.path / "dataset.csv"));

    TempDir d("sim_d");
    REQUIRE(run({"simulate", "--seed", "8", "--n", "30", "--out", d.str()}).code == 0);
    CHECK(slurp(d.path / "dataset.csv") != slurp(a.path / "dataset.csv"));
  }

  TEST_CASE("test command on a dataset file") {
    TempDir a("test_a");
    REQUIRE(run({"simulate", "--seed", "3", "--n", "80", "--scenario", "II", "--out", a.str("sim")}).code == 0);
    const auto r = run({"test", "--seed", "3", "--data", a.str("sim/dataset.csv"), "--scenario", "II", "--lambda",
                        "0.01", "--out", a.str("t")});
    REQUIRE(r.code == 0);
    const auto text = slurp(a.path / "t" / "test_result.json");
    CHECK(text.find("\"p_value\"") != std::string::npos);
    CHECK(text.find("dr-kpt") != std::string::npos);

    std::ofstream(a.path / "bad.csv") << "x_0,a,y\n1.0,oops,2.0\n";
    const auto bad = run({"test", "--seed", "3", "--data", a.str("bad.csv"), "--out", a.str("t2")});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("line 2") != std::string::npos);
  }

  TEST_CASE("ope manifest records the paper grid") {
    TempDir a("ope");
    const auto r = run({"ope", "--seed", "1", "--n", "60", "--reps", "1", "--items", "12", "--users", "5",
                        "--similarities", "1", "--out", a.str()});
    REQUIRE(r.code == 0);
    const auto m = slurp(a.path / "manifest.json");
    CHECK(m.find("1e-08") != std::string::npos);
    CHECK(m.find("0.001") != std::string::npos);
    CHECK(fs::exists(a.path / "ope_reps.csv"));
  }

  TEST_CASE("herd is deterministic") {
    TempDir a("herd_a"), b("herd_b");
    const std::vector<std::string> args{"herd", "--seed", "2", "--n", "80", "--reps", "1", "--herd-m", "20",
                                        "--grid-points", "64", "--lambda", "0.01"};
    auto with_out = [&](const TempDir& t) {
      auto v = args;
      v.push_back("--out");
      v.push_back(t.str());
      return v;
    };
    REQUIRE(run(with_out(a)).code == 0);
    REQUIRE(run(with_out(b)).code == 0);
    for (const char* f : {"samples_plugin.csv", "samples_dr.csv", "distances.csv", "herd_reps.csv"})
      CHECK(slurp(a.path / f) == slurp(b.path / f));
  }

  TEST_CASE("power defaults and a quick smoke run") {
    TempDir a("power");
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run({"power", "--seed", "5", "--n-grid", "200", "--reps", "1", "--n-perm", "200", "--out", a.str()});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(r.code == 0);
    CHECK(secs < 5.0);
    const auto study = slurp(a.path / "study.csv");
    CHECK(study.find("dr-kpt") != std::string::npos);
    CHECK(study.find("pt-linear") != std::string::npos);
    const auto m = slurp(a.path / "manifest.json");
    CHECK(m.find("\"delta\": 2.0") != std::string::npos);
  }

  TEST_CASE("version") {
    const auto r = run({"--version"});
    CHECK(r.code == 0);
    CHECK(r.out.find(cli::kVersion) != std::string::npos);
  }
}
