#include "invmetric/experiments.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using namespace invmetric;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / ("invmetric_cli_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

int run_cli(const std::string& args) {
  const int rc = std::system((std::string(INVMETRIC_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST(Counterexample, Oracles) {
  EXPECT_NEAR(detail::q_value(0.0), 2.0, 1e-15);
  EXPECT_NEAR(detail::r_value(0.0), 2.0, 1e-15);
  EXPECT_NEAR(detail::q_value(0.99), 398.0, 1e-9);
  EXPECT_NEAR(detail::r_value(0.99), 398.0, 1e-9);
}

TEST(Counterexample, DirectRouteAgrees) {
  const Kernel kb = closed_form_kernel(make_polydisk({1.0, 1.0}));
  const Kernel ko = closed_form_kernel(make_omega_psi());
  const HoloMap f = omega_psi_map();
  for (double w : {0.0, 0.5, 0.9})
    EXPECT_NEAR(detail::q_direct(kb, ko, f, make_point({0.3, w})), detail::q_value(w), 1e-6);
}

TEST(Counterexample, GridTouchingOneRejected) {
  CounterexampleParams p;
  p.w_max = 1.0;
  try {
    run_counterexample(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_grid);
  }
}

TEST(Counterexample, ReportPasses) {
  CounterexampleParams p;
  p.grid_points = 20;
  const auto rep = run_counterexample(p);
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(rep.rows.size(), 30u);
}

TEST(Report, NonFiniteCellsBlanked) {
  ExperimentReport r;
  r.columns = {"a", "b"};
  r.add_row({1.0, std::nan("")});
  EXPECT_EQ(r.rows[0].status, "non-finite");
  EXPECT_EQ(r.to_csv(), "a,b,status\n1,,non-finite\n");
  EXPECT_THROW(r.add_row({1.0}), Error);
}

TEST(Report, AssertionsCarryToleranceAndValue) {
  ExperimentReport r;
  r.check("x", 1.05, "<=", 1.0, 0.1);
  r.check("y", std::nan(""), "<=", 1.0);
  EXPECT_TRUE(r.assertions[0].passed);
  EXPECT_FALSE(r.assertions[1].passed);
  EXPECT_FALSE(r.passed());
  const json j = r.to_json();
  EXPECT_EQ(j["schema"], "invmetric.report/1");
  EXPECT_EQ(j["assertions"][0]["tolerance"], 0.1);
}

TEST(Config, UnknownKeyRejected) {
  const json cfg = json::parse(R"({"experiment": "counterexample", "grid_points": 10, "speed": "fast"})");
  try {
    run_experiment(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config);
  }
}

TEST(Config, SeedMandatory) {
  const json cfg = json::parse(R"({"experiment": "koebe", "domains": [{"variant": "ball", "dim": 1}], "points": 5})");
  EXPECT_THROW(run_experiment(cfg), Error);
}

TEST(Config, UnknownExperiment) {
  EXPECT_THROW(run_experiment(json::parse(R"({"experiment": "nope"})")), Error);
}

TEST(Config, KoebeRejectsNonPlanar) {
  const json cfg = json::parse(R"({"experiment": "koebe", "domains": [{"variant": "ball", "dim": 2}], "seed": 1})");
  EXPECT_THROW(run_experiment(cfg), Error);
}

TEST(Runners, KoebeDeterministic) {
  const json cfg = json::parse(
      R"({"experiment": "koebe", "seed": 4, "points": 20,
          "domains": [{"variant": "planar", "coeffs": [0, 1, [0.5, 0]]}]})");
  const auto a = run_experiment(cfg), b = run_experiment(cfg);
  EXPECT_TRUE(a.passed());
  EXPECT_EQ(a.to_csv(), b.to_csv());
}

TEST(Runners, GreenDisk) {
  GreenParams p;
  p.domain = make_disk();
  p.pairs = 100;
  const auto rep = run_green(p);
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(rep.rows.size(), 300u);
}

TEST(Runners, MetricBall) {
  MetricParams p;
  p.domain = make_ball(2);
  p.points = {make_point({0.0, 0.0})};
  p.samples = 5;
  const auto rep = run_metric(p);
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(std::get<double>(rep.rows[0].cells[1]), 3.0);
}

TEST(Cli, CounterexampleCsvAndAssertions) {
  const fs::path out = scratch_dir() / "ce.csv";
  EXPECT_EQ(run_cli("counterexample --config " INVMETRIC_CONFIG_DIR "/counterexample.json --out " + out.string()), 0);
  const std::string csv = slurp(out);
  EXPECT_EQ(csv.rfind("series,w,Q,R,abs_diff,direct,direct_diff,status\n", 0), 0u);
  EXPECT_NE(slurp(out.string() + ".assertions.csv").find("identity_Q_equals_R"), std::string::npos);
}

TEST(Cli, JsonFormat) {
  const fs::path out = scratch_dir() / "ce.json";
  EXPECT_EQ(run_cli("counterexample --format json --config " INVMETRIC_CONFIG_DIR "/counterexample.json --out " +
                    out.string()),
            0);
  const json j = json::parse(slurp(out));
  EXPECT_EQ(j["experiment"], "counterexample");
  EXPECT_TRUE(j["summary"]["passed"].get<bool>());
}

TEST(Cli, MismatchedSubcommandIsConfigError) {
  EXPECT_EQ(run_cli("koebe --config " INVMETRIC_CONFIG_DIR "/counterexample.json --out /dev/null"), 2);
}

TEST(Cli, MalformedJsonIsConfigError) {
  const auto p = write_config("bad.json", "{\"experiment\": ");
  EXPECT_EQ(run_cli("counterexample --config " + p.string() + " --out /dev/null"), 2);
}

TEST(Cli, UnknownKeyIsConfigError) {
  const auto p = write_config("extra.json", R"({"experiment": "counterexample", "colour": 1})");
  EXPECT_EQ(run_cli("counterexample --config " + p.string() + " --out /dev/null"), 2);
}

TEST(Cli, FailedAssertionExitsOne) {
  const auto p = write_config("tight.json", R"({"experiment": "green", "domain": {"variant": "ball", "dim": 1},
                                                "pairs": 50, "seeds": [1, 2], "bound": 0.1})");
  EXPECT_EQ(run_cli("green --config " + p.string() + " --out " + (scratch_dir() / "g.csv").string()), 1);
}

TEST(Cli, MissingConfigFlag) { EXPECT_EQ(run_cli("counterexample --out /dev/null"), 2); }
