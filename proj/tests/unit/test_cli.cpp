// Copyright 2026 The nigt-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "nigt/cli.hpp"

namespace cli = nigt::cli;
namespace fs = std::filesystem;
using nigt::RngStream;

namespace {

const fs::path kSource = NIGT_SOURCE_DIR;
const fs::path kFixtures = kSource / "tests" / "fixtures";
const fs::path kGolden = kSource / "tests" / "golden";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nigt_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

cli::Options options(const fs::path& config, const fs::path& out) {
  cli::Options o;
  o.config = config;
  o.out = out;
  o.jobs = 2;
  return o;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

class FileGen {
 public:
  explicit FileGen(std::uint64_t seed) : rng_(seed, 77) {}

  double num() {
    // Mix of round and awkward values, including ones with long expansions.
    switch (rng_.next_u64() % 4) {
      case 0: return static_cast<double>(rng_.next_u64() % 100);
      case 1: return rng_.uniform();
      case 2: return std::exp(40.0 * rng_.uniform() - 20.0);
      default: return 0.1 * static_cast<double>(rng_.next_u64() % 30);
    }
  }
  std::int64_t small(std::int64_t hi) { return 1 + static_cast<std::int64_t>(rng_.next_u64() % hi); }
  bool coin() { return rng_.next_u64() % 2 == 0; }

  std::vector<double> nums(std::size_t n) {
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(num());
    return v;
  }

  cli::ExperimentFile file() {
    cli::ExperimentFile f;
    f.problem.kind = static_cast<nigt::ProblemKind>(rng_.next_u64() % 4);
    f.problem.dim = static_cast<std::size_t>(small(8));
    if (coin()) f.problem.eigs = nums(static_cast<std::size_t>(small(4)));
    f.problem.sigma = num();
    f.problem.p = num();
    f.problem.a = num();
    f.problem.b = num();
    f.problem.label_noise = num();
    if (coin()) f.problem.w_star = nums(3);
    if (coin()) f.problem.w1 = nums(3);
    if (coin()) f.problem.L_override = num();
    if (coin()) f.problem.rho_override = num();
    if (coin()) f.problem.M_override = num();
    const nigt::harness::OptimizerId ids[] = {
        nigt::harness::OptimizerId::Sgd, nigt::harness::OptimizerId::HeavyBall,
        nigt::harness::OptimizerId::Nsgdm, nigt::harness::OptimizerId::Nigt,
        nigt::harness::OptimizerId::NigtAdaptive, nigt::harness::OptimizerId::NigtLayerwise};
    f.optimizer = ids[rng_.next_u64() % 6];
    if (f.optimizer == nigt::harness::OptimizerId::NigtAdaptive) {
      f.theorem = cli::TheoremChoice::Adaptive;
    } else {
      const cli::TheoremChoice t[] = {cli::TheoremChoice::Manual, cli::TheoremChoice::One,
                                      cli::TheoremChoice::Two};
      f.theorem = t[rng_.next_u64() % 3];
    }
    f.eta = num() + 1e-3;
    f.beta = 0.999 * rng_.uniform();
    f.beta_schedule = coin() ? nigt::harness::BetaSchedule::Constant : nigt::harness::BetaSchedule::Averaging;
    if (coin()) f.g_bound = num();
    f.fault_g0_scale = num();
    if (coin()) {
      f.layers.ranges = {{0, 2}, {2, 5}};
      f.layers.lr_scale = {num(), num()};
    }
    if (coin()) f.theorem_R = num();
    if (coin()) f.theorem_sigma = num();
    f.schedule.kind = coin() ? nigt::ScheduleKind::Constant : nigt::ScheduleKind::WarmupPolyDecay;
    f.schedule.warmup_steps = small(50);
    f.schedule.power = static_cast<int>(small(3));
    f.schedule.weight_norm_scaling = coin();
    f.schedule.norm_floor = num();
    f.T = small(100000);
    if (coin()) f.T_grid = {small(100), small(10000)};
    if (coin()) f.seeds = {rng_.next_u64(), 5};
    f.n_seeds = small(30);
    f.master_seed = rng_.next_u64();
    f.record_exact = coin();
    f.checkpoints = {small(5), small(500)};
    f.n_runs = 1 + small(10000);
    f.n_pairs = 99 + small(1000);
    f.radius = num() + 1e-3;
    f.tol = num();
    if (coin()) f.eta0_grid = {num() + 1e-9, 1.0};
    f.output_dir = coin() ? "results" : "out/dir with spaces";
    f.formats = coin() ? std::vector<std::string>{"json"} : std::vector<std::string>{"svg", "csv"};
    return f;
  }

 private:
  RngStream rng_;
};

}  // namespace

TEST_CASE("defaults") {
  const auto f = cli::parse_experiment("");
  CHECK(f.beta == 0.9);
  CHECK(f.optimizer == nigt::harness::OptimizerId::Nigt);
  CHECK(f.theorem == cli::TheoremChoice::Manual);
  CHECK(f.resolved_seeds() == std::vector<std::uint64_t>{1});
  CHECK(f.formats == std::vector<std::string>{"csv", "json", "svg"});

  const auto a = cli::parse_experiment("optimizer.id = nigt_adaptive\n");
  CHECK(a.theorem == cli::TheoremChoice::Adaptive);
  const auto b = cli::parse_experiment("optimizer.theorem = adaptive\n");
  CHECK(b.optimizer == nigt::harness::OptimizerId::NigtAdaptive);

  const auto s = cli::parse_experiment("run.n_seeds = 3\nrun.master_seed = 40\n");
  CHECK(s.resolved_seeds() == std::vector<std::uint64_t>{40, 41, 42});
}

TEST_CASE("unknown keys are reported with their location") {
  try {
    cli::parse_experiment("problem.kind = sign_noise\n\n  moментum: 0.9\n", "exp.cfg");
    FAIL("expected ConfigError");
  } catch (const cli::ConfigError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 3);
    CHECK(std::string(e.what()).find("moментum") != std::string::npos);
    CHECK(std::string(e.what()).find("exp.cfg:3:3") != std::string::npos);
  }
  try {
    cli::parse_experiment("optimizer.momentum = 0.9 # typo\n");
    FAIL("expected ConfigError");
  } catch (const cli::ConfigError& e) {
    CHECK(e.line() == 1);
    CHECK(std::string(e.what()).find("'optimizer.momentum'") != std::string::npos);
  }
}

TEST_CASE("value errors point at the value") {
  try {
    cli::parse_experiment("# header\nproblem.eigs = 1, two\n");
    FAIL("expected ConfigError");
  } catch (const cli::ConfigError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 16);
  }
  CHECK_THROWS_AS(cli::parse_experiment("run.T = 10\nrun.T = 20\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_experiment("run.T = 0\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_experiment("run.T = 1.5\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_experiment("optimizer.beta = 1\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_experiment("optimizer.eta = nan\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_experiment("output.formats = csv, pdf\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_experiment("optimizer.id = nigt\noptimizer.theorem = adaptive\n"),
                  cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_experiment("problem.kind\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_experiment("run.seeds = 3, 3\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_experiment("optimizer.layers = 0:2, 2:4\noptimizer.layer_scales = 1\n"),
                  cli::ConfigError);
}

TEST_CASE("round trip is the identity on generated files") {
  FileGen gen(2024);
  for (int i = 0; i < 500; ++i) {
    const cli::ExperimentFile f = gen.file();
    const std::string text = cli::serialize_experiment(f);
    const cli::ExperimentFile back = cli::parse_experiment(text);
    REQUIRE(back == f);
    CHECK(cli::serialize_experiment(back) == text);
  }
}

TEST_CASE("round trip is the identity on the shipped fixtures") {
  for (const auto& entry : fs::directory_iterator(kFixtures)) {
    if (entry.path().extension() != ".cfg" || entry.path().filename() == "unknown_key.cfg" ||
        entry.path().filename() == "bad_value.cfg") {
      continue;
    }
    INFO(entry.path());
    const auto f = cli::load_experiment(entry.path());
    CHECK(cli::parse_experiment(cli::serialize_experiment(f)) == f);
  }
}

TEST_CASE("number formatting") {
  CHECK(cli::format_g17(0.1) == "0.10000000000000001");
  CHECK(cli::format_g17(2.0) == "2");
  CHECK(cli::format_shortest(0.1) == "0.1");
  CHECK(cli::format_shortest(1e-5) == "1e-05");
  RngStream rng(1, 2);
  for (int i = 0; i < 10000; ++i) {
    const double x = std::ldexp(rng.uniform(), static_cast<int>(rng.next_u64() % 200) - 100);
    CHECK(std::stod(cli::format_shortest(x)) == x);
    CHECK(std::stod(cli::format_g17(x)) == x);
  }
}

TEST_CASE("golden outputs") {
  const fs::path out = scratch("golden");
  std::ostringstream o, e;
  const int rc = cli::cmd_run(options(kGolden / "nsgdm_quadratic" / "experiment.cfg", out), o, e);
  REQUIRE(rc == cli::kExitOk);
  for (const char* name : {"seed_7.csv", "summary.json", "grad_norm.svg", "f_val.svg", "eta.svg"}) {
    INFO(name);
    CHECK(slurp(out / name) == slurp(kGolden / "nsgdm_quadratic" / name));
  }
  const std::string csv = slurp(out / "seed_7.csv");
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(csv.rfind("t,f_val,grad_norm,eta,alpha,m_norm,mhat_err,lemma1_residual\n", 0) == 0);

  SUBCASE("plot reproduces the same charts from the CSVs") {
    const fs::path replot = scratch("replot");
    fs::copy_file(out / "seed_7.csv", replot / "seed_7.csv");
    CHECK(cli::cmd_plot(replot, o, e) == cli::kExitOk);
    for (const char* name : {"grad_norm.svg", "f_val.svg", "eta.svg"}) {
      CHECK(slurp(replot / name) == slurp(kGolden / "nsgdm_quadratic" / name));
    }
  }
}

TEST_CASE("csv parse inverts csv write") {
  nigt::TrajectoryRecord rec(3, "p", "o");
  RngStream rng(5, 5);
  for (int t = 1; t <= 50; ++t) {
    nigt::StepLog s;
    s.t = t;
    s.f_val = rng.normal();
    s.grad_norm = rng.uniform();
    s.eta = rng.uniform() + 1e-3;
    s.alpha = rng.uniform();
    s.m_norm = rng.uniform();
    if (t % 2) s.mhat_err = rng.uniform();
    if (t % 3) s.lemma1_residual = rng.normal();
    rec.append(s);
  }
  const auto back = cli::parse_trajectory_csv(cli::trajectory_csv(rec));
  REQUIRE(back.size() == 50);
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].f_val == rec.steps()[i].f_val);
    CHECK(back[i].mhat_err == rec.steps()[i].mhat_err);
    CHECK(back[i].lemma1_residual == rec.steps()[i].lemma1_residual);
  }
}

TEST_CASE("run writes one row per step and reruns are byte identical") {
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  std::ostringstream o, e;
  REQUIRE(cli::cmd_run(options(kFixtures / "ok_quadratic.cfg", a), o, e) == cli::kExitOk);
  auto opt = options(kFixtures / "ok_quadratic.cfg", b);
  opt.jobs = 1;
  REQUIRE(cli::cmd_run(opt, o, e) == cli::kExitOk);
  const std::string csv = slurp(a / "seed_1.csv");
  CHECK(count(csv, "\n") == 11);
  CHECK(csv == slurp(b / "seed_1.csv"));
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
  CHECK_FALSE(fs::exists(a / "grad_norm.svg"));
}

TEST_CASE("polyline count contract") {
  const fs::path dir = scratch("multi");
  std::ostringstream o, e;
  REQUIRE(cli::cmd_run(options(kFixtures / "run_multi_seed.cfg", dir), o, e) == cli::kExitOk);
  for (const char* name : {"grad_norm.svg", "f_val.svg", "eta.svg"}) {
    const std::string svg = slurp(dir / name);
    CHECK(count(svg, "<polyline") == 21);
    CHECK(count(svg, "class=\"mean\"") == 1);
  }
  CHECK(count(slurp(kGolden / "nsgdm_quadratic" / "grad_norm.svg"), "<polyline") == 1);

  auto opt = options(kFixtures / "run_multi_seed.cfg", scratch("multi_override"));
  opt.n_seeds = 2;
  opt.master_seed = 100;
  REQUIRE(cli::cmd_run(opt, o, e) == cli::kExitOk);
  CHECK(slurp(dir / "seed_101.csv") == slurp(*opt.out / "seed_101.csv"));
  CHECK_FALSE(fs::exists(*opt.out / "seed_102.csv"));
}

TEST_CASE("plot on an empty directory fails") {
  std::ostringstream o, e;
  CHECK(cli::cmd_plot(scratch("empty"), o, e) == cli::kExitConfig);
  CHECK(cli::cmd_plot(scratch("empty") / "missing", o, e) == cli::kExitConfig);
}

TEST_CASE("certify reports") {
  std::ostringstream o, e;
  REQUIRE(cli::cmd_certify(options(kFixtures / "certify_quadratic.cfg", scratch("c1")), o, e) == cli::kExitOk);
  const auto j = nlohmann::json::parse(o.str());
  CHECK(j["L_hat"].get<double>() == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(j["passed"].get<bool>());

  std::ostringstream o2;
  REQUIRE(cli::cmd_certify(options(kFixtures / "certify_sign_noise.cfg", scratch("c2")), o2, e) == cli::kExitOk);
  const auto s = nlohmann::json::parse(o2.str());
  CHECK(s["L_hat"].get<double>() <= s["fd_slack"].get<double>());

  std::ostringstream o3;
  CHECK(cli::cmd_certify(options(kFixtures / "certify_under_L.cfg", scratch("c3")), o3, e) ==
        cli::kExitCheckFailed);
}

TEST_CASE("igt-check table") {
  const fs::path dir = scratch("igt");
  std::ostringstream o, e;
  REQUIRE(cli::cmd_igt_check(options(kFixtures / "igt_check.cfg", dir), o, e) == cli::kExitOk);
  const auto j = nlohmann::json::parse(slurp(dir / "igt_check.json"));
  REQUIRE(j["checkpoints"].size() == 3);
  for (const auto& row : j["checkpoints"]) {
    const double ratio = row["variance"].get<double>() / row["target_variance"].get<double>();
    CHECK(ratio >= 0.9);
    CHECK(ratio <= 1.1);
  }
  CHECK(count(slurp(dir / "igt_check.csv"), "\n") == 4);
}

TEST_CASE("sweep table has one row per grid value") {
  const fs::path dir = scratch("sweep");
  std::ostringstream o, e;
  REQUIRE(cli::cmd_sweep(options(kFixtures / "sweep.cfg", dir), o, e) == cli::kExitOk);
  const auto j = nlohmann::json::parse(slurp(dir / "sweep.json"));
  CHECK(j["rows"].size() == 6);
}

TEST_CASE("bounds table") {
  const fs::path dir = scratch("bounds");
  std::ostringstream o, e;
  REQUIRE(cli::cmd_bounds(options(kFixtures / "bounds.cfg", dir), o, e) == cli::kExitOk);
  const auto j = nlohmann::json::parse(slurp(dir / "bounds.json"));
  REQUIRE(j["rows"].size() == 2);
  for (const auto& row : j["rows"]) CHECK(row["pass"].get<bool>());
  CHECK(j["lemma1_violations"].get<int>() == 0);
}

TEST_CASE("fault-injected adaptive run lists the step") {
  const fs::path dir = scratch("fault");
  std::ostringstream o, e;
  REQUIRE(cli::cmd_run(options(kFixtures / "adaptive_fault.cfg", dir), o, e) == cli::kExitCheckFailed);
  const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK_FALSE(j["pass"].get<bool>());
  REQUIRE(j["invariant_violations"].size() >= 1);
  CHECK(j["invariant_violations"][0]["t"].get<int>() == 1);
}
