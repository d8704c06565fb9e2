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


#ifndef NIGT_CLI_HPP
#define NIGT_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nigt/core.hpp"
#include "nigt/harness.hpp"

namespace nigt::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitCheckFailed = 2;

class ConfigError : public Error {
 public:
  ConfigError(std::string source, std::size_t line, std::size_t column, std::string message);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class NoResults : public Error {
 public:
  using Error::Error;
};

/// `optimizer.theorem`: where η and α come from.
enum class TheoremChoice { Manual, One, Two, Adaptive };

/// A fully defaulted experiment description. Every field has a value after
/// parsing, so serialize() writes a complete file.
struct ExperimentFile {
  ProblemSpec problem;

  harness::OptimizerId optimizer = harness::OptimizerId::Nigt;
  TheoremChoice theorem = TheoremChoice::Manual;
  double eta = 0.01;
  double beta = 0.9;
  harness::BetaSchedule beta_schedule = harness::BetaSchedule::Constant;
  std::optional<double> g_bound;
  double fault_g0_scale = 1.0;
  LayerPartition layers;
  std::optional<double> theorem_R;
  std::optional<double> theorem_L;
  std::optional<double> theorem_rho;
  std::optional<double> theorem_sigma;

  Schedule schedule;

  std::int64_t T = 100;
  std::vector<std::int64_t> T_grid;
  std::vector<std::uint64_t> seeds;   // explicit list; wins over n_seeds
  std::int64_t n_seeds = 1;
  std::uint64_t master_seed = 1;
  bool record_exact = true;
  std::vector<std::int64_t> checkpoints{1, 10, 100};
  std::int64_t n_runs = 10000;
  std::int64_t n_pairs = 1000;
  double radius = 10.0;
  double tol = 0.05;
  std::vector<double> eta0_grid;      // default grid when empty

  std::string output_dir = "results";
  std::vector<std::string> formats{"csv", "json", "svg"};

  /// Explicit seeds, or master_seed, master_seed + 1, ... (n_seeds of them).
  std::vector<std::uint64_t> resolved_seeds() const;
  bool wants(std::string_view format) const;

  bool operator==(const ExperimentFile&) const = default;
};

/// Parses the `section.key = value` format. `#` starts a comment. Throws
/// ConfigError with 1-based line/column on any problem, including unknown
/// or repeated keys.
ExperimentFile parse_experiment(std::string_view text, std::string_view source = "<config>");
ExperimentFile load_experiment(const std::filesystem::path& path);

/// Canonical text form; parse_experiment(serialize_experiment(x)) == x.
std::string serialize_experiment(const ExperimentFile& file);

/// Harness configuration for `run`.
harness::RunConfig to_run_config(const ExperimentFile& file);

/// Shortest decimal that parses back to the same double.
std::string format_shortest(double x);
/// printf("%.17g").
std::string format_g17(double x);

/// Per-seed trajectory CSV.
std::string trajectory_csv(const TrajectoryRecord& record);
/// Parses a file produced by trajectory_csv().
std::vector<StepLog> parse_trajectory_csv(std::string_view text);

struct Series {
  std::vector<double> x;
  std::vector<double> y;
};

enum class Axes { Linear, LogLog };

/// Line chart: one polyline per series, plus a mean polyline when there is
/// more than one.
std::string render_svg(const std::string& title, const std::string& y_label,
                       const std::vector<Series>& series, Axes axes);

/// Writes via a temporary file and rename.
void write_atomic(const std::filesystem::path& path, std::string_view content);

struct Options {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::int64_t> n_seeds;
  std::optional<std::uint64_t> master_seed;
  unsigned jobs = 1;
};

/// Subcommands. Each returns an exit code and reports on `out`/`err`.
int cmd_run(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_certify(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_igt_check(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_sweep(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_bounds(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_plot(const std::filesystem::path& results_dir, std::ostream& out, std::ostream& err);

/// Writes the three charts for the CSVs found in `dir`; returns their paths.
std::vector<std::filesystem::path> plot_directory(const std::filesystem::path& dir);

}  // namespace nigt::cli

#endif  // NIGT_CLI_HPP
