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

#ifndef NIGT_HARNESS_HPP
#define NIGT_HARNESS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "nigt/core.hpp"
#include "nigt/optimizers.hpp"
#include "nigt/problems.hpp"
#include "nigt/tuning.hpp"

namespace nigt::harness {

class NonConstantHessian : public Error {
 public:
  using Error::Error;
};

class InsufficientGrid : public Error {
 public:
  using Error::Error;
};

enum class OptimizerId { Sgd, HeavyBall, Nsgdm, Nigt, NigtAdaptive, NigtLayerwise };

std::string_view to_string(OptimizerId id);
std::optional<OptimizerId> parse_optimizer_id(std::string_view name);

/// Where η and α come from for the constant-parameter optimizers.
enum class ParamMode { Manual, Theorem1, Theorem2 };

/// Constant β, or the averaging schedule β_t = (t−1)/t that makes m_t the
/// mean of the first t samples.
enum class BetaSchedule { Constant, Averaging };

struct RunConfig {
  ProblemSpec problem;
  OptimizerId optimizer = OptimizerId::Nigt;
  std::int64_t T = 100;
  ParamMode param_mode = ParamMode::Manual;
  double eta = 0.01;
  double beta = 0.9;
  BetaSchedule beta_schedule = BetaSchedule::Constant;
  // Replace the problem constants fed to the theorem calculators.
  std::optional<double> theorem_R;
  std::optional<double> theorem_L;
  std::optional<double> theorem_rho;
  std::optional<double> theorem_sigma;
  /// Gradient bound for the adaptive optimizer; the problem's 𝔤 otherwise.
  std::optional<double> g_bound;
  /// Fault injection for the adaptive optimizer: G_0 = scale·D.
  double fault_g0_scale = 1.0;
  Schedule schedule;
  /// Empty means a single layer covering every coordinate.
  LayerPartition layers;
  std::vector<std::uint64_t> seeds{1};
  bool record_exact = true;
  bool keep_iterates = false;

  /// Throws InvalidArgument on T < 1, empty or duplicate seeds, β ∉ [0, 1).
  void validate() const;
};

/// η and α actually used, plus the matching theorem bound when there is one.
struct ResolvedParams {
  tuning::TheoremParams params;
  std::optional<double> bound;
};

ResolvedParams resolve_params(const RunConfig& cfg, const StochasticProblem& problem);

/// Snapshot (w_t, m_t, η_t) taken before the move of step t.
struct Iterate {
  DenseVector w;
  DenseVector m;
  double eta = 0.0;
};

struct RunResult {
  std::vector<TrajectoryRecord> records;         // one per seed, in cfg.seeds order
  std::vector<std::vector<Iterate>> iterates;    // only with keep_iterates
  std::vector<DenseVector> final_w;              // w_{T+1} per seed
  ResolvedParams resolved;
  std::string problem_id;
};

/// Executes the configured optimizer for every seed. Per seed, ξ_t draws
/// come from RngStream(seed, 0) and the adaptive second sample ξ_t' from
/// RngStream(seed, 1). Deterministic regardless of `jobs`.
RunResult run(const RunConfig& cfg, unsigned jobs = 1);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

/// Tolerance for ‖w_{t+1} − w_t‖ = η: eight ulps at the scale of the operands.
double step_length_tolerance(const DenseVector& w, const DenseVector& w_next, double eta);

/// RHS − LHS of the per-step normalized-descent inequality
/// F(w_{t+1}) − F(w_t) ≤ −η/3‖∇F(w_t)‖ + 8η/3‖m_t − ∇F(w_t)‖ + Lη²/2.
double lemma1_residual(const StochasticProblem& p, const DenseVector& w, const DenseVector& m,
                       double eta, const DenseVector& w_next);

/// True when residual ≥ −1e-9·(1 + |LHS|).
bool lemma1_ok(double residual, double lhs);

struct Lemma1Audit {
  std::vector<double> residuals;
  std::vector<double> lhs;
  std::size_t violations = 0;
  bool passed() const noexcept { return violations == 0; }
};

/// Audits every step of a normalized trajectory; `final_w` is w_{T+1}.
Lemma1Audit lemma1_check(const StochasticProblem& p, std::span<const Iterate> iterates,
                         const DenseVector& final_w);

struct MomentCheckpoint {
  std::int64_t k = 0;  // samples consumed
  double bias_norm = 0.0;
  double variance = 0.0;
  double target_variance = 0.0;
  std::size_t n_runs = 0;
  bool passed = false;
};

struct MomentReport {
  std::vector<MomentCheckpoint> checkpoints;
  bool passed() const;
};

/// Monte-Carlo check of the transport estimator on a constant-Hessian
/// problem: after k samples with β = (k−1)/k and extrapolated queries, the
/// error m − ∇F(w) should have zero mean and trace variance σ²/k. The
/// iterates follow the normalized NIGT update with step `eta`.
MomentReport igt_moment_check(const StochasticProblem& problem,
                              std::span<const std::int64_t> checkpoints, std::size_t n_runs,
                              std::uint64_t seed, double eta = 0.01, unsigned jobs = 1);

MomentReport igt_moment_check(std::vector<double> eigs, double sigma,
                              std::span<const std::int64_t> checkpoints, std::size_t n_runs,
                              std::uint64_t seed, double eta = 0.01, unsigned jobs = 1);

struct ZBoundReport {
  double max_ratio = 0.0;
  double fd_slack = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

/// max ‖Z(a, b)‖/‖a − b‖² over pairs in the ball of `radius` around w1;
/// passes when ≤ 1.05·ρ + fd_slack.
ZBoundReport z_bound_check(const StochasticProblem& p, std::size_t n_pairs, double radius,
                           RngStream& rng);

struct BoundRow {
  std::int64_t T = 0;
  double mean_avg_grad_norm = 0.0;
  double std_error = 0.0;
  double theorem_bound = 0.0;
  double alpha = 0.0;
  double eta = 0.0;
  bool pass = false;
};

struct BoundTable {
  std::vector<BoundRow> rows;
  std::size_t lemma1_violations = 0;
  std::size_t lemma1_steps = 0;
  std::size_t step_length_violations = 0;
  std::size_t no_moves = 0;
  double certified_radius = 0.0;
  double max_excursion = 0.0;
  bool all_passed() const;
};

/// For each T: runs `optimizer` (Nsgdm with theorem1_params or Nigt with theorem2_params)
/// over the seeds and compares mean + 3·stderr of the average
/// gradient norm with the theorem bound. With σ = 0 only the first seed
/// runs. Iterates must stay inside the certification ball; the radius is
/// widened and constants re-certified when they do not.
BoundTable bound_acceptance(const StochasticProblem& problem, OptimizerId optimizer,
                            std::span<const std::int64_t> T_grid,
                            std::span<const std::uint64_t> seeds, unsigned jobs = 1,
                            double cert_radius = 10.0);

/// Least-squares slope of log(mean_avg_grad_norm) against log T.
double rate_diagnostic(std::span<const BoundRow> rows);

struct SweepRow {
  double eta0 = 0.0;
  double avg_grad_norm = 0.0;  // mean over seeds of (1/T)Σ‖∇F(w_t)‖
};

/// Runs `base` once per base learning rate and returns the rows ranked best
/// first (ties to the smaller η0).
std::vector<SweepRow> grid_sweep(const RunConfig& base, std::span<const double> eta0_grid,
                                 unsigned jobs = 1);

/// η0 ∈ {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1}.
std::vector<double> default_eta0_grid();

}  // namespace nigt::harness

#endif  // NIGT_HARNESS_HPP
