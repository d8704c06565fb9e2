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

#ifndef NIGT_OPTIMIZERS_HPP
#define NIGT_OPTIMIZERS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nigt/core.hpp"
#include "nigt/problems.hpp"

namespace nigt {

class NonFiniteGradient : public Error {
 public:
  using Error::Error;
};

class InvalidGBound : public Error {
 public:
  using Error::Error;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class PartitionMismatch : public Error {
 public:
  using Error::Error;
};

// Step rules are pure transitions: state in, state out. `moved` is false
// when the step hit a normalization singularity (‖m‖ ≤ floor) and left w
// unchanged.

struct NsgdmState {
  DenseVector w;
  DenseVector m;
  std::int64_t t = 1;
  bool moved = true;
};

/// Sets m_1 to the first gradient sample and takes the first normalized step.
NsgdmState nsgdm_init(const DenseVector& w1, const DenseVector& first_grad, double eta);

/// m' = β·m + (1−β)·grad, then w' = w − η·m'/‖m'‖.
NsgdmState nsgdm_step(const NsgdmState& s, const DenseVector& grad, double eta, double beta);

/// Memoryless normalized SGD: w − η·grad/‖grad‖ (no-move on a zero gradient).
DenseVector normalized_sgd_step(const DenseVector& w, const DenseVector& grad, double eta,
                                bool* moved = nullptr);

/// x = w + β/(1−β)·(w − w_prev).
DenseVector igt_extrapolate(const DenseVector& w, const DenseVector& w_prev, double beta);

struct NigtState {
  DenseVector w;
  DenseVector w_prev;
  DenseVector m;
  std::int64_t t = 2;
  bool moved = true;
  /// Point where the most recent gradient was sampled.
  DenseVector last_x;
  /// The most recent gradient sample.
  DenseVector last_grad;
};

/// m_1 = ∇f(w1, ξ_1), w_2 = w1 − η·m_1/‖m_1‖, w_prev = w1, t = 2.
NigtState nigt_init(const DenseVector& w1, const StochasticProblem& oracle, RngStream& rng,
                    double eta);

/// One NIGT iteration with momentum parameter `beta` for this step (constant
/// for the main algorithm, t/(t+1) for the classical transport schedule).
NigtState nigt_step(const NigtState& s, const StochasticProblem& oracle, RngStream& rng,
                    double eta, double beta);

struct AdaptiveConstants {
  double C = 0.0;
  double D = 0.0;
  double G1 = 0.0;
  double eta0 = 0.0;
};

/// C = √(7/(26·𝔤^{6/7})), D = C^{−14/3}, G_1 = 3𝔤² + D, η_0 = C/D^{2/7}.
AdaptiveConstants adaptive_constants(double g_bound);

struct AdaptiveState {
  DenseVector w;
  DenseVector w_prev;
  DenseVector m;
  double G = 0.0;        // G_t
  double G_prev = 0.0;   // G_{t-1}; G_0 = D
  double eta_prev = 0.0; // η_{t-1}
  std::int64_t t = 1;
  double C = 0.0;
  double D = 0.0;
  double g_bound = 0.0;

  // Diagnostics of the most recent step.
  bool moved = true;
  double last_eta = 0.0;
  double last_alpha = 0.0;
  double last_delta = 0.0;  // increment added to G on the last step
  double last_drift = 0.0;  // 𝔤²((t+1)^{1/4} − t^{1/4}) on the last step
  DenseVector last_x;
  DenseVector last_grad;
  std::vector<std::string> violations;
};

/// Initial state: w = w_prev = w1, m = 0, G = G_1, G_prev = D, η_prev = η_0.
AdaptiveState adaptive_init(const DenseVector& w1, double g_bound);

/// Fault-injection variant: stores G_0 = g0_scale·D instead of D. Only used
/// to exercise invariant reporting.
AdaptiveState adaptive_init_with_g0_scale(const DenseVector& w1, double g_bound,
                                          double g0_scale);

/// One pass of the adaptive loop body. Draws ∇f(x_t, ξ_t) from `rng` and the
/// independent ∇f(x_t, ξ_t') from `rng_prime`. Invariant breaches (α_t > 1,
/// η increasing, G decreasing, G_t < 𝔤²t^{1/4}, G increment outside
/// [drift, 4𝔤² + drift]) are recorded in `violations`, never corrected.
AdaptiveState adaptive_step(const AdaptiveState& s, const StochasticProblem& oracle,
                            RngStream& rng, RngStream& rng_prime);

/// Throws InvariantViolation when the last adaptive step recorded any.
void require_invariants(const AdaptiveState& s);

enum class ScheduleKind { Constant, WarmupPolyDecay };

struct Schedule {
  ScheduleKind kind = ScheduleKind::Constant;
  std::int64_t warmup_steps = 0;
  int power = 1;
  bool weight_norm_scaling = false;
  double norm_floor = 1e-3;

  bool operator==(const Schedule&) const = default;
};

/// Learning rate at (possibly fractional) step t of a T-step horizon.
/// Warmup: base·t/warmup_steps for t ≤ warmup_steps; decay:
/// base·((T − t)/(T − warmup_steps))^power afterwards, which is the familiar
/// base·(1 − t/T)^power when there is no warmup and meets the ramp
/// continuously. With weight_norm_scaling the rate is multiplied by
/// max(w_layer_norm, norm_floor).
double apply_schedule(const Schedule& sch, double t, double T, double base_eta,
                      std::optional<double> w_layer_norm = std::nullopt);

struct LayerPartition {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;  // half-open [begin, end)
  std::vector<double> lr_scale;                             // one per range

  /// Throws PartitionMismatch unless the ranges are disjoint, non-empty and
  /// cover [0, dim).
  void validate(std::size_t dim) const;
  static LayerPartition whole(std::size_t dim);

  bool operator==(const LayerPartition&) const = default;
};

struct LayerwiseOutcome {
  NigtState state;
  std::vector<bool> layer_moved;
};

/// NIGT with a single global momentum vector and blockwise normalization:
/// block k moves by layer_eta[k] along −m_k/‖m_k‖. Singular blocks stay put.
LayerwiseOutcome layerwise_step(const NigtState& s, const LayerPartition& partition,
                                const StochasticProblem& oracle, RngStream& rng,
                                std::span<const double> layer_eta, double beta);

/// First layerwise step: m_1 sampled at w1, then blockwise normalized move.
LayerwiseOutcome layerwise_init(const DenseVector& w1, const LayerPartition& partition,
                                const StochasticProblem& oracle, RngStream& rng,
                                std::span<const double> layer_eta);

/// w − η·grad.
DenseVector sgd_step(const DenseVector& w, const DenseVector& grad, double eta);

struct HeavyBallState {
  DenseVector w;
  DenseVector m;
};

/// m' = β·m + (1−β)·grad, w' = w − η·m'.
HeavyBallState heavy_ball_step(const HeavyBallState& s, const DenseVector& grad, double eta,
                               double beta);

}  // namespace nigt

#endif  // NIGT_OPTIMIZERS_HPP
