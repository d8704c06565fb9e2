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

#include "nigt/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nigt {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_finite_grad(const DenseVector& g) {
  if (!g.all_finite()) throw NonFiniteGradient("oracle returned a non-finite gradient");
}

void require_beta(double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw InvalidArgument("momentum parameter beta must lie in [0, 1)");
  }
}

/// Moves the block [begin, end) of w by −eta·m_block/‖m_block‖. Returns false
/// (and leaves w alone) when the block norm is at or below the floor.
bool normalized_block_move(DenseVector& w, const DenseVector& m, double eta, std::size_t begin,
                           std::size_t end) {
  const double n = m.block_norm(begin, end);
  if (!(n > kNormalizationFloor)) return false;
  for (std::size_t i = begin; i < end; ++i) w[i] -= eta * (m[i] / n);
  return true;
}

DenseVector blend(double beta, const DenseVector& m, double one_minus_beta, const DenseVector& g) {
  std::vector<double> out(m.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = beta * m[i] + one_minus_beta * g[i];
  DenseVector r(std::move(out));
  if (!r.all_finite()) throw NonFiniteValue("momentum update produced a non-finite value");
  return r;
}

/// 𝔤²((t+1)^{1/4} − t^{1/4}) without cancellation.
double quarter_power_drift(double g_bound, double t) {
  const double a = std::sqrt(std::sqrt(t + 1.0));
  const double b = std::sqrt(std::sqrt(t));
  return g_bound * g_bound / ((a * a + b * b) * (a + b));
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

NsgdmState nsgdm_init(const DenseVector& w1, const DenseVector& first_grad, double eta) {
  require_finite_grad(first_grad);
  if (first_grad.dim() != w1.dim()) throw DimensionMismatch("nsgdm_init: gradient dimension");
  NsgdmState s{w1, first_grad, 1, true};
  s.moved = normalized_block_move(s.w, s.m, eta, 0, s.w.dim());
  s.t = 2;
  return s;
}

NsgdmState nsgdm_step(const NsgdmState& s, const DenseVector& grad, double eta, double beta) {
  require_finite_grad(grad);
  require_beta(beta);
  if (grad.dim() != s.w.dim() || s.m.dim() != s.w.dim()) {
    throw DimensionMismatch("nsgdm_step: state/gradient dimension mismatch");
  }
  NsgdmState next;
  next.m = blend(beta, s.m, 1.0 - beta, grad);
  next.w = s.w;
  next.moved = normalized_block_move(next.w, next.m, eta, 0, next.w.dim());
  next.t = s.t + 1;
  return next;
}

DenseVector normalized_sgd_step(const DenseVector& w, const DenseVector& grad, double eta,
                                bool* moved) {
  require_finite_grad(grad);
  if (grad.dim() != w.dim()) throw DimensionMismatch("normalized_sgd_step: dimension");
  DenseVector out = w;
  const bool mv = normalized_block_move(out, grad, eta, 0, out.dim());
  if (moved) *moved = mv;
  return out;
}

DenseVector igt_extrapolate(const DenseVector& w, const DenseVector& w_prev, double beta) {
  if (!(beta < 1.0)) throw InvalidArgument("igt_extrapolate: beta must be < 1");
  return axpy(beta / (1.0 - beta), w - w_prev, w);
}

NigtState nigt_init(const DenseVector& w1, const StochasticProblem& oracle, RngStream& rng,
                    double eta) {
  NigtState s;
  s.last_x = w1;
  s.last_grad = oracle.sample_grad(w1, rng);
  require_finite_grad(s.last_grad);
  s.m = s.last_grad;
  s.w_prev = w1;
  s.w = w1;
  s.moved = normalized_block_move(s.w, s.m, eta, 0, s.w.dim());
  s.t = 2;
  return s;
}

NigtState nigt_step(const NigtState& s, const StochasticProblem& oracle, RngStream& rng,
                    double eta, double beta) {
  require_beta(beta);
  NigtState next;
  next.last_x = igt_extrapolate(s.w, s.w_prev, beta);
  next.last_grad = oracle.sample_grad(next.last_x, rng);
  require_finite_grad(next.last_grad);
  next.m = blend(beta, s.m, 1.0 - beta, next.last_grad);
  next.w_prev = s.w;
  next.w = s.w;
  next.moved = normalized_block_move(next.w, next.m, eta, 0, next.w.dim());
  next.t = s.t + 1;
  return next;
}

AdaptiveConstants adaptive_constants(double g_bound) {
  if (!(g_bound > 0.0) || !std::isfinite(g_bound)) {
    throw InvalidGBound("adaptive: gradient bound must be positive and finite");
  }
  AdaptiveConstants k;
  const double log_g = std::log(g_bound);
  // C = (7/26)^{1/2}·𝔤^{-3/7}
  k.C = std::exp(0.5 * std::log(7.0 / 26.0) - 3.0 * log_g / 7.0);
  const double log_c = std::log(k.C);
  k.D = std::exp(-14.0 * log_c / 3.0);
  k.G1 = 3.0 * g_bound * g_bound + k.D;
  k.eta0 = k.C * std::exp(-2.0 * std::log(k.D) / 7.0);
  return k;
}

AdaptiveState adaptive_init_with_g0_scale(const DenseVector& w1, double g_bound,
                                          double g0_scale) {
  const AdaptiveConstants k = adaptive_constants(g_bound);
  AdaptiveState s;
  s.w = w1;
  s.w_prev = w1;
  s.m = DenseVector(w1.dim());
  s.G = k.G1;
  s.G_prev = g0_scale * k.D;
  s.eta_prev = k.eta0;
  s.t = 1;
  s.C = k.C;
  s.D = k.D;
  s.g_bound = g_bound;
  return s;
}

AdaptiveState adaptive_init(const DenseVector& w1, double g_bound) {
  return adaptive_init_with_g0_scale(w1, g_bound, 1.0);
}

AdaptiveState adaptive_step(const AdaptiveState& s, const StochasticProblem& oracle,
                            RngStream& rng, RngStream& rng_prime) {
  const double t = static_cast<double>(s.t);
  const double gg = s.g_bound * s.g_bound;

  AdaptiveState next = s;
  next.violations.clear();
  auto violate = [&](const std::string& what) { next.violations.push_back(what); };

  // η_t = C/(G_t²(t+1)³)^{1/7}
  const double eta = s.C * std::exp(-(2.0 * std::log(s.G) + 3.0 * std::log(t + 1.0)) / 7.0);
  // α_t = 1/(t·η_{t−1}²·G_{t−1})
  const double alpha = 1.0 / (t * s.eta_prev * s.eta_prev * s.G_prev);
  const double beta = 1.0 - alpha;

  if (!(alpha > 0.0) || alpha > 1.0 + 8.0 * kEps) violate("alpha_t = " + fmt(alpha) + " > 1");
  if (eta > s.eta_prev) {
    violate("eta_t = " + fmt(eta) + " exceeds eta_{t-1} = " + fmt(s.eta_prev));
  }
  if (s.G < gg * std::sqrt(std::sqrt(t))) violate("G_t = " + fmt(s.G) + " < g^2 t^{1/4}");

  next.last_x = igt_extrapolate(s.w, s.w_prev, beta);
  next.last_grad = oracle.sample_grad(next.last_x, rng);
  const DenseVector second = oracle.sample_grad(next.last_x, rng_prime);
  require_finite_grad(next.last_grad);
  require_finite_grad(second);

  next.m = blend(beta, s.m, alpha, next.last_grad);

  const double drift = quarter_power_drift(s.g_bound, t);
  const double delta = (next.last_grad - second).squared_norm() + drift;
  const double G_next = s.G + delta;
  if (!(G_next >= s.G)) violate("G decreased from " + fmt(s.G) + " to " + fmt(G_next));
  if (delta < drift || delta > (4.0 * gg + drift) * (1.0 + 4.0 * kEps)) {
    violate("G increment " + fmt(delta) + " outside [" + fmt(drift) + ", " +
            fmt(4.0 * gg + drift) + "]");
  }

  next.w_prev = s.w;
  next.w = s.w;
  next.moved = normalized_block_move(next.w, next.m, eta, 0, next.w.dim());
  next.G_prev = s.G;
  next.G = G_next;
  next.eta_prev = eta;
  next.t = s.t + 1;
  next.last_eta = eta;
  next.last_alpha = alpha;
  next.last_delta = delta;
  next.last_drift = drift;
  return next;
}

void require_invariants(const AdaptiveState& s) {
  if (s.violations.empty()) return;
  std::string msg = "adaptive step " + std::to_string(s.t - 1) + ":";
  for (const auto& v : s.violations) msg += " " + v + ";";
  throw InvariantViolation(msg);
}

double apply_schedule(const Schedule& sch, double t, double T, double base_eta,
                      std::optional<double> w_layer_norm) {
  if (!(t >= 0.0) || !(t <= T)) throw InvalidArgument("apply_schedule: t outside [0, T]");
  double eta = base_eta;
  if (sch.kind == ScheduleKind::WarmupPolyDecay) {
    if (sch.power < 1) throw InvalidArgument("apply_schedule: power must be >= 1");
    const double warm = static_cast<double>(sch.warmup_steps);
    if (!(warm < T)) throw InvalidArgument("apply_schedule: warmup must be shorter than T");
    if (warm > 0.0 && t <= warm) {
      eta = base_eta * t / warm;
    } else {
      eta = base_eta * std::pow((T - t) / (T - warm), sch.power);
    }
  }
  if (sch.weight_norm_scaling) {
    eta *= std::max(w_layer_norm.value_or(0.0), sch.norm_floor);
  }
  return eta;
}

void LayerPartition::validate(std::size_t dim) const {
  if (ranges.empty()) throw PartitionMismatch("partition has no ranges");
  if (!lr_scale.empty() && lr_scale.size() != ranges.size()) {
    throw PartitionMismatch("lr_scale must have one entry per range");
  }
  std::vector<std::pair<std::size_t, std::size_t>> sorted = ranges;
  std::sort(sorted.begin(), sorted.end());
  std::size_t expect = 0;
  for (const auto& [b, e] : sorted) {
    if (b >= e) throw PartitionMismatch("empty or reversed range");
    if (b != expect) throw PartitionMismatch("ranges overlap or leave a gap");
    expect = e;
  }
  if (expect != dim) {
    throw PartitionMismatch("ranges cover [0, " + std::to_string(expect) + ") but dimension is " +
                            std::to_string(dim));
  }
}

LayerPartition LayerPartition::whole(std::size_t dim) { return {{{0, dim}}, {1.0}}; }

namespace {

std::vector<bool> move_layers(DenseVector& w, const DenseVector& m, const LayerPartition& part,
                              std::span<const double> layer_eta) {
  std::vector<bool> moved(part.ranges.size());
  for (std::size_t k = 0; k < part.ranges.size(); ++k) {
    moved[k] =
        normalized_block_move(w, m, layer_eta[k], part.ranges[k].first, part.ranges[k].second);
  }
  return moved;
}

}  // namespace

LayerwiseOutcome layerwise_init(const DenseVector& w1, const LayerPartition& partition,
                                const StochasticProblem& oracle, RngStream& rng,
                                std::span<const double> layer_eta) {
  partition.validate(w1.dim());
  if (layer_eta.size() != partition.ranges.size()) {
    throw PartitionMismatch("one learning rate per layer required");
  }
  LayerwiseOutcome out;
  NigtState& s = out.state;
  s.last_x = w1;
  s.last_grad = oracle.sample_grad(w1, rng);
  require_finite_grad(s.last_grad);
  s.m = s.last_grad;
  s.w_prev = w1;
  s.w = w1;
  out.layer_moved = move_layers(s.w, s.m, partition, layer_eta);
  s.moved = std::any_of(out.layer_moved.begin(), out.layer_moved.end(), [](bool b) { return b; });
  s.t = 2;
  return out;
}

LayerwiseOutcome layerwise_step(const NigtState& s, const LayerPartition& partition,
                                const StochasticProblem& oracle, RngStream& rng,
                                std::span<const double> layer_eta, double beta) {
  require_beta(beta);
  partition.validate(s.w.dim());
  if (layer_eta.size() != partition.ranges.size()) {
    throw PartitionMismatch("one learning rate per layer required");
  }
  LayerwiseOutcome out;
  NigtState& next = out.state;
  next.last_x = igt_extrapolate(s.w, s.w_prev, beta);
  next.last_grad = oracle.sample_grad(next.last_x, rng);
  require_finite_grad(next.last_grad);
  next.m = blend(beta, s.m, 1.0 - beta, next.last_grad);
  next.w_prev = s.w;
  next.w = s.w;
  out.layer_moved = move_layers(next.w, next.m, partition, layer_eta);
  next.moved =
      std::any_of(out.layer_moved.begin(), out.layer_moved.end(), [](bool b) { return b; });
  next.t = s.t + 1;
  return out;
}

DenseVector sgd_step(const DenseVector& w, const DenseVector& grad, double eta) {
  require_finite_grad(grad);
  return axpy(-eta, grad, w);
}

HeavyBallState heavy_ball_step(const HeavyBallState& s, const DenseVector& grad, double eta,
                               double beta) {
  require_finite_grad(grad);
  require_beta(beta);
  HeavyBallState next;
  next.m = blend(beta, s.m, 1.0 - beta, grad);
  next.w = axpy(-eta, next.m, s.w);
  return next;
}

}  // namespace nigt
