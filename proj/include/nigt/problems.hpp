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

#ifndef NIGT_PROBLEMS_HPP
#define NIGT_PROBLEMS_HPP

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nigt/core.hpp"

namespace nigt {

class InvalidSpectrum : public Error {
 public:
  using Error::Error;
};

class InvalidProbability : public Error {
 public:
  using Error::Error;
};

class InvalidProblem : public Error {
 public:
  using Error::Error;
};

class MissingExactOracle : public Error {
 public:
  using Error::Error;
};

enum class ProblemKind { NoisyQuadratic, SignNoise, TrigBowl, StreamingLeastSquares };

std::string_view to_string(ProblemKind kind);
std::optional<ProblemKind> parse_problem_kind(std::string_view name);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Declared problem constants. Infinite values mean "no finite bound".
struct ProblemConstants {
  double L = 0.0;        // gradient Lipschitz constant
  double rho = 0.0;      // Hessian Lipschitz constant
  double sigma = 0.0;    // oracle noise, E‖∇f − ∇F‖² ≤ σ²
  double g_bound = kInf; // a.s. bound on ‖∇f‖
  double R = 0.0;        // upper bound on F(w1)
  double M = kInf;       // sup F

  bool operator==(const ProblemConstants&) const = default;
};

/// Serializable description of a problem. Only the fields relevant to
/// `kind` are read; the `*_override` fields replace the analytic constants
/// (used to build deliberately mis-declared fixtures).
struct ProblemSpec {
  ProblemKind kind = ProblemKind::NoisyQuadratic;
  std::size_t dim = 0;
  std::vector<double> eigs;      // quadratic Hessian or regression covariance
  double sigma = 0.0;
  double p = 0.25;               // sign noise
  double a = 1.0;                // trig bowl amplitude
  double b = 1.0;                // trig bowl frequency
  double label_noise = 0.0;      // least squares
  std::vector<double> w_star;    // least squares target, zeros when empty
  std::vector<double> w1;        // initial point, kind default when empty

  std::optional<double> L_override;
  std::optional<double> rho_override;
  std::optional<double> sigma_override;
  std::optional<double> g_bound_override;
  std::optional<double> R_override;
  std::optional<double> M_override;

  bool operator==(const ProblemSpec&) const = default;
};

/// A synthetic stochastic objective F(w) = E[f(w, ξ)] together with its
/// sampling oracle, closed-form F and ∇F, and certified constants.
class StochasticProblem {
 public:
  const ProblemSpec& spec() const noexcept { return spec_; }
  ProblemKind kind() const noexcept { return spec_.kind; }
  std::size_t dim() const noexcept { return w1_.dim(); }
  const DenseVector& w1() const noexcept { return w1_; }
  const ProblemConstants& constants() const noexcept { return constants_; }
  /// Short identifier such as "trig_bowl(d=4,a=1,b=1,sigma=0.5)".
  std::string id() const;

  /// True when the oracle noise depends on w; σ then holds only at w1.
  bool noise_state_dependent() const noexcept {
    return spec_.kind == ProblemKind::StreamingLeastSquares;
  }
  bool has_exact() const noexcept { return exact_available_; }

  double exact_value(const DenseVector& w) const;
  DenseVector exact_grad(const DenseVector& w) const;
  /// One draw of ∇f(w, ξ); consumes `rng` deterministically.
  DenseVector sample_grad(const DenseVector& w, RngStream& rng) const;

  /// Copy with the closed-form evaluators disabled, as for a black-box
  /// objective.
  StochasticProblem oracle_only() const;

 private:
  friend StochasticProblem make_problem(const ProblemSpec& spec);

  void check_dim(const DenseVector& w) const;

  ProblemSpec spec_;
  DenseVector w1_;
  DenseVector w_star_;
  ProblemConstants constants_;
  bool exact_available_ = true;
};

/// Builds a problem from its description, validating parameters and
/// deriving the analytic constants.
StochasticProblem make_problem(const ProblemSpec& spec);

/// F(w) = ½ Σ eigs_i w_i², oracle ∇F + Gaussian noise with E‖ζ‖² = σ².
StochasticProblem make_noisy_quadratic(std::vector<double> eigs, double sigma,
                                       std::vector<double> w1 = {});
/// One-dimensional F ≡ 1 whose oracle returns p w.p. 1−p and p−1 w.p. p.
StochasticProblem make_sign_noise(double p, std::vector<double> w1 = {});
/// F(w) = Σ a(1 − cos(b w_i)) with bounded uniform oracle noise.
StochasticProblem make_trig_bowl(std::size_t d, double a, double b, double sigma,
                                 std::vector<double> w1 = {});
/// f(w, (x, y)) = ½(⟨x, w⟩ − y)², x ~ N(0, diag(cov_eigs)),
/// y = ⟨x, w*⟩ + label_noise·N(0, 1).
StochasticProblem make_streaming_least_squares(std::vector<double> cov_eigs, double label_noise,
                                               std::vector<double> w_star = {},
                                               std::vector<double> w1 = {});

/// Central-difference step used for Hessian-vector products at w.
double fd_step(const DenseVector& w);

/// ∇²F(b)·v by central differences of the exact gradient.
DenseVector hessian_vector_product(const StochasticProblem& p, const DenseVector& b,
                                   const DenseVector& v);

/// S(a, b) = ∇F(a) − ∇F(b).
DenseVector gradient_difference(const StochasticProblem& p, const DenseVector& a,
                                const DenseVector& b);

/// Z(a, b) = ∇F(a) − ∇F(b) − ∇²F(b)(a − b), Hessian term by finite
/// differences. Exactly zero when a == b.
DenseVector taylor_remainder(const StochasticProblem& p, const DenseVector& a,
                             const DenseVector& b);

/// Truncation allowance for finite-difference ρ estimates at step h.
inline double fd_slack(double h, double rho) { return 10.0 * h * rho + 1e-6; }

struct CertReport {
  double L_hat = 0.0;
  double rho_hat = 0.0;
  double sigma_hat = 0.0;
  double fd_slack = 0.0;
  double tol = 0.05;
  double radius = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_noise_draws = 0;
  ProblemConstants declared;
  bool passed = false;
  std::vector<std::string> failures;
};

class CertificationFailure : public Error {
 public:
  explicit CertificationFailure(CertReport report);
  const CertReport& report() const noexcept { return report_; }

 private:
  CertReport report_;
};

/// Empirical estimates of L, ρ and σ. Pairs (a, b) are drawn uniformly in
/// the ball of `radius` around w1; σ is the RMS of ‖∇f − ∇F‖ over
/// n_pairs·noise_draws_per_point oracle calls (at w1 only when the noise is
/// state dependent). Never throws on a failed check; see `passed`.
CertReport estimate_constants(const StochasticProblem& p, std::size_t n_pairs, double radius,
                              RngStream& rng, double tol = 0.05,
                              std::size_t noise_draws_per_point = 100);

/// estimate_constants() followed by a check; throws CertificationFailure
/// carrying the report when any declared constant is violated.
CertReport certify_constants(const StochasticProblem& p, std::size_t n_pairs, double radius,
                             RngStream& rng, double tol = 0.05);

/// Uniform draw from the ball of `radius` around `center`.
DenseVector sample_ball(const DenseVector& center, double radius, RngStream& rng);

}  // namespace nigt

#endif  // NIGT_PROBLEMS_HPP
