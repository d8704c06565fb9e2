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

#include "nigt/problems.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nigt {

namespace {

std::string fmt_num(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

void require_positive_spectrum(const std::vector<double>& eigs, const char* what) {
  if (eigs.empty()) throw InvalidSpectrum(std::string(what) + ": empty spectrum");
  for (double e : eigs) {
    if (!(e > 0.0) || !std::isfinite(e)) {
      throw InvalidSpectrum(std::string(what) + ": eigenvalue " + fmt_num(e) + " is not > 0");
    }
  }
}

DenseVector vector_or_fill(const std::vector<double>& v, std::size_t d, double fill,
                           const char* what) {
  if (v.empty()) return DenseVector(d, fill);
  if (v.size() != d) {
    throw DimensionMismatch(std::string(what) + " has " + std::to_string(v.size()) +
                            " entries, expected " + std::to_string(d));
  }
  return DenseVector(v);
}

}  // namespace

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::NoisyQuadratic: return "noisy_quadratic";
    case ProblemKind::SignNoise: return "sign_noise";
    case ProblemKind::TrigBowl: return "trig_bowl";
    case ProblemKind::StreamingLeastSquares: return "streaming_least_squares";
  }
  return "unknown";
}

std::optional<ProblemKind> parse_problem_kind(std::string_view name) {
  for (auto k : {ProblemKind::NoisyQuadratic, ProblemKind::SignNoise, ProblemKind::TrigBowl,
                 ProblemKind::StreamingLeastSquares}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string StochasticProblem::id() const {
  std::ostringstream os;
  os << to_string(spec_.kind) << "(d=" << dim();
  switch (spec_.kind) {
    case ProblemKind::NoisyQuadratic: os << ",sigma=" << spec_.sigma; break;
    case ProblemKind::SignNoise: os << ",p=" << spec_.p; break;
    case ProblemKind::TrigBowl:
      os << ",a=" << spec_.a << ",b=" << spec_.b << ",sigma=" << spec_.sigma;
      break;
    case ProblemKind::StreamingLeastSquares: os << ",label_noise=" << spec_.label_noise; break;
  }
  os << ")";
  return os.str();
}

void StochasticProblem::check_dim(const DenseVector& w) const {
  if (w.dim() != dim()) {
    throw DimensionMismatch("problem of dimension " + std::to_string(dim()) +
                            " queried at a point of dimension " + std::to_string(w.dim()));
  }
}

double StochasticProblem::exact_value(const DenseVector& w) const {
  if (!exact_available_) throw MissingExactOracle(id() + ": exact F unavailable");
  check_dim(w);
  double f = 0.0;
  switch (spec_.kind) {
    case ProblemKind::NoisyQuadratic:
      for (std::size_t i = 0; i < dim(); ++i) f += 0.5 * spec_.eigs[i] * w[i] * w[i];
      return f;
    case ProblemKind::SignNoise:
      return 1.0;
    case ProblemKind::TrigBowl:
      for (std::size_t i = 0; i < dim(); ++i) f += spec_.a * (1.0 - std::cos(spec_.b * w[i]));
      return f;
    case ProblemKind::StreamingLeastSquares:
      for (std::size_t i = 0; i < dim(); ++i) {
        const double u = w[i] - w_star_[i];
        f += 0.5 * spec_.eigs[i] * u * u;
      }
      return f + 0.5 * spec_.label_noise * spec_.label_noise;
  }
  return f;
}

DenseVector StochasticProblem::exact_grad(const DenseVector& w) const {
  if (!exact_available_) throw MissingExactOracle(id() + ": exact gradient unavailable");
  check_dim(w);
  DenseVector g(dim());
  switch (spec_.kind) {
    case ProblemKind::NoisyQuadratic:
      for (std::size_t i = 0; i < dim(); ++i) g[i] = spec_.eigs[i] * w[i];
      break;
    case ProblemKind::SignNoise:
      break;
    case ProblemKind::TrigBowl:
      for (std::size_t i = 0; i < dim(); ++i) g[i] = spec_.a * spec_.b * std::sin(spec_.b * w[i]);
      break;
    case ProblemKind::StreamingLeastSquares:
      for (std::size_t i = 0; i < dim(); ++i) g[i] = spec_.eigs[i] * (w[i] - w_star_[i]);
      break;
  }
  return g;
}

DenseVector StochasticProblem::sample_grad(const DenseVector& w, RngStream& rng) const {
  check_dim(w);
  const std::size_t d = dim();
  switch (spec_.kind) {
    case ProblemKind::NoisyQuadratic: {
      DenseVector g(d);
      for (std::size_t i = 0; i < d; ++i) g[i] = spec_.eigs[i] * w[i];
      const DenseVector z = gaussian_noise(rng, d, spec_.sigma);
      for (std::size_t i = 0; i < d; ++i) g[i] += z[i];
      return g;
    }
    case ProblemKind::SignNoise: {
      const double p = spec_.p;
      return DenseVector{rng.uniform() < p ? p - 1.0 : p};
    }
    case ProblemKind::TrigBowl: {
      DenseVector g(d);
      for (std::size_t i = 0; i < d; ++i) g[i] = spec_.a * spec_.b * std::sin(spec_.b * w[i]);
      const DenseVector z = bounded_uniform_noise(rng, d, spec_.sigma);
      for (std::size_t i = 0; i < d; ++i) g[i] += z[i];
      return g;
    }
    case ProblemKind::StreamingLeastSquares: {
      std::vector<double> x(d);
      double residual = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        x[i] = std::sqrt(spec_.eigs[i]) * rng.normal();
        residual += x[i] * (w[i] - w_star_[i]);
      }
      residual -= spec_.label_noise * rng.normal();
      DenseVector g(d);
      for (std::size_t i = 0; i < d; ++i) g[i] = x[i] * residual;
      return g;
    }
  }
  return DenseVector(d);
}

StochasticProblem StochasticProblem::oracle_only() const {
  StochasticProblem copy = *this;
  copy.exact_available_ = false;
  return copy;
}

StochasticProblem make_problem(const ProblemSpec& spec_in) {
  StochasticProblem prob;
  ProblemSpec spec = spec_in;
  ProblemConstants c;
  switch (spec.kind) {
    case ProblemKind::NoisyQuadratic: {
      require_positive_spectrum(spec.eigs, "noisy_quadratic");
      if (spec.dim != 0 && spec.dim != spec.eigs.size()) {
        throw InvalidSpectrum("noisy_quadratic: dim " + std::to_string(spec.dim) + " but " +
                              std::to_string(spec.eigs.size()) + " eigenvalues");
      }
      if (!(spec.sigma >= 0.0)) throw InvalidProblem("noisy_quadratic: sigma must be >= 0");
      spec.dim = spec.eigs.size();
      prob.w1_ = vector_or_fill(spec.w1, spec.dim, 1.0, "w1");
      c.L = *std::max_element(spec.eigs.begin(), spec.eigs.end());
      c.rho = 0.0;
      c.sigma = spec.sigma;
      break;
    }
    case ProblemKind::SignNoise: {
      if (!(spec.p > 0.0 && spec.p < 0.5)) {
        throw InvalidProbability("sign_noise: p = " + fmt_num(spec.p) + " is outside (0, 1/2)");
      }
      spec.dim = 1;
      prob.w1_ = vector_or_fill(spec.w1, 1, 0.0, "w1");
      c.L = 0.0;
      c.rho = 0.0;
      c.sigma = std::sqrt(spec.p * (1.0 - spec.p));
      c.g_bound = std::max(spec.p, 1.0 - spec.p);
      c.M = 1.0;
      break;
    }
    case ProblemKind::TrigBowl: {
      if (spec.dim == 0) throw InvalidProblem("trig_bowl: dim must be >= 1");
      if (!(spec.a > 0.0) || !(spec.b > 0.0)) throw InvalidProblem("trig_bowl: a, b must be > 0");
      if (!(spec.sigma >= 0.0)) throw InvalidProblem("trig_bowl: sigma must be >= 0");
      prob.w1_ = vector_or_fill(spec.w1, spec.dim, 1.0, "w1");
      const double d = static_cast<double>(spec.dim);
      c.L = spec.a * spec.b * spec.b;
      c.rho = spec.a * spec.b * spec.b * spec.b;
      c.sigma = spec.sigma;
      c.g_bound = spec.a * spec.b * std::sqrt(d) + std::sqrt(3.0) * spec.sigma;
      c.M = 2.0 * spec.a * d;
      break;
    }
    case ProblemKind::StreamingLeastSquares: {
      require_positive_spectrum(spec.eigs, "streaming_least_squares");
      if (spec.dim != 0 && spec.dim != spec.eigs.size()) {
        throw InvalidSpectrum("streaming_least_squares: dim does not match covariance");
      }
      if (!(spec.label_noise >= 0.0)) throw InvalidProblem("label_noise must be >= 0");
      spec.dim = spec.eigs.size();
      prob.w1_ = vector_or_fill(spec.w1, spec.dim, 1.0, "w1");
      prob.w_star_ = vector_or_fill(spec.w_star, spec.dim, 0.0, "w_star");
      c.L = *std::max_element(spec.eigs.begin(), spec.eigs.end());
      c.rho = 0.0;
      // Gaussian fourth moments give, with u = w1 − w*,
      // E‖∇f − ∇F‖² = (uᵀΣu)·tr Σ + ‖Σu‖² + label_noise²·tr Σ.
      double trace = 0.0, quad = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < spec.dim; ++i) {
        const double u = prob.w1_[i] - prob.w_star_[i];
        trace += spec.eigs[i];
        quad += spec.eigs[i] * u * u;
        sq += spec.eigs[i] * spec.eigs[i] * u * u;
      }
      c.sigma = std::sqrt(quad * trace + sq + spec.label_noise * spec.label_noise * trace);
      break;
    }
  }
  if (!prob.w1_.all_finite()) throw InvalidProblem("w1 is not finite");
  if (prob.w_star_.empty()) prob.w_star_ = DenseVector(spec.dim);
  spec.w1 = prob.w1_.raw();
  prob.spec_ = spec;
  prob.constants_ = c;
  prob.constants_.R = prob.exact_value(prob.w1_);

  auto& k = prob.constants_;
  if (spec.L_override) k.L = *spec.L_override;
  if (spec.rho_override) k.rho = *spec.rho_override;
  if (spec.sigma_override) k.sigma = *spec.sigma_override;
  if (spec.g_bound_override) k.g_bound = *spec.g_bound_override;
  if (spec.R_override) k.R = *spec.R_override;
  if (spec.M_override) k.M = *spec.M_override;
  return prob;
}

StochasticProblem make_noisy_quadratic(std::vector<double> eigs, double sigma,
                                       std::vector<double> w1) {
  ProblemSpec s;
  s.kind = ProblemKind::NoisyQuadratic;
  s.eigs = std::move(eigs);
  s.sigma = sigma;
  s.w1 = std::move(w1);
  return make_problem(s);
}

StochasticProblem make_sign_noise(double p, std::vector<double> w1) {
  ProblemSpec s;
  s.kind = ProblemKind::SignNoise;
  s.p = p;
  s.w1 = std::move(w1);
  return make_problem(s);
}

StochasticProblem make_trig_bowl(std::size_t d, double a, double b, double sigma,
                                 std::vector<double> w1) {
  ProblemSpec s;
  s.kind = ProblemKind::TrigBowl;
  s.dim = d;
  s.a = a;
  s.b = b;
  s.sigma = sigma;
  s.w1 = std::move(w1);
  return make_problem(s);
}

StochasticProblem make_streaming_least_squares(std::vector<double> cov_eigs, double label_noise,
                                               std::vector<double> w_star,
                                               std::vector<double> w1) {
  ProblemSpec s;
  s.kind = ProblemKind::StreamingLeastSquares;
  s.eigs = std::move(cov_eigs);
  s.label_noise = label_noise;
  s.w_star = std::move(w_star);
  s.w1 = std::move(w1);
  return make_problem(s);
}

double fd_step(const DenseVector& w) { return 1e-5 * (1.0 + w.norm()); }

DenseVector hessian_vector_product(const StochasticProblem& p, const DenseVector& b,
                                   const DenseVector& v) {
  const double vn = v.norm();
  if (vn == 0.0) return DenseVector(b.dim());
  const double h = fd_step(b);
  // Differentiate along the unit direction so h keeps its meaning as a
  // displacement, then rescale by ‖v‖.
  const DenseVector u = (1.0 / vn) * v;
  DenseVector hv = p.exact_grad(axpy(h, u, b)) - p.exact_grad(axpy(-h, u, b));
  hv *= vn / (2.0 * h);
  return hv;
}

DenseVector gradient_difference(const StochasticProblem& p, const DenseVector& a,
                                const DenseVector& b) {
  return p.exact_grad(a) - p.exact_grad(b);
}

DenseVector taylor_remainder(const StochasticProblem& p, const DenseVector& a,
                             const DenseVector& b) {
  if (a == b) return DenseVector(a.dim());
  return gradient_difference(p, a, b) - hessian_vector_product(p, b, a - b);
}

DenseVector sample_ball(const DenseVector& center, double radius, RngStream& rng) {
  const std::size_t d = center.dim();
  DenseVector dir = gaussian_noise(rng, d, 1.0);
  double n = dir.norm();
  while (n == 0.0) {
    dir = gaussian_noise(rng, d, 1.0);
    n = dir.norm();
  }
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
  return axpy(r / n, dir, center);
}

CertificationFailure::CertificationFailure(CertReport report)
    : Error([&] {
        std::string msg = "certification failed:";
        for (const auto& f : report.failures) msg += " " + f + ";";
        return msg;
      }()),
      report_(std::move(report)) {}

CertReport estimate_constants(const StochasticProblem& p, std::size_t n_pairs, double radius,
                              RngStream& rng, double tol, std::size_t noise_draws_per_point) {
  if (n_pairs < 100) throw InvalidArgument("certify: n_pairs must be >= 100");
  if (!(radius > 0.0)) throw InvalidArgument("certify: radius must be > 0");
  if (!p.has_exact()) throw MissingExactOracle(p.id() + ": certification needs exact gradients");

  CertReport rep;
  rep.tol = tol;
  rep.radius = radius;
  rep.n_pairs = n_pairs;
  rep.declared = p.constants();

  double max_h = 0.0;
  double noise_sq_sum = 0.0;
  std::size_t noise_count = 0;
  RngStream oracle_rng = rng.split(1);
  for (std::size_t k = 0; k < n_pairs; ++k) {
    const DenseVector a = sample_ball(p.w1(), radius, rng);
    const DenseVector b = sample_ball(p.w1(), radius, rng);
    const double dist = (a - b).norm();
    if (dist > 0.0) {
      rep.L_hat = std::max(rep.L_hat, gradient_difference(p, a, b).norm() / dist);
      rep.rho_hat = std::max(rep.rho_hat, taylor_remainder(p, a, b).norm() / (dist * dist));
    }
    max_h = std::max(max_h, fd_step(b));

    const DenseVector& at = p.noise_state_dependent() ? p.w1() : a;
    const DenseVector grad = p.exact_grad(at);
    for (std::size_t j = 0; j < noise_draws_per_point; ++j) {
      noise_sq_sum += (p.sample_grad(at, oracle_rng) - grad).squared_norm();
      ++noise_count;
    }
  }
  rep.n_noise_draws = noise_count;
  rep.sigma_hat = noise_count ? std::sqrt(noise_sq_sum / static_cast<double>(noise_count)) : 0.0;

  const auto& c = rep.declared;
  rep.fd_slack = fd_slack(max_h, c.rho);
  if (rep.L_hat > c.L * (1.0 + tol)) {
    rep.failures.push_back("L_hat " + fmt_num(rep.L_hat) + " exceeds declared L " + fmt_num(c.L));
  }
  if (rep.rho_hat > c.rho * (1.0 + tol) + rep.fd_slack) {
    rep.failures.push_back("rho_hat " + fmt_num(rep.rho_hat) + " exceeds declared rho " +
                           fmt_num(c.rho));
  }
  if (rep.sigma_hat < c.sigma * (1.0 - tol) || rep.sigma_hat > c.sigma * (1.0 + tol)) {
    rep.failures.push_back("sigma_hat " + fmt_num(rep.sigma_hat) + " outside tolerance of sigma " +
                           fmt_num(c.sigma));
  }
  rep.passed = rep.failures.empty();
  return rep;
}

CertReport certify_constants(const StochasticProblem& p, std::size_t n_pairs, double radius,
                             RngStream& rng, double tol) {
  CertReport rep = estimate_constants(p, n_pairs, radius, rng, tol);
  if (!rep.passed) throw CertificationFailure(std::move(rep));
  return rep;
}

}  // namespace nigt
