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

#include "nigt/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nigt::tuning {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Product of powers Π x_i^{k_i/7} for positive x_i.
double sevenths(std::initializer_list<std::pair<double, double>> factors) {
  double log_sum = 0.0;
  for (const auto& [x, k] : factors) log_sum += std::log(x) * k / 7.0;
  return std::exp(log_sum);
}

void validate(double R, double L, double sigma, std::int64_t T) {
  if (!(R > 0.0) || !std::isfinite(R)) throw InvalidArgument("R must be positive");
  if (!(L > 0.0) || !std::isfinite(L)) throw InvalidArgument("L must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be >= 0");
  if (T < 1) throw InvalidArgument("T must be >= 1");
}

void validate_rho(double rho) {
  if (!(rho >= 0.0) || std::isnan(rho)) throw InvalidArgument("rho must be >= 0");
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Thm1: return "theorem1";
    case Provenance::Thm2: return "theorem2";
    case Provenance::Manual: return "manual";
  }
  return "manual";
}

TheoremParams theorem1_params(double R, double L, double sigma, std::int64_t T) {
  validate(R, L, sigma, T);
  const double Td = static_cast<double>(T);
  const double raw = sigma > 0.0 ? std::sqrt(R * L) / (sigma * std::sqrt(Td)) : kInf;
  TheoremParams p;
  p.alpha = std::min(raw, 1.0);
  p.eta = std::sqrt(R * p.alpha) / std::sqrt(Td * L);
  p.provenance = Provenance::Thm1;
  return p;
}

double theorem1_bound(double R, double L, double sigma, std::int64_t T) {
  validate(R, L, sigma, T);
  const double Td = static_cast<double>(T);
  const double rl = R * L;
  return 29.0 * std::sqrt(rl) / std::sqrt(Td) +
         21.0 * std::sqrt(sigma) * std::sqrt(std::sqrt(rl)) / std::sqrt(std::sqrt(Td)) +
         8.0 * sigma / std::sqrt(rl * Td);
}

TheoremParams theorem2_params(double R, double L, double rho, double sigma, std::int64_t T) {
  validate(R, L, sigma, T);
  validate_rho(rho);
  const double Td = static_cast<double>(T);
  const bool noisy = sigma > 0.0 && rho > 0.0 && std::isfinite(rho);
  const double eta_first =
      noisy ? sevenths({{R, 5.0}, {Td, -5.0}, {rho, -1.0}, {sigma, -4.0}}) : kInf;
  TheoremParams p;
  p.eta = std::min(eta_first, std::sqrt(R / (Td * L)));
  double alpha_raw = kInf;
  if (sigma > 0.0) {
    if (std::isinf(rho)) {
      alpha_raw = kInf;
    } else if (rho > 0.0) {
      alpha_raw = sevenths({{R, 4.0}, {rho, 2.0}, {Td, -4.0}, {sigma, -6.0}});
    } else {
      alpha_raw = 0.0;
    }
  }
  p.alpha = std::min(alpha_raw, 1.0);
  if (!(p.alpha > 0.0)) {
    // ρ = 0 with σ > 0 sends α to 0, which the algorithm cannot use.
    throw InvalidArgument("theorem2_params: rho = 0 with sigma > 0 gives alpha = 0");
  }
  p.provenance = Provenance::Thm2;
  return p;
}

double theorem2_bound(double R, double L, double rho, double sigma, std::int64_t T) {
  validate(R, L, sigma, T);
  validate_rho(rho);
  const double Td = static_cast<double>(T);
  double bound = 5.0 * std::sqrt(R * L) / std::sqrt(Td);
  if (sigma > 0.0) {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
      throw InvalidArgument("theorem2_bound: sigma > 0 requires finite rho > 0");
    }
    bound += 8.0 * sevenths({{sigma, 13.0}, {R, -4.0}, {rho, -2.0}, {Td, -3.0}});
    bound += 27.0 * sevenths({{R, 2.0}, {rho, 1.0}, {sigma, 4.0}, {Td, -2.0}});
  }
  return bound;
}

}  // namespace nigt::tuning
