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

#ifndef NIGT_TUNING_HPP
#define NIGT_TUNING_HPP

#include <cstdint>
#include <string_view>

#include "nigt/core.hpp"

namespace nigt::tuning {

enum class Provenance { Thm1, Thm2, Manual };

std::string_view to_string(Provenance p);

/// Constant step size and momentum weight α (β = 1 − α).
struct TheoremParams {
  double alpha = 1.0;
  double eta = 0.0;
  Provenance provenance = Provenance::Manual;

  double beta() const noexcept { return 1.0 - alpha; }
};

// Zero σ or ρ push the affected branch of each min() to +∞ instead of
// dividing by zero. Fractional powers go through exp/log on validated
// positive inputs.

/// α = min(√(RL)/(σ√T), 1), η = √(Rα)/√(TL).
TheoremParams theorem1_params(double R, double L, double sigma, std::int64_t T);

/// 29√(RL)/√T + 21√σ(RL)^{1/4}/T^{1/4} + 8σ/√(RLT).
double theorem1_bound(double R, double L, double sigma, std::int64_t T);

/// η = min(R^{5/7}/(T^{5/7}ρ^{1/7}σ^{4/7}), √(R/(TL))),
/// α = min(R^{4/7}ρ^{2/7}/(T^{4/7}σ^{6/7}), 1).
TheoremParams theorem2_params(double R, double L, double rho, double sigma, std::int64_t T);

/// 5√(RL)/√T + 8σ^{13/7}/(R^{4/7}ρ^{2/7}T^{3/7}) + 27R^{2/7}ρ^{1/7}σ^{4/7}/T^{2/7}.
double theorem2_bound(double R, double L, double rho, double sigma, std::int64_t T);

}  // namespace nigt::tuning

#endif  // NIGT_TUNING_HPP
