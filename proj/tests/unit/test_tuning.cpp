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

#include <cmath>

#include "nigt/tuning.hpp"

namespace tu = nigt::tuning;

TEST_CASE("first-order parameters") {
  const auto p = tu::theorem1_params(1, 1, 1, 100);
  CHECK(p.alpha == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(p.eta == doctest::Approx(std::sqrt(0.1) / 10.0).epsilon(1e-15));
  CHECK(p.eta == doctest::Approx(0.0316228).epsilon(1e-6));
  CHECK(p.provenance == tu::Provenance::Thm1);

  const auto clamped = tu::theorem1_params(2, 3, 0, 50);
  CHECK(clamped.alpha == 1.0);
  CHECK(clamped.eta == doctest::Approx(std::sqrt(2.0 / (50 * 3.0))));

  const auto hand = tu::theorem1_params(4, 1, 1, 4);
  CHECK(hand.alpha == 1.0);
  CHECK(hand.eta == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("first-order bound") {
  CHECK(tu::theorem1_bound(1, 1, 0, 100) == doctest::Approx(2.9).epsilon(1e-15));
  CHECK(tu::theorem1_bound(1, 1, 1, 10000) == doctest::Approx(2.47).epsilon(1e-14));
  for (double sigma : {0.0, 0.3, 2.0}) {
    double prev = INFINITY;
    for (std::int64_t T = 1; T <= 1 << 20; T *= 2) {
      const double b = tu::theorem1_bound(2.0, 0.5, sigma, T);
      CHECK(b < prev);
      prev = b;
    }
  }
}

TEST_CASE("second-order parameters") {
  CHECK(tu::theorem2_params(3, 2, 5, 0, 40).alpha == 1.0);
  CHECK(tu::theorem2_params(3, 2, 5, 0, 40).eta == doctest::Approx(std::sqrt(3.0 / 80.0)));
  const auto p = tu::theorem2_params(1, 1, 1, 1, 128);
  CHECK(p.eta == doctest::Approx(0.03125).epsilon(1e-14));
  CHECK(p.alpha == doctest::Approx(0.0625).epsilon(1e-14));
  CHECK(p.provenance == tu::Provenance::Thm2);

  // Defining identity of the unclamped momentum weight, across a parameter grid.
  for (double R : {0.5, 2.0})
    for (double rho : {0.1, 1.0, 8.0})
      for (double sigma : {0.5, 3.0})
        for (std::int64_t T : {1000, 100000}) {
          const auto q = tu::theorem2_params(R, 1.0, rho, sigma, T);
          if (q.alpha >= 1.0) continue;
          const double id = q.alpha * std::pow(T, 4.0 / 7) * std::pow(sigma, 6.0 / 7) /
                            (std::pow(R, 4.0 / 7) * std::pow(rho, 2.0 / 7));
          CHECK(id == doctest::Approx(1.0).epsilon(1e-12));
        }
  CHECK_THROWS_AS(tu::theorem2_params(1, 1, 0, 1, 100), nigt::InvalidArgument);
}

TEST_CASE("second-order bound") {
  CHECK(tu::theorem2_bound(1, 1, 0, 0, 25) == doctest::Approx(1.0).epsilon(1e-15));
  const double expect = 5.0 * std::pow(2.0, -3.5) + 8.0 / 8.0 + 27.0 / 4.0;
  CHECK(tu::theorem2_bound(1, 1, 1, 1, 128) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(tu::theorem2_bound(1, 1, 1, 1, 128) == doctest::Approx(8.19).epsilon(1e-3));
  const double ratio = tu::theorem2_bound(1, 1, 1, 1, static_cast<std::int64_t>(1e15)) /
                       tu::theorem2_bound(1, 1, 1, 1, static_cast<std::int64_t>(128e15));
  CHECK(ratio == doctest::Approx(std::pow(128.0, 2.0 / 7)).epsilon(1e-2));
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(tu::theorem1_params(0, 1, 1, 10), nigt::InvalidArgument);
  CHECK_THROWS_AS(tu::theorem1_params(1, -1, 1, 10), nigt::InvalidArgument);
  CHECK_THROWS_AS(tu::theorem1_params(1, 1, 1, 0), nigt::InvalidArgument);
  CHECK_THROWS_AS(tu::theorem2_bound(1, 1, 0, 1, 10), nigt::InvalidArgument);
  CHECK_THROWS_AS(tu::theorem1_bound(1, 1, -1, 10), nigt::InvalidArgument);
}
