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

#ifndef NIGT_CORE_HPP
#define NIGT_CORE_HPP

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nigt {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

/// Raised by normalize() when ‖v‖ ≤ floor. Optimizers catch it and turn the
/// step into a no-move.
class NormalizationSingularity : public Error {
 public:
  using Error::Error;
};

/// Dense real vector used for iterates, momenta and gradients.
///
/// Construction accepts any values so callers can inspect oracle output with
/// all_finite(); every arithmetic operation checks that its result is finite
/// and throws NonFiniteValue otherwise.
class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t dim, double fill = 0.0);
  explicit DenseVector(std::vector<double> values);
  DenseVector(std::initializer_list<double> values);

  std::size_t dim() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const std::vector<double>& raw() const noexcept { return data_; }

  /// Euclidean norm, computed with scaling so tiny and huge entries neither
  /// underflow nor overflow.
  double norm() const;
  double squared_norm() const;
  double dot(const DenseVector& other) const;
  bool all_finite() const noexcept;

  /// Norm restricted to the half-open index range [begin, end).
  double block_norm(std::size_t begin, std::size_t end) const;

  DenseVector& operator+=(const DenseVector& other);
  DenseVector& operator-=(const DenseVector& other);
  DenseVector& operator*=(double s);

  friend DenseVector operator+(DenseVector a, const DenseVector& b) { return a += b; }
  friend DenseVector operator-(DenseVector a, const DenseVector& b) { return a -= b; }
  friend DenseVector operator*(double s, DenseVector v) { return v *= s; }
  friend DenseVector operator*(DenseVector v, double s) { return v *= s; }

  bool operator==(const DenseVector&) const = default;

 private:
  void check_finite(const char* op) const;

  std::vector<double> data_;
};

/// Returns a·x + y.
DenseVector axpy(double a, const DenseVector& x, const DenseVector& y);

/// Returns v/‖v‖, or throws NormalizationSingularity when ‖v‖ ≤ floor.
DenseVector normalize(const DenseVector& v, double floor = 0.0);

/// Floor the optimizers pass to normalize(); keeps 1/‖v‖ finite for
/// subnormal norms.
inline constexpr double kNormalizationFloor = 1e-300;

/// Counter-based random stream. Output number k of stream (seed, stream_id)
/// is a pure function of the triple, so runs replay bit-for-bit and streams
/// with different ids are independent.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t draw_index() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Standard normal via Box-Muller; consumes two integer draws.
  double normal() noexcept;

  /// Independent stream derived from this one's seed and id.
  RngStream split(std::uint64_t child_id) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Isotropic Gaussian with E‖ζ‖² = sigma² (per-component std sigma/√d).
DenseVector gaussian_noise(RngStream& rng, std::size_t d, double sigma);

/// Per-component uniform noise with E‖ζ‖² = sigma² and ‖ζ‖ ≤ √3·sigma.
DenseVector bounded_uniform_noise(RngStream& rng, std::size_t d, double sigma);

struct StepLog {
  std::int64_t t = 0;
  double f_val = 0.0;
  double grad_norm = 0.0;
  double eta = 0.0;
  double alpha = 0.0;
  double m_norm = 0.0;
  std::optional<double> mhat_err;
  std::optional<double> lemma1_residual;
  bool no_move = false;
};

struct TrajectoryEvent {
  std::int64_t t = 0;
  std::string kind;  // "no_move", "invariant_violation", "step_length"
  std::string detail;
};

/// Per-seed log of one optimizer run. Appended by a single owner.
class TrajectoryRecord {
 public:
  TrajectoryRecord() = default;
  TrajectoryRecord(std::uint64_t seed, std::string problem_id, std::string optimizer_id);

  std::uint64_t seed = 0;
  std::string problem_id;
  std::string optimizer_id;

  const std::vector<StepLog>& steps() const noexcept { return steps_; }
  const std::vector<TrajectoryEvent>& events() const noexcept { return events_; }

  /// Appends the next step; requires step.t == steps().size() + 1,
  /// grad_norm ≥ 0 and eta > 0.
  void append(StepLog step);
  void add_event(TrajectoryEvent event);

  std::size_t count_events(std::string_view kind) const;
  /// (1/T)·Σ‖∇F(w_t)‖ over the recorded steps.
  double average_grad_norm() const;

  /// Largest ‖w_t − w_1‖ seen during the run.
  double max_excursion = 0.0;

 private:
  std::vector<StepLog> steps_;
  std::vector<TrajectoryEvent> events_;
};

}  // namespace nigt

#endif  // NIGT_CORE_HPP
