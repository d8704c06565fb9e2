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

#include "nigt/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nigt {

namespace {

void require_same_dim(const DenseVector& a, const DenseVector& b, const char* op) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch(std::string(op) + ": dimension " + std::to_string(a.dim()) +
                            " vs " + std::to_string(b.dim()));
  }
}

double scaled_norm(std::span<const double> v) {
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double sum = 0.0;
  for (double x : v) {
    const double r = x / scale;
    sum += r * r;
  }
  return scale * std::sqrt(sum);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

DenseVector::DenseVector(std::size_t dim, double fill) : data_(dim, fill) {}

DenseVector::DenseVector(std::vector<double> values) : data_(std::move(values)) {}

DenseVector::DenseVector(std::initializer_list<double> values) : data_(values) {}

double DenseVector::norm() const { return scaled_norm(data_); }

double DenseVector::squared_norm() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return s;
}

double DenseVector::dot(const DenseVector& other) const {
  require_same_dim(*this, other, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) s += data_[i] * other.data_[i];
  return s;
}

bool DenseVector::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double DenseVector::block_norm(std::size_t begin, std::size_t end) const {
  if (begin > end || end > data_.size()) throw DimensionMismatch("block_norm: range out of bounds");
  return scaled_norm(std::span<const double>(data_).subspan(begin, end - begin));
}

void DenseVector::check_finite(const char* op) const {
  if (!all_finite()) throw NonFiniteValue(std::string(op) + " produced a non-finite component");
}

DenseVector& DenseVector::operator+=(const DenseVector& other) {
  require_same_dim(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  check_finite("operator+=");
  return *this;
}

DenseVector& DenseVector::operator-=(const DenseVector& other) {
  require_same_dim(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  check_finite("operator-=");
  return *this;
}

DenseVector& DenseVector::operator*=(double s) {
  for (double& x : data_) x *= s;
  check_finite("operator*=");
  return *this;
}

DenseVector axpy(double a, const DenseVector& x, const DenseVector& y) {
  require_same_dim(x, y, "axpy");
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + y[i];
  DenseVector r(std::move(out));
  if (!r.all_finite()) throw NonFiniteValue("axpy produced a non-finite component");
  return r;
}

DenseVector normalize(const DenseVector& v, double floor) {
  if (!v.all_finite()) throw NonFiniteValue("normalize: input is not finite");
  const double n = v.norm();
  if (!(n > floor)) {
    throw NormalizationSingularity("normalize: norm " + std::to_string(n) + " <= floor");
  }
  std::vector<double> out(v.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i] / n;
  return DenseVector(std::move(out));
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : seed_(seed), stream_id_(stream_id), key_(mix64(seed ^ mix64(stream_id + kGolden))) {}

std::uint64_t RngStream::next_u64() noexcept {
  const std::uint64_t x = key_ + (++counter_) * kGolden;
  return mix64(mix64(x) ^ key_);
}

double RngStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() noexcept {
  // 1 - u lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream RngStream::split(std::uint64_t child_id) const noexcept {
  return RngStream(mix64(seed_ + kGolden * (stream_id_ + 1)), child_id);
}

DenseVector gaussian_noise(RngStream& rng, std::size_t d, double sigma) {
  std::vector<double> out(d, 0.0);
  if (sigma == 0.0) return DenseVector(std::move(out));
  const double scale = sigma / std::sqrt(static_cast<double>(d));
  for (double& x : out) x = scale * rng.normal();
  return DenseVector(std::move(out));
}

DenseVector bounded_uniform_noise(RngStream& rng, std::size_t d, double sigma) {
  std::vector<double> out(d, 0.0);
  if (sigma == 0.0) return DenseVector(std::move(out));
  // Uniform on [-c, c] has variance c²/3; c = sigma·√(3/d) gives σ²/d per axis.
  const double c = sigma * std::sqrt(3.0 / static_cast<double>(d));
  for (double& x : out) x = c * (2.0 * rng.uniform() - 1.0);
  return DenseVector(std::move(out));
}

TrajectoryRecord::TrajectoryRecord(std::uint64_t s, std::string pid, std::string oid)
    : seed(s), problem_id(std::move(pid)), optimizer_id(std::move(oid)) {}

void TrajectoryRecord::append(StepLog step) {
  if (step.t != static_cast<std::int64_t>(steps_.size()) + 1) {
    throw Error("TrajectoryRecord: step index " + std::to_string(step.t) + " is not contiguous");
  }
  if (!(step.grad_norm >= 0.0) || !(step.eta > 0.0)) {
    throw Error("TrajectoryRecord: invalid grad_norm/eta at step " + std::to_string(step.t));
  }
  steps_.push_back(std::move(step));
}

void TrajectoryRecord::add_event(TrajectoryEvent event) { events_.push_back(std::move(event)); }

std::size_t TrajectoryRecord::count_events(std::string_view kind) const {
  return static_cast<std::size_t>(std::count_if(
      events_.begin(), events_.end(), [&](const TrajectoryEvent& e) { return e.kind == kind; }));
}

double TrajectoryRecord::average_grad_norm() const {
  if (steps_.empty()) return 0.0;
  double s = 0.0;
  for (const auto& st : steps_) s += st.grad_norm;
  return s / static_cast<double>(steps_.size());
}

}  // namespace nigt
