// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

namespace relcache {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);

/// Flat real-valued feature tensor with shape metadata. Elements are finite
/// and the shape product always equals the element count.
class FeatureVec {
 public:
  FeatureVec() = default;
  /// One-dimensional vector with shape {data.size()}.
  explicit FeatureVec(std::vector<double> data);
  FeatureVec(std::vector<double> data, Shape shape);

  static FeatureVec zeros(const Shape& shape);

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  const Shape& shape() const noexcept { return shape_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }

  bool same_shape(const FeatureVec& other) const noexcept {
    return shape_ == other.shape_;
  }

  friend bool operator==(const FeatureVec&, const FeatureVec&) = default;

 private:
  std::vector<double> data_;
  Shape shape_;
};

FeatureVec operator+(const FeatureVec& a, const FeatureVec& b);
FeatureVec operator-(const FeatureVec& a, const FeatureVec& b);
FeatureVec operator*(double s, const FeatureVec& v);

double l2_norm(const FeatureVec& v);
double l1_norm(const FeatureVec& v);
double dot(const FeatureVec& a, const FeatureVec& b);

/// ||actual - predicted||_1 / ||actual||_1. Throws ZeroReference when the
/// reference has zero L1 norm.
double rel_l1_error(const FeatureVec& actual, const FeatureVec& predicted);

/// v / ||v||_2, or the zero vector of the same shape when v is zero.
FeatureVec normalize_l2(const FeatureVec& v);

/// Cosine similarity; throws UndefinedDirection if either vector is zero.
double cosine_similarity(const FeatureVec& a, const FeatureVec& b);

struct SamplePoint {
  int t = 0;
  FeatureVec value;
};

/// Bounded history of full-compute samples for one feature stream. Points
/// are kept oldest first; timesteps strictly decrease in insertion order.
class SampleHistory {
 public:
  explicit SampleHistory(std::size_t capacity = 2);

  /// Appends (t, value), evicting the oldest sample past capacity.
  void push(int t, FeatureVec value);
  void clear() { points_.clear(); }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

  const SamplePoint& latest() const;
  const SamplePoint& at(std::size_t i) const { return points_.at(i); }
  /// The most recent `count` points, oldest first.
  std::vector<SamplePoint> recent(std::size_t count) const;
  std::vector<int> timesteps() const;

 private:
  std::size_t capacity_;
  std::deque<SamplePoint> points_;
};

/// i-th order finite difference with uniform stride N over the latest
/// order+1 samples, evaluated at the latest sample:
///   D^1 = F(t) - F(t+N),  D^i = D^{i-1}(t) - D^{i-1}(t+N).
FeatureVec finite_difference(const SampleHistory& history, int order);

/// Interpolating polynomial through `points` (any order, distinct t) in
/// Newton divided-difference form, evaluated element-wise at target_t.
FeatureVec newton_predict(std::span<const SamplePoint> points, int target_t);
FeatureVec newton_predict(const SampleHistory& history, int target_t);

/// Truncated Taylor series around the latest sample with derivatives
/// estimated by divided differences:
///   F(t) + sum_i f[t_0..t_i] (target - t_0)^i.
/// On uniform spacing this is exactly F(t) + sum_i k^i/i! D^i_N F(t) / N^i.
/// It coincides with newton_predict for one or two points only.
FeatureVec taylor_series_predict(std::span<const SamplePoint> points,
                                 int target_t);

}  // namespace relcache
