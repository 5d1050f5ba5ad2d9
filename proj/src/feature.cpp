// Copyright 2026 The relcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcache/feature.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "relcache/error.hpp"

namespace relcache {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

FeatureVec::FeatureVec(std::vector<double> data)
    : FeatureVec(std::move(data), Shape{}) {}

FeatureVec::FeatureVec(std::vector<double> data, Shape shape)
    : data_(std::move(data)), shape_(std::move(shape)) {
  if (shape_.empty()) shape_ = {data_.size()};
  for (std::size_t extent : shape_) {
    if (extent == 0) {
      throw Error(ErrorKind::ShapeMismatch, "shape extents must be positive");
    }
  }
  if (shape_size(shape_) != data_.size()) {
    throw Error(ErrorKind::ShapeMismatch,
                "shape product " + std::to_string(shape_size(shape_)) +
                    " != data length " + std::to_string(data_.size()));
  }
  for (double x : data_) {
    if (!std::isfinite(x)) {
      throw Error(ErrorKind::NonFinite, "feature contains NaN or Inf");
    }
  }
}

FeatureVec FeatureVec::zeros(const Shape& shape) {
  return FeatureVec(std::vector<double>(shape_size(shape), 0.0), shape);
}

namespace {

void require_same_shape(const FeatureVec& a, const FeatureVec& b) {
  if (!a.same_shape(b)) {
    throw Error(ErrorKind::ShapeMismatch, "feature shapes differ");
  }
}

}  // namespace

FeatureVec operator+(const FeatureVec& a, const FeatureVec& b) {
  require_same_shape(a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return FeatureVec(std::move(out), a.shape());
}

FeatureVec operator-(const FeatureVec& a, const FeatureVec& b) {
  require_same_shape(a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return FeatureVec(std::move(out), a.shape());
}

FeatureVec operator*(double s, const FeatureVec& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * v[i];
  return FeatureVec(std::move(out), v.shape());
}

double l2_norm(const FeatureVec& v) {
  double sum = 0.0;
  for (double x : v.values()) sum += x * x;
  return std::sqrt(sum);
}

double l1_norm(const FeatureVec& v) {
  double sum = 0.0;
  for (double x : v.values()) sum += std::abs(x);
  return sum;
}

double dot(const FeatureVec& a, const FeatureVec& b) {
  require_same_shape(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double rel_l1_error(const FeatureVec& actual, const FeatureVec& predicted) {
  require_same_shape(actual, predicted);
  const double reference = l1_norm(actual);
  if (reference == 0.0) {
    throw Error(ErrorKind::ZeroReference,
                "relative L1 error undefined for a zero reference feature");
  }
  double diff = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    diff += std::abs(actual[i] - predicted[i]);
  }
  return diff / reference;
}

FeatureVec normalize_l2(const FeatureVec& v) {
  const double norm = l2_norm(v);
  if (norm == 0.0) return FeatureVec::zeros(v.shape());
  return (1.0 / norm) * v;
}

double cosine_similarity(const FeatureVec& a, const FeatureVec& b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorKind::UndefinedDirection,
                "cosine similarity of a zero-norm vector");
  }
  return dot(a, b) / (na * nb);
}

SampleHistory::SampleHistory(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) {
    throw Error(ErrorKind::InvalidArgument, "history capacity must be >= 1");
  }
}

void SampleHistory::push(int t, FeatureVec value) {
  if (!points_.empty()) {
    if (t >= points_.back().t) {
      throw Error(ErrorKind::InvalidArgument,
                  "history timesteps must strictly decrease (got " +
                      std::to_string(t) + " after " +
                      std::to_string(points_.back().t) + ")");
    }
    if (!value.same_shape(points_.back().value)) {
      throw Error(ErrorKind::ShapeMismatch,
                  "history sample shape differs from stored samples");
    }
  }
  points_.push_back({t, std::move(value)});
  while (points_.size() > capacity_) points_.pop_front();
}

const SamplePoint& SampleHistory::latest() const {
  if (points_.empty()) {
    throw Error(ErrorKind::InsufficientHistory, "history is empty");
  }
  return points_.back();
}

std::vector<SamplePoint> SampleHistory::recent(std::size_t count) const {
  count = std::min(count, points_.size());
  return {points_.end() - static_cast<std::ptrdiff_t>(count), points_.end()};
}

std::vector<int> SampleHistory::timesteps() const {
  std::vector<int> ts;
  ts.reserve(points_.size());
  for (const auto& p : points_) ts.push_back(p.t);
  return ts;
}

FeatureVec finite_difference(const SampleHistory& history, int order) {
  if (order < 1) {
    throw Error(ErrorKind::InvalidArgument, "difference order must be >= 1");
  }
  const auto needed = static_cast<std::size_t>(order) + 1;
  if (history.size() < needed) {
    throw Error(ErrorKind::InsufficientHistory,
                "order-" + std::to_string(order) + " difference needs " +
                    std::to_string(needed) + " samples, have " +
                    std::to_string(history.size()));
  }
  const std::vector<SamplePoint> pts = history.recent(needed);
  const int stride = pts[0].t - pts[1].t;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    if (pts[i].t - pts[i + 1].t != stride) {
      throw Error(ErrorKind::NonUniformSpacing,
                  "finite_difference requires uniformly spaced samples");
    }
  }
  // Level 0 holds values oldest first; each pass replaces entry j with
  // entry(j+1) - entry(j), i.e. newer minus older.
  std::vector<FeatureVec> level;
  level.reserve(pts.size());
  for (const auto& p : pts) level.push_back(p.value);
  for (int i = 0; i < order; ++i) {
    for (std::size_t j = 0; j + 1 < level.size(); ++j) {
      level[j] = level[j + 1] - level[j];
    }
    level.pop_back();
  }
  return level.front();
}

namespace {

// Divided-difference coefficients f[x_0], f[x_0,x_1], ... with x_0 the most
// recent sample. Element-wise over the feature.
std::vector<std::vector<double>> divided_differences(
    std::span<const SamplePoint> points) {
  const std::size_t n = points.size();
  std::vector<double> xs(n);
  std::vector<std::vector<double>> coef(n);
  for (std::size_t j = 0; j < n; ++j) {
    const SamplePoint& p = points[n - 1 - j];
    if (!p.value.same_shape(points.back().value)) {
      throw Error(ErrorKind::ShapeMismatch, "history samples differ in shape");
    }
    xs[j] = static_cast<double>(p.t);
    coef[j] = p.value.data();
  }
  for (std::size_t level = 1; level < n; ++level) {
    for (std::size_t j = n - 1; j >= level; --j) {
      const double dx = xs[j] - xs[j - level];
      if (dx == 0.0) {
        throw Error(ErrorKind::InvalidArgument,
                    "interpolation timesteps must be distinct");
      }
      auto& hi = coef[j];
      const auto& lo = coef[j - 1];
      for (std::size_t e = 0; e < hi.size(); ++e) hi[e] = (hi[e] - lo[e]) / dx;
    }
  }
  return coef;
}

// Horner evaluation with per-level factors (target - node_j).
FeatureVec horner(const std::vector<std::vector<double>>& coef,
                  const std::vector<double>& factors, const Shape& shape) {
  const std::size_t n = coef.size();
  std::vector<double> acc = coef[n - 1];
  for (std::size_t j = n - 1; j-- > 0;) {
    const double f = factors[j];
    for (std::size_t e = 0; e < acc.size(); ++e) {
      acc[e] = acc[e] * f + coef[j][e];
    }
  }
  return FeatureVec(std::move(acc), shape);
}

}  // namespace

FeatureVec newton_predict(std::span<const SamplePoint> points, int target_t) {
  if (points.empty()) {
    throw Error(ErrorKind::InsufficientHistory, "cannot extrapolate from no samples");
  }
  const auto coef = divided_differences(points);
  const std::size_t n = points.size();
  std::vector<double> factors(n);
  for (std::size_t j = 0; j < n; ++j) {
    factors[j] = static_cast<double>(target_t) -
                 static_cast<double>(points[n - 1 - j].t);
  }
  return horner(coef, factors, points.back().value.shape());
}

FeatureVec newton_predict(const SampleHistory& history, int target_t) {
  const auto pts = history.recent(history.size());
  return newton_predict(std::span<const SamplePoint>(pts), target_t);
}

FeatureVec taylor_series_predict(std::span<const SamplePoint> points,
                                 int target_t) {
  if (points.empty()) {
    throw Error(ErrorKind::InsufficientHistory, "cannot extrapolate from no samples");
  }
  const auto coef = divided_differences(points);
  const double offset =
      static_cast<double>(target_t) - static_cast<double>(points.back().t);
  return horner(coef, std::vector<double>(points.size(), offset),
                points.back().value.shape());
}

}  // namespace relcache
