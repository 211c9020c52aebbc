// Copyright 2026 The QSD Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "qsd/errors.hpp"

namespace qsd {

/// Quantile with linear interpolation between order statistics
/// (h = (n - 1) q).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DomainError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Box-plot summary. Whiskers follow the 1.5 IQR rule but never reach past
/// the 5th/95th percentiles; values outside the whiskers are outliers.
struct DistributionStats {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double p5 = 0.0;
  double p95 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<double> outliers;

  friend bool operator==(const DistributionStats&, const DistributionStats&) = default;
};

inline DistributionStats describe(std::span<const double> values) {
  if (values.empty()) throw DomainError("statistics of an empty sample");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  DistributionStats d;
  d.count = s.size();
  d.mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  d.median = quantile_sorted(s, 0.5);
  d.q1 = quantile_sorted(s, 0.25);
  d.q3 = quantile_sorted(s, 0.75);
  d.p5 = quantile_sorted(s, 0.05);
  d.p95 = quantile_sorted(s, 0.95);
  const double iqr = d.q3 - d.q1;
  d.whisker_low = std::max(d.q1 - 1.5 * iqr, d.p5);
  d.whisker_high = std::min(d.q3 + 1.5 * iqr, d.p95);
  d.min = s.front();
  d.max = s.back();
  for (double v : s)
    if (v < d.whisker_low || v > d.whisker_high) d.outliers.push_back(v);
  return d;
}

/// Reduces an angle into [0, 2 pi).
inline double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(theta, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r = 0.0;
  return r;
}

/// sqrt(-2 ln R), R the mean resultant length.
inline double circular_stddev(std::span<const double> angles) {
  if (angles.empty()) throw DomainError("circular spread of an empty sample");
  double c = 0.0, s = 0.0;
  for (double a : angles) {
    c += std::cos(a);
    s += std::sin(a);
  }
  const double r = std::hypot(c, s) / static_cast<double>(angles.size());
  if (r >= 1.0) return 0.0;
  if (r <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(-2.0 * std::log(r));
}

}  // namespace qsd
