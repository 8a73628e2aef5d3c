#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "rrot/rng.hpp"

namespace rrot {

/// Point estimate with a percentile bootstrap interval.
struct Estimate {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

inline double mean_of(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Standard error of the mean.
inline double standard_error(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
}

/// Means of `resamples` bootstrap resamples of x.
inline std::vector<double> bootstrap_means(const std::vector<double>& x, int resamples, Rng& rng) {
  if (x.empty()) throw std::invalid_argument("bootstrap of an empty sample");
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  std::vector<double> out(resamples);
  for (auto& m : out) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) total += x[pick(rng)];
    m = total / static_cast<double>(x.size());
  }
  return out;
}

/// Two-sided percentile interval of the given replicates.
inline Estimate percentile_interval(double point, std::vector<double> replicates, double level = 0.95) {
  std::sort(replicates.begin(), replicates.end());
  const double tail = (1.0 - level) / 2.0;
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(replicates.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return i + 1 < replicates.size() ? replicates[i] * (1 - f) + replicates[i + 1] * f : replicates[i];
  };
  // Percentile intervals can exclude the point estimate when replicates are
  // all tied; widen to keep the invariant.
  return {point, std::min(point, at(tail)), std::max(point, at(1.0 - tail))};
}

inline Estimate bootstrap_mean(const std::vector<double>& x, int resamples, Rng& rng, double level = 0.95) {
  return percentile_interval(mean_of(x), bootstrap_means(x, resamples, rng), level);
}

}  // namespace rrot
