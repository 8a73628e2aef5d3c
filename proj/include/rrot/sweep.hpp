#pragma once

#include <cstdint>
#include <vector>

#include "rrot/channel.hpp"
#include "rrot/stats.hpp"

namespace rrot {

struct SweepPoint {
  int d = 0;
  double p = 0.0;
  double theta = 0.0;
  /// E[q_s / |phi_s|] over the included samples, with standard error and a
  /// bootstrap interval.
  double mean_relative_dephasing = 0.0;
  double std_error = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int n_samples = 0;
  double trivial_syndrome_prob = 0.0;
  /// Sample weight of syndromes with |phi_s| < 1e-12 or a degenerate channel,
  /// left out of the ratio.
  double excluded_weight = 0.0;
  /// Bootstrap replicate means, kept for downstream fits.
  std::vector<double> replicates;
};

/// Samples n syndromes at (theta, p), evaluates each distinct one through the
/// cache and averages q_s / |phi_s| under the empirical weights.
SweepPoint sweep_point(ChannelCache& cache, double p, double theta, int n_samples, std::uint64_t seed, int workers,
                       int resamples = 1000);

/// All (d, p, theta) combinations; caches[k] serves distance k of the list.
/// Point k in row-major (d, p, theta) order uses the stream ("sweep", k).
std::vector<SweepPoint> sweep_grid(const std::vector<ChannelCache*>& caches, const std::vector<double>& ps,
                                   const std::vector<double>& thetas, int n_samples, std::uint64_t seed, int workers,
                                   int resamples = 1000);

/// Empirical trivial-syndrome probability from n samples.
double trivial_probability(const SurfaceCode& code, const NoiseParams& params, int n_samples, std::uint64_t seed,
                           int workers);

struct HalfSuccess {
  double theta = 0.0;
  double trivial_syndrome_prob = 0.0;
  int iterations = 0;
};

/// Bisects theta in [lo, hi] until the empirical trivial-syndrome probability
/// is within tol of 1/2. Iteration k uses the stream ("bisect", k). Throws
/// std::invalid_argument when the ends do not bracket 1/2 and
/// std::runtime_error after max_iterations.
HalfSuccess find_half_success_angle(const SurfaceCode& code, double p, int n_samples, std::uint64_t seed,
                                    int workers, double lo, double hi, double tol = 0.02, int max_iterations = 12);

struct SuppressionFit {
  /// log value = intercept - kappa * d.
  double kappa = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;
  /// Percentile interval of kappa over bootstrap replicates, when given.
  double kappa_lo = 0.0;
  double kappa_hi = 0.0;
};

/// Least-squares fit of log(values) against d. `replicates[k]` optionally
/// holds bootstrap replicates for distance k (all of equal length). Throws on
/// fewer than two distinct distances or non-positive values.
SuppressionFit fit_suppression(const std::vector<double>& ds, const std::vector<double>& values,
                               const std::vector<std::vector<double>>* replicates = nullptr);

}  // namespace rrot
