#include "rrot/sweep.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rrot {

namespace {

constexpr double kPhiFloor = 1e-12;

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit needs at least two distinct distances");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace

SweepPoint sweep_point(ChannelCache& cache, double p, double theta, int n_samples, std::uint64_t seed, int workers,
                       int resamples) {
  const SyndromeTable table = tabulate(cache, {theta, p}, n_samples, seed, workers);
  SweepPoint pt;
  pt.d = cache.code().d;
  pt.p = p;
  pt.theta = theta;
  pt.n_samples = n_samples;
  std::vector<double> ratios;
  for (const auto& e : table.entries) {
    if (e.key == 0) pt.trivial_syndrome_prob = e.weight;
    if (e.channel.degenerate || std::abs(e.channel.phi_s) < kPhiFloor) {
      pt.excluded_weight += e.weight;
      continue;
    }
    ratios.insert(ratios.end(), e.count, e.channel.q_s / std::abs(e.channel.phi_s));
  }
  if (ratios.empty()) throw std::runtime_error("every sampled syndrome has a vanishing logical angle");
  Rng rng = make_rng(seed, "bootstrap", 0);
  pt.replicates = bootstrap_means(ratios, resamples, rng);
  const Estimate est = percentile_interval(mean_of(ratios), pt.replicates);
  pt.mean_relative_dephasing = est.mean;
  pt.lo = est.lo;
  pt.hi = est.hi;
  pt.std_error = standard_error(ratios);
  return pt;
}

std::vector<SweepPoint> sweep_grid(const std::vector<ChannelCache*>& caches, const std::vector<double>& ps,
                                   const std::vector<double>& thetas, int n_samples, std::uint64_t seed, int workers,
                                   int resamples) {
  std::vector<SweepPoint> out;
  std::uint64_t k = 0;
  for (ChannelCache* cache : caches)
    for (double p : ps)
      for (double theta : thetas)
        out.push_back(sweep_point(*cache, p, theta, n_samples, derive_seed(seed, "sweep", k++), workers, resamples));
  return out;
}

double trivial_probability(const SurfaceCode& code, const NoiseParams& params, int n_samples, std::uint64_t seed,
                           int workers) {
  const auto samples = sample_batch(code, params, n_samples, seed, workers);
  int zero = 0;
  for (const auto& s : samples) zero += weight(s.s) == 0;
  return double(zero) / n_samples;
}

HalfSuccess find_half_success_angle(const SurfaceCode& code, double p, int n_samples, std::uint64_t seed,
                                    int workers, double lo, double hi, double tol, int max_iterations) {
  if (!(hi > lo)) throw std::invalid_argument("bisection needs lo < hi");
  const double p_lo = trivial_probability(code, {lo, p}, n_samples, derive_seed(seed, "bracket", 0), workers);
  const double p_hi = trivial_probability(code, {hi, p}, n_samples, derive_seed(seed, "bracket", 1), workers);
  if (!(p_lo > 0.5 && p_hi < 0.5))
    throw std::invalid_argument("theta range does not bracket p(0) = 1/2 (p(lo) = " + std::to_string(p_lo) +
                                ", p(hi) = " + std::to_string(p_hi) + ")");
  for (int k = 0; k < max_iterations; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double pm = trivial_probability(code, {mid, p}, n_samples, derive_seed(seed, "bisect", k), workers);
    if (std::abs(pm - 0.5) <= tol) return {mid, pm, k + 1};
    (pm > 0.5 ? lo : hi) = mid;
  }
  throw std::runtime_error("bisection did not reach the tolerance in " + std::to_string(max_iterations) +
                           " iterations");
}

SuppressionFit fit_suppression(const std::vector<double>& ds, const std::vector<double>& values,
                               const std::vector<std::vector<double>>* replicates) {
  if (ds.size() != values.size()) throw std::invalid_argument("distance and value counts differ");
  if (ds.size() < 2) throw std::invalid_argument("fit needs at least two distances");
  auto logs = [](const std::vector<double>& v) {
    std::vector<double> out;
    for (double x : v) {
      if (!(x > 0.0)) throw std::invalid_argument("suppression fit needs positive values");
      out.push_back(std::log(x));
    }
    return out;
  };
  const auto y = logs(values);
  const LineFit f = least_squares(ds, y);
  SuppressionFit fit;
  fit.kappa = -f.slope;
  fit.intercept = f.intercept;
  for (std::size_t i = 0; i < ds.size(); ++i) fit.residuals.push_back(y[i] - (f.intercept + f.slope * ds[i]));
  fit.kappa_lo = fit.kappa_hi = fit.kappa;
  if (replicates) {
    if (replicates->size() != ds.size()) throw std::invalid_argument("one replicate list per distance required");
    const std::size_t r = replicates->front().size();
    std::vector<double> kappas;
    for (std::size_t b = 0; b < r; ++b) {
      std::vector<double> v;
      for (const auto& rep : *replicates) {
        if (rep.size() != r) throw std::invalid_argument("replicate lists differ in length");
        v.push_back(rep[b]);
      }
      kappas.push_back(-least_squares(ds, logs(v)).slope);
    }
    const Estimate e = percentile_interval(fit.kappa, kappas);
    fit.kappa_lo = e.lo;
    fit.kappa_hi = e.hi;
  }
  return fit;
}

}  // namespace rrot
