#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "json.hpp"
#include "rrot/channel.hpp"
#include "rrot/policy.hpp"
#include "rrot/stats.hpp"

namespace rrot {

/// Source of single-round outcomes for a rotation action.
class OutcomeSource {
 public:
  virtual ~OutcomeSource() = default;
  /// Draws (phi, q) for rotation action `action`. Must be safe to call
  /// concurrently with distinct generators.
  virtual Outcome draw(int action, Rng& rng) const = 0;
};

/// Resamples the interpolated empirical distribution of a kernel.
class KernelSource : public OutcomeSource {
 public:
  explicit KernelSource(const EmpiricalKernel& kernel);
  Outcome draw(int action, Rng& rng) const override;

 private:
  const EmpiricalKernel& kernel_;
  std::vector<std::vector<double>> cumulative_;
};

/// Live syndrome sampling with dephasing, decoding and channel lookup.
class EndToEndSource : public OutcomeSource {
 public:
  EndToEndSource(ChannelCache& cache, double p, const std::vector<double>& actions);
  Outcome draw(int action, Rng& rng) const override;

 private:
  ChannelCache& cache_;
  double p_;
  std::vector<double> actions_;
  std::vector<std::unique_ptr<SyndromeSampler>> samplers_;
};

struct RoundLog {
  int action = 0;
  bool reset = false;
  double theta = 0.0;
  std::uint64_t key = 0;
  double phi = 0.0;
  double q = 0.0;
};

struct TrialRecord {
  std::vector<RoundLog> rounds;
  double phi = 0.0;
  double q = 0.0;
  /// Total rounds including resets.
  int t = 0;
  int resets = 0;
  int rotations = 0;
  bool divergent = false;
};

/// Runs one trial from (Phi, Q) = (0, 0) until the residual and Q land in a
/// terminal cell. Every rotation and every reset costs one round. Trials
/// that reach `round_cap` rounds stop and are flagged divergent.
TrialRecord run_trial(const PolicyBundle& policy, const OutcomeSource& source, double target, Rng& rng,
                      int round_cap = 10000, bool keep_log = true);

/// Re-folds the round log; returns the terminal (Phi, Q).
std::pair<double, double> replay(const TrialRecord& record);

struct SummaryStats {
  Estimate t;
  Estimate q;
  /// Q_T / |Phi_T|.
  Estimate relative_q;
  double divergent_fraction = 0.0;
  int n_trials = 0;
  int resamples = 0;
};

struct Campaign {
  SummaryStats stats;
  std::vector<TrialRecord> trials;
};

/// Trial i draws from the stream ("trial", i) of `seed`; bootstrap uses
/// ("bootstrap", k). Divergent trials are excluded from the means and
/// reported as a fraction.
Campaign run_campaign(const PolicyBundle& policy, const OutcomeSource& source, double target, int n_trials,
                      std::uint64_t seed, int workers, int resamples = 1000, int round_cap = 10000,
                      bool keep_logs = false);

nlohmann::json to_json(const TrialRecord& record);
nlohmann::json to_json(const SummaryStats& stats);

}  // namespace rrot
