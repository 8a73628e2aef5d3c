#include "rrot/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rrot/parallel.hpp"

namespace rrot {

KernelSource::KernelSource(const EmpiricalKernel& kernel) : kernel_(kernel) {
  for (const auto& outs : kernel.outcomes) {
    std::vector<double> c;
    double total = 0.0;
    for (const auto& o : outs) c.push_back(total += o.weight);
    if (c.empty()) throw std::invalid_argument("kernel action without outcomes");
    cumulative_.push_back(std::move(c));
  }
}

Outcome KernelSource::draw(int action, Rng& rng) const {
  const auto& c = cumulative_.at(action);
  const double u = uniform01(rng) * c.back();
  const auto idx = std::min<std::size_t>(std::upper_bound(c.begin(), c.end(), u) - c.begin(), c.size() - 1);
  return kernel_.outcomes[action][idx];
}

EndToEndSource::EndToEndSource(ChannelCache& cache, double p, const std::vector<double>& actions)
    : cache_(cache), p_(p), actions_(actions) {
  for (double theta : actions) samplers_.push_back(std::make_unique<SyndromeSampler>(cache.code(), theta));
}

Outcome EndToEndSource::draw(int action, Rng& rng) const {
  const auto smp = samplers_.at(action)->sample_with_dephasing(p_, rng);
  const ChannelParams c = cache_.get({actions_[action], p_}, smp.s);
  Outcome o{1.0, c.phi_s, c.q_s, pack(smp.s)};
  if (c.degenerate) {
    o.phi = 0.0;
    o.q = 0.5;
  }
  return o;
}

TrialRecord run_trial(const PolicyBundle& policy, const OutcomeSource& source, double target, Rng& rng,
                      int round_cap, bool keep_log) {
  const ControlGrid& g = policy.grid;
  if (target != g.target) throw std::invalid_argument("policy grid was built for another target");
  TrialRecord r;
  for (;;) {
    const int i = g.delta_bin(fold_angle(target - r.phi));
    const int j = g.q_bin(r.q);
    if (g.terminal(i, j)) break;
    if (r.t >= round_cap) {
      r.divergent = true;
      break;
    }
    const int a = policy.solution.policy[g.cell(i, j)];
    ++r.t;
    RoundLog log{a, a == g.reset_action(), 0.0, 0, 0.0, 0.0};
    if (log.reset) {
      r.phi = 0.0;
      r.q = 0.0;
      ++r.resets;
    } else {
      const Outcome o = source.draw(a, rng);
      log.theta = g.actions[a];
      log.key = o.key;
      log.phi = o.phi;
      log.q = o.q;
      r.phi = fold_angle(r.phi + o.phi);
      r.q = update_q(r.q, o.q);
      ++r.rotations;
    }
    if (keep_log) r.rounds.push_back(log);
  }
  if (r.t != r.rotations + r.resets) throw std::logic_error("round accounting mismatch");
  return r;
}

std::pair<double, double> replay(const TrialRecord& record) {
  double phi = 0.0, q = 0.0;
  for (const auto& log : record.rounds) {
    if (log.reset) {
      phi = 0.0;
      q = 0.0;
    } else {
      phi = fold_angle(phi + log.phi);
      q = update_q(q, log.q);
    }
  }
  return {phi, q};
}

Campaign run_campaign(const PolicyBundle& policy, const OutcomeSource& source, double target, int n_trials,
                      std::uint64_t seed, int workers, int resamples, int round_cap, bool keep_logs) {
  if (n_trials <= 0) throw std::invalid_argument("n_trials must be positive");
  Campaign c;
  c.trials.resize(n_trials);
  parallel_for(n_trials, workers, [&](long i) {
    Rng rng = make_rng(seed, "trial", static_cast<std::uint64_t>(i));
    c.trials[i] = run_trial(policy, source, target, rng, round_cap, keep_logs);
  });
  std::vector<double> t, q, rel;
  int divergent = 0;
  for (const auto& r : c.trials) {
    if (r.divergent) {
      ++divergent;
      continue;
    }
    t.push_back(r.t);
    q.push_back(r.q);
    rel.push_back(r.q / std::abs(target));
  }
  c.stats.n_trials = n_trials;
  c.stats.resamples = resamples;
  c.stats.divergent_fraction = double(divergent) / n_trials;
  if (t.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    c.stats.t = c.stats.q = c.stats.relative_q = {nan, nan, nan};
    return c;
  }
  Rng r0 = make_rng(seed, "bootstrap", 0), r1 = make_rng(seed, "bootstrap", 1), r2 = make_rng(seed, "bootstrap", 2);
  c.stats.t = bootstrap_mean(t, resamples, r0);
  c.stats.q = bootstrap_mean(q, resamples, r1);
  c.stats.relative_q = bootstrap_mean(rel, resamples, r2);
  return c;
}

nlohmann::json to_json(const TrialRecord& r) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& l : r.rounds) {
    if (l.reset)
      rounds.push_back({{"action", "reset"}});
    else
      rounds.push_back({{"action", l.action}, {"theta", l.theta}, {"s", l.key}, {"phi", l.phi}, {"q", l.q}});
  }
  return {{"T", r.t},     {"resets", r.resets}, {"rotations", r.rotations}, {"phi", r.phi},
          {"q", r.q},     {"divergent", r.divergent}, {"rounds", rounds}};
}

nlohmann::json to_json(const SummaryStats& s) {
  auto est = [](const Estimate& e) { return nlohmann::json{{"mean", e.mean}, {"lo", e.lo}, {"hi", e.hi}}; };
  return {{"T", est(s.t)},
          {"Q", est(s.q)},
          {"relative_Q", est(s.relative_q)},
          {"divergent_fraction", s.divergent_fraction},
          {"n_trials", s.n_trials},
          {"resamples", s.resamples}};
}

}  // namespace rrot
