#include "rrot/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "rrot/parallel.hpp"
#include "rrot/rng.hpp"

namespace rrot {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2;

// Linear in log magnitude when a and b share a sign and are nonzero,
// linear in value otherwise.
double interp_signed(double a, double b, double t) {
  if (a != 0.0 && b != 0.0 && std::signbit(a) == std::signbit(b)) {
    const double mag = std::exp((1.0 - t) * std::log(std::abs(a)) + t * std::log(std::abs(b)));
    return std::copysign(mag, a);
  }
  return (1.0 - t) * a + t * b;
}

std::pair<double, double> phi_q(const ChannelParams& c) {
  return c.degenerate ? std::pair{0.0, 0.5} : std::pair{c.phi_s, c.q_s};
}

}  // namespace

int ControlGrid::delta_bin(double delta) const {
  const int half = n_phi() / 2;
  const double mag = std::abs(delta);
  if (mag <= eps) return half;
  auto it = std::lower_bound(mag_edges.begin(), mag_edges.end(), mag);
  int k = static_cast<int>(it - mag_edges.begin()) - 1;
  k = std::clamp(k, 0, half - 1);
  return delta > 0 ? half + 1 + k : half - 1 - k;
}

int ControlGrid::q_bin(double q) const {
  auto it = std::lower_bound(q_edges.begin(), q_edges.end(), q);
  return std::min(static_cast<int>(it - q_edges.begin()), n_q() - 1);
}

ControlGrid make_grid(double target, const std::vector<double>& actions, double q_acc, const GridOptions& opt) {
  const double mag = std::abs(target);
  if (!(mag > 0.0) || mag >= kHalfPi) throw std::invalid_argument("target angle must satisfy 0 < |target| < pi/2");
  if (!(q_acc > 0.0)) throw std::invalid_argument("q_acc must be positive");
  if (opt.n_phi < 3 || opt.n_phi % 2 == 0) throw std::invalid_argument("n_phi must be odd and at least 3");
  if (opt.n_q < 2) throw std::invalid_argument("n_q must be at least 2");
  if (actions.empty()) throw std::invalid_argument("no rotation actions");
  if (!(opt.eps_ratio > 0.0 && opt.eps_ratio < 1.0)) throw std::invalid_argument("eps_ratio must be in (0, 1)");
  if (!(opt.gamma > 0.0 && opt.gamma <= 1.0)) throw std::invalid_argument("gamma must be in (0, 1]");

  ControlGrid g;
  g.target = target;
  g.eps = opt.eps_ratio * mag;
  g.actions = actions;
  g.gamma = opt.gamma;
  g.delta_tol = opt.delta_tol;
  g.q_acc = q_acc;
  g.max_iterations = opt.max_iterations;

  const int half = opt.n_phi / 2;
  double ratio = std::pow(kHalfPi / g.eps, 1.0 / half);
  // Make |target| the geometric center of its bin.
  const double steps = std::log(mag / g.eps) / std::log(ratio) - 0.5;
  const int k_star = std::clamp(static_cast<int>(std::lround(steps)), 0, half - 1);
  const double centered = std::pow(mag / g.eps, 1.0 / (k_star + 0.5));
  if (centered > 1.0 && g.eps * std::pow(centered, half - 1) < kHalfPi) ratio = centered;
  g.mag_edges.resize(half + 1);
  for (int k = 0; k < half; ++k) g.mag_edges[k] = g.eps * std::pow(ratio, k);
  g.mag_edges[half] = kHalfPi;
  g.delta_centers.assign(opt.n_phi, 0.0);
  for (int k = 0; k < half; ++k) {
    const double c = std::sqrt(g.mag_edges[k] * g.mag_edges[k + 1]);
    g.delta_centers[half + 1 + k] = c;
    g.delta_centers[half - 1 - k] = -c;
  }

  const double floor = std::min(opt.q_floor, q_acc);
  g.q_edges.resize(opt.n_q);
  for (int k = 0; k < opt.n_q; ++k) g.q_edges[k] = floor * std::pow(0.5 / floor, double(k) / (opt.n_q - 1));
  g.q_edges.back() = 0.5;
  if (q_acc > floor && q_acc < 0.5) {
    int nearest = 1;
    for (int k = 1; k + 1 < opt.n_q; ++k)
      if (std::abs(std::log(g.q_edges[k] / q_acc)) < std::abs(std::log(g.q_edges[nearest] / q_acc))) nearest = k;
    if (opt.n_q > 2) g.q_edges[nearest] = q_acc;
  }
  for (int k = 1; k < opt.n_q; ++k)
    if (!(g.q_edges[k] > g.q_edges[k - 1])) throw std::invalid_argument("Q edges are not strictly increasing");
  g.q_centers.assign(opt.n_q, 0.0);
  for (int k = 1; k < opt.n_q; ++k) g.q_centers[k] = std::sqrt(g.q_edges[k - 1] * g.q_edges[k]);
  return g;
}

ControlGrid make_grid(double target, double theta_max, double q_acc, const GridOptions& opt) {
  if (opt.n_theta < 3) throw std::invalid_argument("n_theta must be at least 3");
  if (!(theta_max > 0.0)) throw std::invalid_argument("theta_max must be positive");
  const int count = opt.n_theta - 1;
  std::vector<double> actions(count);
  // Built from the positive half so that the set is exactly symmetric.
  for (int a = count / 2; a < count; ++a) {
    actions[a] = theta_max * (2.0 * a - (count - 1)) / (count - 1);
    actions[count - 1 - a] = -actions[a];
  }
  return make_grid(target, actions, q_acc, opt);
}

ChannelGrid build_channel_grid(ChannelCache& cache, double p, const std::vector<double>& thetas, int n_samples,
                               std::uint64_t seed, int workers) {
  if (thetas.empty()) throw std::invalid_argument("empty theta grid");
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    if (thetas[k] < 0.0) throw std::invalid_argument("theta grid must be non-negative");
    if (k > 0 && !(thetas[k] > thetas[k - 1])) throw std::invalid_argument("theta grid must be increasing");
  }
  ChannelGrid grid{cache.code().d, p, {}};
  for (std::size_t k = 0; k < thetas.size(); ++k)
    grid.tables.push_back(tabulate(cache, {thetas[k], p}, n_samples, derive_seed(seed, "theta", k), workers));
  return grid;
}

std::vector<Outcome> interpolate_outcomes(const ChannelGrid& grid, double theta) {
  if (grid.tables.empty()) throw std::out_of_range("empty channel grid");
  const double a = std::abs(theta);
  const auto& tables = grid.tables;
  const double lo = tables.front().params.theta, hi = tables.back().params.theta;
  if (a < lo || a > hi * (1 + 1e-12)) throw std::out_of_range("theta outside the channel grid");
  std::size_t k = 0;
  while (k + 1 < tables.size() && tables[k + 1].params.theta <= a) ++k;
  const double sign = theta < 0 ? -1.0 : 1.0;

  std::vector<Outcome> out;
  auto emit = [&](double w, double phi, double q, std::uint64_t key) {
    if (w > 0.0) out.push_back({w, fold_angle(sign * phi), q, key});
  };
  if (a == tables[k].params.theta || k + 1 == tables.size()) {
    for (const auto& e : tables[k].entries) {
      auto [phi, q] = phi_q(e.channel);
      emit(e.weight, phi, q, e.key);
    }
    return out;
  }
  const auto& A = tables[k].entries;
  const auto& B = tables[k + 1].entries;
  const double t = (a - tables[k].params.theta) / (tables[k + 1].params.theta - tables[k].params.theta);
  std::size_t i = 0, j = 0;
  while (i < A.size() || j < B.size()) {
    if (j == B.size() || (i < A.size() && A[i].key < B[j].key)) {
      auto [phi, q] = phi_q(A[i].channel);
      emit((1 - t) * A[i].weight, phi, q, A[i].key);
      ++i;
    } else if (i == A.size() || B[j].key < A[i].key) {
      auto [phi, q] = phi_q(B[j].channel);
      emit(t * B[j].weight, phi, q, B[j].key);
      ++j;
    } else {
      auto [pa, qa] = phi_q(A[i].channel);
      auto [pb, qb] = phi_q(B[j].channel);
      emit((1 - t) * A[i].weight + t * B[j].weight, interp_signed(pa, pb, t), interp_signed(qa, qb, t), A[i].key);
      ++i;
      ++j;
    }
  }
  return out;
}

EmpiricalKernel build_kernel(const ChannelGrid& grid, const std::vector<double>& actions) {
  EmpiricalKernel k{actions, {}};
  for (double theta : actions) k.outcomes.push_back(interpolate_outcomes(grid, theta));
  return k;
}

std::uint64_t kernel_hash(const EmpiricalKernel& kernel) { return name_hash(to_json(kernel).dump()); }

Solution value_iterate(const ControlGrid& grid, const EmpiricalKernel& kernel, int workers, double cost_scale) {
  const int nphi = grid.n_phi(), nq = grid.n_q();
  const int rotations = static_cast<int>(grid.actions.size());
  if (static_cast<int>(kernel.outcomes.size()) != rotations) throw std::invalid_argument("kernel does not match grid actions");
  for (int a = 0; a < rotations; ++a) {
    double total = 0.0;
    for (const auto& o : kernel.outcomes[a]) {
      if (o.q < 0.0 || o.q > 0.5 + 1e-12) throw std::invalid_argument("kernel q outside [0, 1/2]");
      total += o.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("kernel weights are not normalized");
  }

  // Transition tables: next residual bin per (action, row, outcome) and next
  // Q bin per (action, outcome, column).
  Solution sol;
  std::vector<std::vector<int>> dnext(rotations), qnext(rotations);
  for (int a = 0; a < rotations; ++a) {
    const auto& outs = kernel.outcomes[a];
    const int no = static_cast<int>(outs.size());
    dnext[a].resize(static_cast<std::size_t>(nphi) * no);
    qnext[a].resize(static_cast<std::size_t>(no) * nq);
    for (int i = 0; i < nphi; ++i)
      for (int o = 0; o < no; ++o) dnext[a][i * no + o] = grid.delta_bin(fold_angle(grid.delta_centers[i] - outs[o].phi));
    for (int o = 0; o < no; ++o)
      for (int j = 0; j < nq; ++j) {
        const double q = update_q(grid.q_centers[j], outs[o].q);
        if (q > grid.q_edges.back()) ++sol.clamped;
        qnext[a][o * nq + j] = grid.q_bin(q);
      }
  }

  const int start = grid.cell(grid.start_bin(), 0);
  std::vector<double> v(grid.num_cells(), 0.0), next(grid.num_cells(), 0.0);
  std::vector<int> policy(grid.num_cells(), grid.reset_action());
  const double cost = cost_scale;
  for (int it = 0; it < grid.max_iterations; ++it) {
    parallel_for(nphi, workers, [&](long i) {
      std::vector<double> acc(nq), best(nq, std::numeric_limits<double>::infinity());
      std::vector<int> arg(nq, grid.reset_action());
      for (int a = 0; a < rotations; ++a) {
        const auto& outs = kernel.outcomes[a];
        const int no = static_cast<int>(outs.size());
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int o = 0; o < no; ++o) {
          const double* row = v.data() + static_cast<std::size_t>(dnext[a][i * no + o]) * nq;
          const int* qn = qnext[a].data() + static_cast<std::size_t>(o) * nq;
          const double w = outs[o].weight;
          for (int j = 0; j < nq; ++j) acc[j] += w * row[qn[j]];
        }
        for (int j = 0; j < nq; ++j) {
          const double c = cost + grid.gamma * acc[j];
          if (c < best[j]) {
            best[j] = c;
            arg[j] = a;
          }
        }
      }
      const double reset = cost + grid.gamma * v[start];
      for (int j = 0; j < nq; ++j) {
        if (reset < best[j]) {
          best[j] = reset;
          arg[j] = grid.reset_action();
        }
        const int c = grid.cell(static_cast<int>(i), j);
        next[c] = grid.terminal(static_cast<int>(i), j) ? 0.0 : best[j];
        policy[c] = arg[j];
      }
    });
    double residual = 0.0;
    for (std::size_t c = 0; c < v.size(); ++c) residual = std::max(residual, std::abs(next[c] - v[c]));
    if (!sol.residuals.empty() && residual > sol.residuals.back() * (1 + 1e-9) + 1e-12)
      throw std::runtime_error("Bellman residual increased between sweeps");
    sol.residuals.push_back(residual);
    v.swap(next);
    sol.iterations = it + 1;
    if (residual < grid.delta_tol * cost_scale) {
      sol.v = std::move(v);
      sol.policy = std::move(policy);
      return sol;
    }
  }
  throw std::runtime_error("value iteration did not converge within " + std::to_string(grid.max_iterations) +
                           " sweeps");
}

nlohmann::json to_json(const ControlGrid& g) {
  return {{"target", g.target}, {"eps", g.eps},       {"mag_edges", g.mag_edges}, {"delta_centers", g.delta_centers},
          {"q_edges", g.q_edges}, {"q_centers", g.q_centers}, {"actions", g.actions}, {"gamma", g.gamma},
          {"delta_tol", g.delta_tol}, {"q_acc", g.q_acc}, {"max_iterations", g.max_iterations}};
}

ControlGrid grid_from_json(const nlohmann::json& j) {
  ControlGrid g;
  g.target = j.at("target").get<double>();
  g.eps = j.at("eps").get<double>();
  g.mag_edges = j.at("mag_edges").get<std::vector<double>>();
  g.delta_centers = j.at("delta_centers").get<std::vector<double>>();
  g.q_edges = j.at("q_edges").get<std::vector<double>>();
  g.q_centers = j.at("q_centers").get<std::vector<double>>();
  g.actions = j.at("actions").get<std::vector<double>>();
  g.gamma = j.at("gamma").get<double>();
  g.delta_tol = j.at("delta_tol").get<double>();
  g.q_acc = j.at("q_acc").get<double>();
  g.max_iterations = j.at("max_iterations").get<int>();
  return g;
}

nlohmann::json to_json(const EmpiricalKernel& k) {
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& list : k.outcomes) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& o : list) rows.push_back({o.weight, o.phi, o.q, o.key});
    outs.push_back(rows);
  }
  return {{"actions", k.actions}, {"outcomes", outs}};
}

EmpiricalKernel kernel_from_json(const nlohmann::json& j) {
  EmpiricalKernel k;
  k.actions = j.at("actions").get<std::vector<double>>();
  for (const auto& list : j.at("outcomes")) {
    std::vector<Outcome> outs;
    for (const auto& r : list)
      outs.push_back({r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(), r.at(3).get<std::uint64_t>()});
    k.outcomes.push_back(std::move(outs));
  }
  return k;
}

nlohmann::json to_json(const PolicyBundle& b) {
  return {{"grid", to_json(b.grid)},
          {"kernel", to_json(b.kernel)},
          {"kernel_hash", b.hash},
          {"iterations", b.solution.iterations},
          {"residuals", b.solution.residuals},
          {"v", b.solution.v},
          {"policy", b.solution.policy}};
}

PolicyBundle bundle_from_json(const nlohmann::json& j) {
  PolicyBundle b;
  b.grid = grid_from_json(j.at("grid"));
  b.kernel = kernel_from_json(j.at("kernel"));
  b.hash = j.at("kernel_hash").get<std::uint64_t>();
  if (b.hash != kernel_hash(b.kernel)) throw std::runtime_error("policy kernel hash mismatch");
  b.solution.iterations = j.at("iterations").get<int>();
  b.solution.residuals = j.at("residuals").get<std::vector<double>>();
  b.solution.v = j.at("v").get<std::vector<double>>();
  b.solution.policy = j.at("policy").get<std::vector<int>>();
  if (static_cast<int>(b.solution.policy.size()) != b.grid.num_cells()) throw std::runtime_error("policy size mismatch");
  for (int a : b.solution.policy)
    if (a < 0 || a >= b.grid.n_actions()) throw std::runtime_error("policy holds an invalid action");
  return b;
}

nlohmann::json to_json(const ChannelGrid& g) {
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& t : g.tables) tables.push_back(to_json(t));
  return {{"d", g.d}, {"p", g.p}, {"tables", tables}};
}

ChannelGrid channel_grid_from_json(const nlohmann::json& j) {
  ChannelGrid g;
  g.d = j.at("d").get<int>();
  g.p = j.at("p").get<double>();
  for (const auto& t : j.at("tables")) g.tables.push_back(table_from_json(t));
  return g;
}

}  // namespace rrot
