#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rrot/policy.hpp"

using namespace rrot;

namespace {

constexpr double kPi = std::numbers::pi;

ChannelParams chan(double phi, double q) { return {0.0, phi, q, false}; }

// Two hand-made tables at theta = 0.1 and 0.2.
ChannelGrid synthetic_grid() {
  ChannelGrid g{3, 0.0, {}};
  SyndromeTable a{3, {0.1, 0.0}, 100, {{0, 60, 0.6, chan(0.01, 1e-4)}, {3, 40, 0.4, chan(-0.2, 1e-3)}}};
  SyndromeTable b{3, {0.2, 0.0}, 100, {{0, 60, 0.6, chan(0.04, 4e-4)}, {5, 40, 0.4, chan(0.3, 2e-3)}}};
  g.tables = {a, b};
  return g;
}

const ChannelGrid& d3_grid() {
  static const ChannelGrid grid = [] {
    static auto code = build_code(3);
    static auto graph = build_graph(code);
    static ChannelCache cache(code, graph);
    std::vector<double> thetas;
    for (int k = 0; k <= 16; ++k) thetas.push_back(0.01 * k * kPi);
    return build_channel_grid(cache, 0.001, thetas, 2000, 17, 1);
  }();
  return grid;
}

}  // namespace

TEST_CASE("control grid layout") {
  const double target = 0.1;
  auto g = make_grid(target, 0.16 * kPi, 1e-3);
  CHECK(g.n_phi() == 201);
  CHECK(g.n_q() == 21);
  CHECK(g.n_actions() == 201);
  CHECK(g.reset_action() == 200);
  for (std::size_t k = 1; k < g.mag_edges.size(); ++k) CHECK(g.mag_edges[k] > g.mag_edges[k - 1]);
  for (std::size_t k = 1; k < g.q_edges.size(); ++k) CHECK(g.q_edges[k] > g.q_edges[k - 1]);
  for (int i = 1; i < g.n_phi(); ++i) CHECK(g.delta_centers[i] > g.delta_centers[i - 1]);
  CHECK(g.mag_edges.front() == doctest::Approx(0.01 * target));
  CHECK(g.mag_edges.back() == doctest::Approx(kPi / 2));
  CHECK(g.delta_centers[g.start_bin()] == doctest::Approx(target).epsilon(1e-12));
  CHECK(g.delta_bin(0.0) == g.zero_bin());
  CHECK(g.delta_bin(0.5 * g.eps) == g.zero_bin());
  CHECK(g.delta_bin(-0.5 * g.eps) == g.zero_bin());
  CHECK(g.delta_bin(kPi / 2) == g.n_phi() - 1);
  CHECK(g.delta_bin(-kPi / 2 + 1e-9) == 0);
  for (int i = 0; i < g.n_phi(); ++i) CHECK(g.delta_bin(g.delta_centers[i]) == i);
  for (int j = 0; j < g.n_q(); ++j) CHECK(g.q_bin(g.q_centers[j]) == j);
  CHECK(std::find(g.q_edges.begin(), g.q_edges.end(), 1e-3) != g.q_edges.end());
  for (int a = 0; a < 200; ++a) CHECK(g.actions[a] == -g.actions[199 - a]);
  CHECK(g.actions.front() == doctest::Approx(-0.16 * kPi));
  // Terminal cells: zero residual and Q at most q_acc.
  CHECK(g.terminal(g.zero_bin(), 0));
  CHECK_FALSE(g.terminal(g.zero_bin(), g.n_q() - 1));
  CHECK_FALSE(g.terminal(g.zero_bin() + 1, 0));

  CHECK_THROWS_AS(make_grid(0.0, 0.1, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(0.1, 0.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(2.0, 0.1, 1e-3), std::invalid_argument);
  GridOptions even;
  even.n_phi = 200;
  CHECK_THROWS_AS(make_grid(0.1, 0.1, 1e-3, even), std::invalid_argument);
}

TEST_CASE("Q update closure over the grid") {
  auto g = make_grid(0.2, 0.16 * kPi, 2e-3);
  std::vector<double> qs = g.q_centers;
  qs.insert(qs.end(), g.q_edges.begin(), g.q_edges.end());
  qs.push_back(0.0);
  for (double a : qs)
    for (double b : qs) {
      const double q = update_q(a, b);
      CHECK(q >= 0.0);
      CHECK(q <= 0.5 + 1e-15);
    }
  for (double q : {0.0, 0.01, 0.3, 0.5}) CHECK(update_q(0.5, q) == doctest::Approx(0.5));
}

TEST_CASE("kernel interpolation") {
  auto g = synthetic_grid();
  SUBCASE("grid point is returned unmodified") {
    auto out = interpolate_outcomes(g, 0.1);
    REQUIRE(out.size() == 2);
    CHECK(out[0].weight == 0.6);
    CHECK(out[0].phi == 0.01);
    CHECK(out[0].q == 1e-4);
    CHECK(out[1].phi == -0.2);
  }
  SUBCASE("midpoint with equal weight interpolates log magnitudes") {
    auto out = interpolate_outcomes(g, 0.15);
    REQUIRE(out.size() == 3);
    CHECK(out[0].key == 0);
    CHECK(out[0].weight == doctest::Approx(0.6));
    CHECK(std::log(out[0].phi) == doctest::Approx(0.5 * (std::log(0.01) + std::log(0.04))));
    CHECK(std::log(out[0].q) == doctest::Approx(0.5 * (std::log(1e-4) + std::log(4e-4))));
    // Syndromes seen at one end only keep their channel and lose weight.
    CHECK(out[1].key == 3);
    CHECK(out[1].weight == doctest::Approx(0.2));
    CHECK(out[1].phi == -0.2);
    CHECK(out[2].weight == doctest::Approx(0.2));
    double total = 0.0;
    for (const auto& o : out) total += o.weight;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("opposite signs fall back to linear values") {
    auto h = g;
    h.tables[1].entries[0].channel.phi_s = -0.04;
    auto out = interpolate_outcomes(h, 0.15);
    CHECK(out[0].phi == doctest::Approx(-0.015));
  }
  SUBCASE("negative theta mirrors phi") {
    auto pos = interpolate_outcomes(g, 0.13);
    auto neg = interpolate_outcomes(g, -0.13);
    REQUIRE(pos.size() == neg.size());
    for (std::size_t k = 0; k < pos.size(); ++k) {
      CHECK(neg[k].weight == pos[k].weight);
      CHECK(neg[k].phi == doctest::Approx(-pos[k].phi));
      CHECK(neg[k].q == pos[k].q);
    }
  }
  SUBCASE("off grid") {
    CHECK_THROWS_AS(interpolate_outcomes(g, 0.05), std::out_of_range);
    CHECK_THROWS_AS(interpolate_outcomes(g, 0.25), std::out_of_range);
  }
  SUBCASE("degenerate channels count as full dephasing") {
    auto h = g;
    h.tables[0].entries[1].channel.degenerate = true;
    auto out = interpolate_outcomes(h, 0.1);
    CHECK(out[1].phi == 0.0);
    CHECK(out[1].q == 0.5);
  }
}

TEST_CASE("held-out angle is recovered by interpolation") {
  // Drop 0.08pi from the d=3 grid and interpolate it from its neighbours.
  auto full = d3_grid();
  const double theta = 0.08 * kPi;
  ChannelGrid held{full.d, full.p, {}};
  for (const auto& t : full.tables)
    if (std::abs(t.params.theta - theta) > 1e-12) held.tables.push_back(t);
  auto code = build_code(3);
  auto graph = build_graph(code);
  const Syndrome zero(code.num_checks(), 0);
  const double direct = logical_channel_tn(code, {theta, 0.001}, zero, decode(graph, zero)).phi_s;
  double interpolated = 0.0;
  for (const auto& o : interpolate_outcomes(held, theta))
    if (o.key == 0) interpolated = o.phi;
  INFO("direct " << direct << " interpolated " << interpolated);
  CHECK(std::abs(interpolated - direct) < 0.05 * std::abs(direct));
}

TEST_CASE("deterministic toy kernel: one step to target") {
  const double target = 0.1;
  const std::vector<double> actions{0.05, 0.1, 0.2};
  auto g = make_grid(target, actions, 1e-3);
  EmpiricalKernel k{actions, {}};
  for (double a : actions) k.outcomes.push_back({{1.0, a, 0.0, 0}});
  auto sol = value_iterate(g, k);
  const int start = g.cell(g.start_bin(), 0);
  CHECK(sol.v[start] == doctest::Approx(1.0));
  CHECK(sol.policy[start] == 1);
  for (int j = 0; j < g.n_q(); ++j)
    if (g.terminal(g.zero_bin(), j)) CHECK(sol.v[g.cell(g.zero_bin(), j)] == 0.0);
  for (std::size_t i = 1; i < sol.residuals.size(); ++i) CHECK(sol.residuals[i] <= sol.residuals[i - 1]);
}

TEST_CASE("two-cell chain with reset-only escape matches the closed form") {
  // One rotation: success with probability r, otherwise full dephasing, after
  // which Q = 1/2 is absorbing and only a reset helps.
  // V_S = 1 + g (1-r) V_X, V_X = 1 + g V_S.
  const double target = 0.1, r = 0.3;
  const std::vector<double> actions{0.07};
  GridOptions opt;
  opt.delta_tol = 1e-12;
  auto g = make_grid(target, actions, 1e-3, opt);
  EmpiricalKernel k{actions, {{{r, target, 0.0, 0}, {1 - r, target, 0.5, 1}}}};
  auto sol = value_iterate(g, k);
  const double gm = g.gamma;
  const double vs = (1 + gm * (1 - r)) / (1 - gm * gm * (1 - r));
  const double vx = 1 + gm * vs;
  CHECK(sol.v[g.cell(g.start_bin(), 0)] == doctest::Approx(vs).epsilon(1e-6));
  const int x = g.cell(g.zero_bin(), g.q_bin(0.5));
  CHECK(sol.v[x] == doctest::Approx(vx).epsilon(1e-6));
  CHECK(sol.policy[x] == g.reset_action());
  CHECK(sol.policy[g.cell(g.start_bin(), 0)] == 0);
  for (std::size_t i = 1; i < sol.residuals.size(); ++i) CHECK(sol.residuals[i] <= sol.residuals[i - 1]);
}

TEST_CASE("non-convergence is reported") {
  const std::vector<double> actions{0.07};
  GridOptions opt;
  opt.max_iterations = 3;
  auto g = make_grid(0.1, actions, 1e-3, opt);
  EmpiricalKernel k{actions, {{{0.5, 0.1, 0.0, 0}, {0.5, 0.1, 0.5, 1}}}};
  CHECK_THROWS_AS(value_iterate(g, k), std::runtime_error);
  EmpiricalKernel bad{actions, {{{0.7, 0.1, 0.0, 0}}}};
  CHECK_THROWS_AS(value_iterate(make_grid(0.1, actions, 1e-3), bad), std::invalid_argument);
}

TEST_CASE("d=3 kernel: normalization, scaling invariance and reset sanity") {
  GridOptions opt;
  opt.n_phi = 61;
  opt.n_q = 11;
  opt.n_theta = 41;
  const double target = 0.2;
  auto g = make_grid(target, 0.16 * kPi, 0.01 * target, opt);
  auto k = build_kernel(d3_grid(), g.actions);
  for (const auto& outs : k.outcomes) {
    double total = 0.0;
    for (const auto& o : outs) {
      total += o.weight;
      CHECK(o.q >= 0.0);
      CHECK(o.q <= 0.5);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
  auto base = value_iterate(g, k);
  for (double scale : {4.0, 0.25}) {
    auto scaled = value_iterate(g, k, 1, scale);
    CHECK(scaled.policy == base.policy);
  }
  for (std::size_t i = 1; i < base.residuals.size(); ++i) CHECK(base.residuals[i] <= base.residuals[i - 1]);
  for (int j = 0; j < g.n_q(); ++j) {
    const int c = g.cell(g.zero_bin(), j);
    if (g.terminal(g.zero_bin(), j)) {
      CHECK(base.v[c] == 0.0);
    } else {
      CHECK(base.v[c] >= 1.0);
      CHECK(base.policy[c] >= 0);
      CHECK(base.policy[c] < g.n_actions());
    }
  }
  const auto two = value_iterate(g, k, 2);
  CHECK(two.v == base.v);
  CHECK(two.policy == base.policy);
}

TEST_CASE("policy serialization round trip") {
  const std::vector<double> actions{0.05, 0.1};
  PolicyBundle b;
  b.grid = make_grid(0.1, actions, 1e-3);
  b.kernel = EmpiricalKernel{actions, {{{1.0, 0.05, 0.0, 0}}, {{0.5, 0.1, 1e-4, 0}, {0.5, -0.2, 1e-3, 9}}}};
  b.hash = kernel_hash(b.kernel);
  b.solution = value_iterate(b.grid, b.kernel);
  auto back = bundle_from_json(nlohmann::json::parse(to_json(b).dump()));
  CHECK(back.solution.policy == b.solution.policy);
  CHECK(back.solution.v == b.solution.v);
  CHECK(back.grid.mag_edges == b.grid.mag_edges);
  CHECK(back.grid.q_edges == b.grid.q_edges);
  CHECK(back.hash == b.hash);
  auto j = to_json(b);
  j["kernel"]["outcomes"][0][0][1] = 0.06;
  CHECK_THROWS(bundle_from_json(j));

  auto cg = synthetic_grid();
  auto cg2 = channel_grid_from_json(nlohmann::json::parse(to_json(cg).dump()));
  REQUIRE(cg2.tables.size() == 2);
  CHECK(cg2.tables[1].entries[1].channel.phi_s == 0.3);
  CHECK(cg2.tables[0].entries[0].weight == 0.6);
}
