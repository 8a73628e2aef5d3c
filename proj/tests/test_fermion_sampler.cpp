#include <cmath>
#include <map>
#include <numbers>

#include "doctest.h"
#include "rrot/channel.hpp"
#include "rrot/decoder.hpp"
#include "rrot/fermion_sampler.hpp"
#include "test_util.hpp"

using namespace rrot;

namespace {

std::vector<double> histogram(const SyndromeSampler& sampler, int count, std::uint64_t seed) {
  std::vector<double> h(std::size_t{1} << sampler.code().num_checks(), 0.0);
  Rng rng(seed);
  for (int i = 0; i < count; ++i) h[pack(sampler.sample(rng))] += 1.0;
  return h;
}

}  // namespace

TEST_CASE("links cover every check with two modes per qubit") {
  for (int d : {3, 5}) {
    auto code = build_code(d);
    auto layout = build_links(code);
    CHECK(static_cast<int>(layout.links.size()) == 2 * code.n - 2);
    std::vector<int> used(4 * code.n, 0);
    for (const auto& l : layout.links) {
      used[l.a]++;
      used[l.b]++;
    }
    int dangling = 0;
    for (int u : used) {
      CHECK(u <= 1);
      dangling += u == 0;
    }
    CHECK(dangling == 4);
    for (std::size_t f = 0; f < code.x_faces.size(); ++f)
      CHECK(layout.x_face_links[f].size() == code.x_faces[f].qubits.size());
  }
}

TEST_CASE("initial state is a pure Gaussian state with trivial X checks") {
  auto code = build_code(3);
  auto layout = build_links(code);
  auto st = init_code_state(code);
  CHECK(check_state(st, 1e-12).empty());
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    auto copy = st;
    for (std::size_t f = 0; f < layout.x_face_links.size(); ++f) {
      int v = layout.x_sign[f];
      for (int id : layout.x_face_links[f]) v *= measure_link(copy, layout.links[id].a, layout.links[id].b, rng);
      CHECK(v == 1);
    }
    CHECK(check_state(copy).empty());
  }
}

TEST_CASE("theta=0 leaves the state unchanged") {
  auto code = build_code(3);
  auto st = init_code_state(code);
  auto rotated = st;
  apply_transversal_rotation(rotated, 0.0);
  CHECK((rotated.m - st.m).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("theta=pi/2 acts as logical Z: X checks unchanged") {
  auto code = build_code(3);
  auto st = init_code_state(code);
  apply_transversal_rotation(st, std::numbers::pi / 2);
  for (int q = 0; q < code.n; ++q) CHECK(st.m(4 * q, 4 * q + 1) == doctest::Approx(-1.0));
  SyndromeSampler sampler(code, std::numbers::pi / 2);
  Rng rng(5);
  for (int i = 0; i < 200; ++i) CHECK(weight(sampler.sample(rng)) == 0);
}

TEST_CASE("theta=0 always yields the trivial syndrome") {
  SyndromeSampler sampler(build_code(5), 0.0);
  Rng rng(9);
  for (int i = 0; i < 20; ++i) CHECK(weight(sampler.sample(rng)) == 0);
}

TEST_CASE("measure_link on an eigenstate is deterministic and idempotent") {
  auto code = build_code(3);
  auto st = init_code_state(code);
  Rng rng(11);
  auto before = st.m;
  CHECK(measure_link(st, 0, 1, rng) == 1);
  CHECK((st.m - before).cwiseAbs().maxCoeff() < 1e-14);
  apply_transversal_rotation(st, 0.3);
  const int first = measure_link(st, 0, 4, rng);
  auto after = st.m;
  for (int i = 0; i < 5; ++i) CHECK(measure_link(st, 0, 4, rng) == first);
  CHECK((st.m - after).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS(project_link(st, 3, 3, 1));
}

TEST_CASE("link outcome frequency matches the covariance entry") {
  auto code = build_code(3);
  auto st = init_code_state(code);
  apply_transversal_rotation(st, 0.1 * std::numbers::pi);
  auto layout = build_links(code);
  const auto link = layout.links[0];
  const double expected = 0.5 * (1 + st.m(link.a, link.b));
  Rng rng(13);
  const int shots = 5000;
  int plus = 0;
  for (int i = 0; i < shots; ++i) {
    auto copy = st;
    plus += measure_link(copy, link.a, link.b, rng) == 1;
  }
  const double sigma = std::sqrt(expected * (1 - expected) / shots);
  CHECK(std::abs(plus / double(shots) - expected) < 3 * sigma + 1e-12);
}

TEST_CASE("purity and antisymmetry survive random programs") {
  auto code = build_code(3);
  Rng rng(17);
  std::uniform_int_distribution<int> mode(0, 4 * code.n - 1);
  for (int program = 0; program < 20; ++program) {
    auto st = init_code_state(code);
    for (int step = 0; step < 40; ++step) {
      if (step % 3 == 0) {
        apply_transversal_rotation(st, uniform01(rng) - 0.5);
      } else {
        int k = mode(rng), l = mode(rng);
        if (k == l) continue;
        measure_link(st, k, l, rng);
      }
    }
    CHECK(check_state(st).empty());
  }
}

TEST_CASE("syndrome distribution matches the statevector oracle") {
  auto code = build_code(3);
  for (double t : {0.08, 0.1}) {
    const double theta = t * std::numbers::pi;
    auto h = histogram(SyndromeSampler(code, theta), 5000, 21);
    auto chi = testutil::chi_square(h, oracle_syndrome_distribution(code, theta));
    INFO("theta/pi=" << t << " chi2=" << chi.statistic << " dof=" << chi.dof);
    CHECK(chi.p_value > 0.01);
  }
}

TEST_CASE("rejection sampling agrees with the oracle") {
  auto code = build_code(3);
  const double theta = 0.09 * std::numbers::pi;
  auto h = histogram(SyndromeSampler(code, theta, SamplingMethod::Rejection), 4000, 22);
  auto chi = testutil::chi_square(h, oracle_syndrome_distribution(code, theta));
  INFO("chi2=" << chi.statistic << " dof=" << chi.dof);
  CHECK(chi.p_value > 0.01);
}

TEST_CASE("d=5 syndrome distribution matches the contracted channel") {
  auto code = build_code(5);
  auto graph = build_graph(code);
  const double theta = 0.05 * std::numbers::pi;
  const int n = 6000;
  SyndromeSampler sampler(code, theta);
  Rng rng(23);
  std::map<std::uint64_t, double> h;
  for (int i = 0; i < n; ++i) h[pack(sampler.sample(rng))] += 1.0;
  std::vector<double> counts, probs;
  double rest = n, prest = 1.0;
  for (const auto& [key, c] : h) {
    auto s = unpack(key, code.num_checks());
    const double p = logical_channel_tn(code, {theta, 0.0}, s, decode(graph, s)).p_s;
    if (p * n < 5.0) continue;
    counts.push_back(c);
    probs.push_back(p);
    rest -= c;
    prest -= p;
  }
  counts.push_back(rest);
  probs.push_back(prest);
  auto chi = testutil::chi_square(counts, probs);
  INFO("chi2=" << chi.statistic << " dof=" << chi.dof);
  CHECK(chi.p_value > 0.01);
}

TEST_CASE("pfaffian and link products") {
  Eigen::MatrixXd a(4, 4);
  a << 0, 1.5, -0.3, 0.7, -1.5, 0, 2.0, -0.4, 0.3, -2.0, 0, 0.9, -0.7, 0.4, -0.9, 0;
  CHECK(pfaffian(a) == doctest::Approx(1.5 * 0.9 - (-0.3) * (-0.4) + 0.7 * 2.0));
  Eigen::MatrixXd b = Eigen::MatrixXd::Random(6, 6);
  b = b - b.transpose().eval();
  CHECK(pfaffian(b) * pfaffian(b) == doctest::Approx(b.determinant()).epsilon(1e-10));

  // P(o1, o2) from the moments must equal the sequential projection probability.
  auto code = build_code(3);
  auto layout = build_links(code);
  auto st = init_code_state(code);
  apply_transversal_rotation(st, 0.11 * std::numbers::pi);
  const auto& ids = layout.z_face_links[1];
  REQUIRE(ids.size() >= 2);
  const Link l0 = layout.links[ids[0]], l1 = layout.links[ids[1]];
  const double m0 = link_product_expectation(st, {l0});
  const double m1 = link_product_expectation(st, {l1});
  const double m01 = link_product_expectation(st, {l0, l1});
  for (int o0 : {1, -1}) {
    for (int o1 : {1, -1}) {
      auto copy = st;
      const double seq = project_link(copy, l0.a, l0.b, o0) * project_link(copy, l1.a, l1.b, o1);
      CHECK((1 + o0 * m0 + o1 * m1 + o0 * o1 * m01) / 4 == doctest::Approx(seq).epsilon(1e-10));
    }
  }
}

TEST_CASE("syndrome distribution is even in theta") {
  auto code = build_code(3);
  const double theta = 0.08 * std::numbers::pi;
  const int n = 5000;
  auto a = histogram(SyndromeSampler(code, theta), n, 31);
  auto b = histogram(SyndromeSampler(code, -theta), n, 32);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(testutil::z_diff(a[k] / n, n, b[k] / n, n) < 4.0);
}

TEST_CASE("dephasing composition") {
  auto code = build_code(3);
  Rng rng(41);
  SyndromeSampler coherent(code, 0.07 * std::numbers::pi);
  for (int i = 0; i < 50; ++i) {
    auto smp = coherent.sample_with_dephasing(0.0, rng);
    CHECK(weight(smp.e) == 0);
    CHECK(smp.s == smp.s0);
  }
  SyndromeSampler flat(code, 0.0);
  for (int i = 0; i < 200; ++i) {
    auto smp = flat.sample_with_dephasing(0.2, rng);
    CHECK(smp.s == syndrome_of(code, smp.e));
    CHECK(smp.s == xor_bits(smp.s0, syndrome_of(code, smp.e)));
  }
}

TEST_CASE("dephasing scrambles the syndrome distribution") {
  // Samples conditioned on one fixed error e must follow p(s xor H_X e | theta, 0).
  auto code = build_code(3);
  const double theta = 0.08 * std::numbers::pi;
  PauliZMask e(code.n, 0);
  e[4] = 1;
  const auto shift = pack(syndrome_of(code, e));
  auto base = oracle_syndrome_distribution(code, theta);
  auto with_error = oracle_syndrome_distribution(code, theta, &e);
  for (std::size_t k = 0; k < base.size(); ++k) CHECK(with_error[k] == doctest::Approx(base[k ^ shift]).epsilon(1e-12));

  SyndromeSampler sampler(code, theta);
  Rng rng(43);
  const int n = 5000;
  std::vector<double> conditioned(base.size(), 0.0), clean(base.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    conditioned[pack(xor_bits(sampler.sample(rng), syndrome_of(code, e)))] += 1.0;
    clean[pack(sampler.sample(rng))] += 1.0;
  }
  for (std::size_t k = 0; k < base.size(); ++k)
    CHECK(testutil::z_diff(conditioned[k] / n, n, clean[k ^ shift] / n, n) < 4.0);
}

TEST_CASE("batch sampling is independent of the worker count") {
  auto code = build_code(3);
  NoiseParams params{0.06 * std::numbers::pi, 0.01};
  auto a = sample_batch(code, params, 200, 99, 1);
  auto b = sample_batch(code, params, 200, 99, 4);
  for (int i = 0; i < 200; ++i) {
    CHECK(a[i].s == b[i].s);
    CHECK(a[i].e == b[i].e);
  }
}
