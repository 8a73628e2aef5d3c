#include "rrot/fermion_sampler.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>

#include "rrot/parallel.hpp"

namespace rrot {

namespace {

// C4 slot (0..3) used by each edge direction at a vertex. The choice makes
// every X face use slots {0,1} or {2,3} and every Z face {0,2} or {1,3}.
int slot(const SurfaceCode& code, int r, int c, Direction dir) {
  (void)code;
  if (SurfaceCode::is_x_face(r - 1, c - 1)) {
    static const int m[4] = {0, 2, 3, 1};  // up, right, down, left
    return m[dir];
  }
  static const int m[4] = {0, 1, 3, 2};
  return m[dir];
}

// Sign relating the single-qubit pair operator i c_u c_v to X or Z on S=+1.
int pair_sign(int u, int v) {
  if (u > v) std::swap(u, v);
  if (u == 1 && v == 3) return -1;  // i c2 c4 = -S Z
  return 1;                         // i c1 c2 = X, i c3 c4 = S X, i c1 c3 = Z
}

int check_sign(const std::vector<Link>& links, const std::vector<int>& ids) {
  std::vector<int> seq;
  std::map<int, std::vector<int>> by_qubit;
  for (int id : ids) {
    seq.push_back(links[id].a);
    seq.push_back(links[id].b);
    by_qubit[links[id].a / 4].push_back(links[id].a);
    by_qubit[links[id].b / 4].push_back(links[id].b);
  }
  std::vector<int> target;
  int sign = 1;
  for (auto& [q, modes] : by_qubit) {
    if (modes.size() != 2) throw std::logic_error("face does not use two modes per qubit");
    int u = std::min(modes[0], modes[1]), v = std::max(modes[0], modes[1]);
    sign *= pair_sign(u - 4 * q, v - 4 * q);
    target.push_back(u);
    target.push_back(v);
  }
  std::map<int, int> pos;
  for (std::size_t i = 0; i < target.size(); ++i) pos[target[i]] = static_cast<int>(i);
  int inversions = 0;
  for (std::size_t i = 0; i < seq.size(); ++i)
    for (std::size_t j = i + 1; j < seq.size(); ++j)
      if (pos[seq[i]] > pos[seq[j]]) ++inversions;
  return (inversions % 2 ? -1 : 1) * sign;
}

}  // namespace

int edge_mode(const SurfaceCode& code, int r, int c, Direction dir) {
  return 4 * code.qubit(r, c) + slot(code, r, c, dir);
}

LinkLayout build_links(const SurfaceCode& code) {
  const int d = code.d;
  LinkLayout layout;
  std::map<std::pair<int, int>, int> horizontal, vertical;
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) {
      if (c + 1 < d) {
        horizontal[{r, c}] = static_cast<int>(layout.links.size());
        layout.links.push_back({edge_mode(code, r, c, Right), edge_mode(code, r, c + 1, Left)});
      }
      if (r + 1 < d) {
        vertical[{r, c}] = static_cast<int>(layout.links.size());
        layout.links.push_back({edge_mode(code, r, c, Down), edge_mode(code, r + 1, c, Up)});
      }
    }
  auto face_links = [&](const Face& f) {
    std::vector<int> ids;
    const int r = f.row, c = f.col;
    if (f.qubits.size() == 4) {
      ids = {horizontal.at({r, c}), horizontal.at({r + 1, c}), vertical.at({r, c}), vertical.at({r, c + 1})};
      return ids;
    }
    Link b;
    if (c == -1 || c == d - 1) {
      const int cc = c == -1 ? 0 : d - 1;
      const Direction dir = c == -1 ? Left : Right;
      ids.push_back(vertical.at({r, cc}));
      b = {edge_mode(code, r, cc, dir), edge_mode(code, r + 1, cc, dir)};
    } else {
      const int rr = r == -1 ? 0 : d - 1;
      const Direction dir = r == -1 ? Up : Down;
      ids.push_back(horizontal.at({rr, c}));
      b = {edge_mode(code, rr, c, dir), edge_mode(code, rr, c + 1, dir)};
    }
    ids.push_back(static_cast<int>(layout.links.size()));
    layout.links.push_back(b);
    return ids;
  };
  for (const auto& f : code.x_faces) layout.x_face_links.push_back(face_links(f));
  for (const auto& f : code.z_faces) layout.z_face_links.push_back(face_links(f));
  for (const auto& ids : layout.x_face_links) layout.x_sign.push_back(check_sign(layout.links, ids));
  for (const auto& ids : layout.z_face_links) layout.z_sign.push_back(check_sign(layout.links, ids));
  return layout;
}

MajoranaState init_code_state(const SurfaceCode& code) {
  const int nm = 4 * code.n;
  MajoranaState st{Eigen::MatrixXd::Zero(nm, nm)};
  for (int q = 0; q < code.n; ++q) {
    st.m(4 * q, 4 * q + 1) = 1.0;
    st.m(4 * q + 1, 4 * q) = -1.0;
    st.m(4 * q + 2, 4 * q + 3) = 1.0;
    st.m(4 * q + 3, 4 * q + 2) = -1.0;
  }
  return st;
}

void apply_transversal_rotation(MajoranaState& state, double theta) {
  // exp(i theta Z) = exp(-theta c1 c3) maps c1 -> cos c1 - sin c3, c3 -> sin c1 + cos c3.
  const double cs = std::cos(2 * theta), sn = std::sin(2 * theta);
  const int nm = static_cast<int>(state.m.rows());
  for (int base = 0; base < nm; base += 4) {
    const int a = base, b = base + 2;
    Eigen::RowVectorXd ra = state.m.row(a), rb = state.m.row(b);
    state.m.row(a) = cs * ra - sn * rb;
    state.m.row(b) = sn * ra + cs * rb;
    Eigen::VectorXd ca = state.m.col(a), cb = state.m.col(b);
    state.m.col(a) = cs * ca - sn * cb;
    state.m.col(b) = sn * ca + cs * cb;
  }
}

double project_link(MajoranaState& state, int k, int l, int outcome) {
  if (k == l) throw std::invalid_argument("link needs two distinct modes");
  auto& m = state.m;
  const double s = outcome > 0 ? 1.0 : -1.0;
  const double mkl = m(k, l);
  if (std::abs(mkl) > 1.0 + 1e-9) throw std::runtime_error("covariance entry out of range");
  const double prob = 0.5 * (1.0 + s * mkl);
  if (prob <= 1e-14) throw std::runtime_error("projection onto a zero-probability outcome");
  Eigen::VectorXd u = m.col(l), v = m.col(k);
  const double f = s / (2.0 * prob);
  m.noalias() += f * (u * v.transpose() - v * u.transpose());
  m.row(k).setZero();
  m.row(l).setZero();
  m.col(k).setZero();
  m.col(l).setZero();
  m(k, l) = s;
  m(l, k) = -s;
  return prob;
}

int measure_link(MajoranaState& state, int k, int l, Rng& rng) {
  const double p_plus = 0.5 * (1.0 + state.m(k, l));
  if (std::abs(state.m(k, l)) > 1.0 + 1e-9) throw std::runtime_error("covariance entry out of range");
  const int outcome = uniform01(rng) < p_plus ? 1 : -1;
  project_link(state, k, l, outcome);
  return outcome;
}

std::string check_state(const MajoranaState& state, double tol) {
  const auto& m = state.m;
  if ((m + m.transpose()).cwiseAbs().maxCoeff() > tol) return "covariance is not antisymmetric";
  const auto id = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  if ((m.transpose() * m - id).cwiseAbs().maxCoeff() > tol) return "covariance is not orthogonal";
  if (m.cwiseAbs().maxCoeff() > 1.0 + tol) return "covariance entry exceeds 1";
  return {};
}

double pfaffian(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  if (n % 2) return 0.0;
  double result = 1.0;
  // Parlett-Reid style elimination with pivoting on the row below the diagonal.
  for (Eigen::Index k = 0; k + 1 < n; k += 2) {
    Eigen::Index piv;
    a.col(k).tail(n - k - 1).cwiseAbs().maxCoeff(&piv);
    piv += k + 1;
    if (piv != k + 1) {
      a.row(k + 1).swap(a.row(piv));
      a.col(k + 1).swap(a.col(piv));
      result = -result;
    }
    const double pivot = a(k + 1, k);
    if (pivot == 0.0) return 0.0;
    result *= a(k, k + 1);
    if (k + 2 < n) {
      const Eigen::VectorXd tau = a.col(k).tail(n - k - 2) / pivot;
      const Eigen::VectorXd row = a.col(k + 1).tail(n - k - 2);
      a.bottomRightCorner(n - k - 2, n - k - 2).noalias() += tau * row.transpose() - row * tau.transpose();
    }
  }
  return result;
}

double link_product_expectation(const MajoranaState& state, const std::vector<Link>& links) {
  const Eigen::Index k = static_cast<Eigen::Index>(2 * links.size());
  Eigen::MatrixXd sub(k, k);
  std::vector<int> modes;
  for (const auto& l : links) {
    modes.push_back(l.a);
    modes.push_back(l.b);
  }
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = state.m(modes[i], modes[j]);
  return pfaffian(sub);
}

namespace {

// Draws outcomes for all links of one Z face conditioned on sign * product = +1
// and projects the state onto them.
void sample_face(MajoranaState& st, const LinkLayout& layout, const std::vector<int>& ids, int sign,
                 std::vector<int>& outcome, Rng& rng) {
  const int k = static_cast<int>(ids.size());
  std::vector<double> moment(std::size_t{1} << k, 1.0);
  for (std::size_t sub = 1; sub < moment.size(); ++sub) {
    std::vector<Link> chosen;
    for (int j = 0; j < k; ++j)
      if ((sub >> j) & 1) chosen.push_back(layout.links[ids[j]]);
    moment[sub] = link_product_expectation(st, chosen);
  }
  // P(o) = 2^-k sum_S prod_{j in S} o_j <prod_{j in S} L_j>
  std::vector<double> prob(moment.size(), 0.0);
  double total = 0.0;
  for (std::size_t pattern = 0; pattern < prob.size(); ++pattern) {
    if ((std::popcount(pattern) % 2 == 1) != (sign == -1)) continue;
    double p = 0.0;
    for (std::size_t sub = 0; sub < moment.size(); ++sub) p += (std::popcount(pattern & sub) % 2 ? -1.0 : 1.0) * moment[sub];
    prob[pattern] = std::max(p, 0.0);
    total += prob[pattern];
  }
  if (!(total > 0.0)) throw std::runtime_error("Z face has no admissible outcome");
  double u = uniform01(rng) * total;
  std::size_t pick = 0;
  for (std::size_t pattern = 0; pattern < prob.size(); ++pattern) {
    if (prob[pattern] <= 0.0) continue;
    pick = pattern;
    if (u < prob[pattern]) break;
    u -= prob[pattern];
  }
  for (int j = 0; j < k; ++j) {
    const int o = (pick >> j) & 1 ? -1 : 1;
    project_link(st, layout.links[ids[j]].a, layout.links[ids[j]].b, o);
    outcome[ids[j]] = o;
  }
}

Syndrome read_x_checks(const SurfaceCode& code, const LinkLayout& layout, MajoranaState& st,
                       std::vector<int>& outcome, Rng& rng) {
  Syndrome s(code.num_checks(), 0);
  for (std::size_t f = 0; f < layout.x_face_links.size(); ++f) {
    int value = layout.x_sign[f];
    for (int id : layout.x_face_links[f]) {
      if (!outcome[id]) outcome[id] = measure_link(st, layout.links[id].a, layout.links[id].b, rng);
      value *= outcome[id];
    }
    s[f] = value == -1;
  }
  return s;
}

}  // namespace

Syndrome sample_syndrome(const SurfaceCode& code, const LinkLayout& layout, const MajoranaState& rotated,
                         Rng& rng, int* attempts, SamplingMethod method) {
  std::vector<int> outcome(layout.links.size(), 0);
  MajoranaState st;
  if (method == SamplingMethod::FaceConditioned) {
    st.m = rotated.m;
    for (std::size_t f = 0; f < layout.z_face_links.size(); ++f)
      sample_face(st, layout, layout.z_face_links[f], layout.z_sign[f], outcome, rng);
    if (attempts) *attempts = 1;
    return read_x_checks(code, layout, st, outcome, rng);
  }
  for (int attempt = 1;; ++attempt) {
    st.m = rotated.m;
    std::fill(outcome.begin(), outcome.end(), 0);
    bool accepted = true;
    for (std::size_t f = 0; f < layout.z_face_links.size() && accepted; ++f) {
      int value = layout.z_sign[f];
      for (int id : layout.z_face_links[f]) {
        outcome[id] = measure_link(st, layout.links[id].a, layout.links[id].b, rng);
        value *= outcome[id];
      }
      accepted = value == 1;
    }
    if (!accepted) continue;
    if (attempts) *attempts = attempt;
    return read_x_checks(code, layout, st, outcome, rng);
  }
}

SyndromeSampler::SyndromeSampler(const SurfaceCode& code, double theta, SamplingMethod method)
    : code_(code), layout_(build_links(code)), rotated_(init_code_state(code)), method_(method) {
  apply_transversal_rotation(rotated_, theta);
}

Syndrome SyndromeSampler::sample(Rng& rng, int* attempts) const {
  return sample_syndrome(code_, layout_, rotated_, rng, attempts, method_);
}

SyndromeSample SyndromeSampler::sample_with_dephasing(double p, Rng& rng) const {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dephasing rate must lie in [0, 1)");
  SyndromeSample out;
  out.e.assign(code_.n, 0);
  std::bernoulli_distribution flip(p);
  for (auto& b : out.e) b = p > 0.0 && flip(rng);
  out.s0 = sample(rng, &out.attempts);
  out.s = xor_bits(out.s0, syndrome_of(code_, out.e));
  return out;
}

SyndromeSample sample_with_dephasing(const SurfaceCode& code, const NoiseParams& params, Rng& rng) {
  return SyndromeSampler(code, params.theta).sample_with_dephasing(params.p, rng);
}

std::vector<SyndromeSample> sample_batch(const SurfaceCode& code, const NoiseParams& params, int count,
                                         std::uint64_t seed, int workers) {
  SyndromeSampler sampler(code, params.theta);
  std::vector<SyndromeSample> out(count);
  parallel_for(count, workers, [&](long i) {
    Rng rng = make_rng(seed, "sample", static_cast<std::uint64_t>(i));
    out[i] = sampler.sample_with_dephasing(params.p, rng);
  });
  return out;
}

}  // namespace rrot
