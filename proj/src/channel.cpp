#include "rrot/channel.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <stdexcept>

#include "json.hpp"
#include "rrot/parallel.hpp"

namespace rrot {

using cd = std::complex<double>;

double fold_angle(double phi) {
  const double pi = std::numbers::pi;
  phi = std::remainder(phi, pi);
  if (phi <= -pi / 2 + 1e-15) phi += pi;
  return phi;
}

ChannelParams extract_params(const ChoiMatrix& j) {
  if ((j - j.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, j.cwiseAbs().maxCoeff()))
    throw std::domain_error("Choi matrix is not Hermitian");
  ChannelParams out;
  out.p_s = j.trace().real();
  if (out.p_s <= 0.0) {
    out.q_s = 0.5;
    out.degenerate = true;
    return out;
  }
  const cd c = 2.0 * j(0, 3) / out.p_s;
  const double mag = std::abs(c);
  if (mag > 1.0 + 1e-9) throw std::domain_error("coherence exceeds 1: non-physical Choi matrix");
  out.q_s = std::clamp(0.5 * (1.0 - mag), 0.0, 0.5);
  if (mag < 1e-12) {
    out.degenerate = true;
    out.phi_s = 0.0;
  } else {
    out.phi_s = fold_angle(0.5 * std::arg(c));
  }
  return out;
}

std::vector<SiteTensor> build_site_tensors(const SurfaceCode& code, const NoiseParams& params,
                                           const PauliZMask& zmask) {
  if (static_cast<int>(zmask.size()) != code.n) throw std::invalid_argument("mask length differs from n");
  std::vector<SiteTensor> sites(code.n);
  for (int q = 0; q < code.n; ++q) {
    auto& st = sites[q];
    st.qubit = q;
    st.ancilla = code.logical_x[q] != 0;
    for (int f = 0; f < code.num_checks(); ++f)
      if (code.h_x[f][q]) st.faces.push_back(f);
    for (int y = 0; y < 2; ++y)
      for (int yp = 0; yp < 2; ++yp) {
        const int flip = y ^ yp;
        const double sigma = 1 - 2 * y, sigma_p = 1 - 2 * yp;
        const double deph = (1.0 - params.p) + (flip ? -params.p : params.p);
        const double sign = (zmask[q] && flip) ? -1.0 : 1.0;
        st.t[y][yp] = std::polar(sign * deph, params.theta * (sigma - sigma_p));
      }
  }
  return sites;
}

namespace {

// Sum over ket/bra X-stabilizer coefficients a, a' of prod_q t_q(y_q, y'_q)
// with y = a H_X + b l_X and y' = a' H_X + c l_X, contracted row by row.
// The boundary vector is indexed by the (a, a') pairs of the X faces in the
// face row just above the current qubit row.
cd contract(const SurfaceCode& code, const std::vector<SiteTensor>& sites, int b, int c) {
  const int d = code.d;
  std::vector<std::vector<int>> row_faces(d + 1);
  std::vector<int> slot(code.num_checks());
  for (int f = 0; f < code.num_checks(); ++f) {
    auto& list = row_faces[code.x_faces[f].row + 1];
    slot[f] = static_cast<int>(list.size());
    list.push_back(f);
  }
  std::vector<cd> vec(1u << (2 * row_faces[0].size()), cd(0.0));
  vec[0] = 1.0;
  if (!row_faces[0].empty()) throw std::logic_error("unexpected X face above the lattice");
  for (int r = 0; r < d; ++r) {
    const auto& cur = row_faces[r + 1];
    const std::size_t n_cur = 1u << (2 * cur.size());
    std::vector<cd> next(n_cur, cd(0.0));
    struct Ref {
      int q;
      std::vector<std::pair<bool, int>> bits;  // (in current row, slot)
    };
    std::vector<Ref> refs;
    for (int col = 0; col < d; ++col) {
      const int q = code.qubit(r, col);
      Ref ref{q, {}};
      for (int f : sites[q].faces) ref.bits.push_back({code.x_faces[f].row == r, slot[f]});
      refs.push_back(ref);
    }
    for (std::size_t a = 0; a < vec.size(); ++a) {
      if (vec[a] == cd(0.0)) continue;
      for (std::size_t bb = 0; bb < n_cur; ++bb) {
        cd prod = vec[a];
        for (const auto& ref : refs) {
          int y = sites[ref.q].ancilla ? b : 0, yp = sites[ref.q].ancilla ? c : 0;
          for (auto [in_cur, s] : ref.bits) {
            const std::size_t word = in_cur ? bb : a;
            y ^= (word >> (2 * s)) & 1;
            yp ^= (word >> (2 * s + 1)) & 1;
          }
          prod *= sites[ref.q].t[y][yp];
          if (prod == cd(0.0)) break;
        }
        next[bb] += prod;
      }
    }
    vec.swap(next);
  }
  return vec[0];
}

}  // namespace

ChoiMatrix choi_tn(const SurfaceCode& code, const NoiseParams& params, const PauliZMask& zmask, int max_d) {
  if (code.d > max_d) throw std::length_error("code distance exceeds the contraction limit");
  const auto sites = build_site_tensors(code, params, zmask);
  const double norm = std::ldexp(1.0, -2 * code.num_checks());
  const cd n00 = contract(code, sites, 0, 0) * norm;
  const cd n11 = contract(code, sites, 1, 1) * norm;
  const cd n01 = contract(code, sites, 0, 1) * norm;
  ChoiMatrix j = ChoiMatrix::Zero();
  j(0, 0) = 0.5 * n00.real();
  j(3, 3) = 0.5 * n11.real();
  j(0, 3) = 0.5 * n01;
  j(3, 0) = std::conj(j(0, 3));
  return j;
}

ChannelParams logical_channel_tn(const SurfaceCode& code, const NoiseParams& params, const Syndrome& s,
                                 const PauliZMask& correction, int max_d) {
  if (syndrome_of(code, correction) != s) throw std::invalid_argument("correction does not produce the syndrome");
  return extract_params(choi_tn(code, params, correction, max_d));
}

namespace {

using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

std::size_t mask_of(const Bits& b) {
  std::size_t m = 0;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b[i]) m |= std::size_t{1} << i;
  return m;
}

Vec flip(const Vec& v, std::size_t mask) {
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i ^ mask] = v[i];
  return out;
}

Vec logical_zero(const SurfaceCode& code) {
  Vec v = Vec::Zero(std::size_t{1} << code.n);
  v[0] = 1.0;
  for (const auto& row : code.h_x) v = 0.5 * (v + flip(v, mask_of(row)));
  return v / v.norm();
}

void require_small(const SurfaceCode& code) {
  if (code.d > 3) throw std::invalid_argument("oracle supports d = 3 only");
}

}  // namespace

ChoiMatrix choi_oracle(const SurfaceCode& code, const NoiseParams& params, const Syndrome& s,
                       const PauliZMask& correction, const PauliZMask* error) {
  require_small(code);
  const Vec zero = logical_zero(code);
  const Vec one = flip(zero, mask_of(code.logical_x));
  const Vec* basis[2] = {&zero, &one};
  const std::uint64_t fix = mask_of(correction);
  // Dephasing is a mixture of Z patterns, so the Choi matrix is a weighted sum
  // over patterns of pure-state outer products. The ancilla index is the
  // column of `amp`, the logical index its row.
  ChoiMatrix j = ChoiMatrix::Zero();
  const std::uint64_t patterns = error ? 1 : std::uint64_t{1} << code.n;
  for (std::uint64_t pat = 0; pat < patterns; ++pat) {
    const std::uint64_t emask = error ? mask_of(*error) : pat;
    const int w = std::popcount(emask);
    const double weight = error ? 1.0 : std::pow(params.p, w) * std::pow(1.0 - params.p, code.n - w);
    if (weight == 0.0) continue;
    Eigen::Vector4cd amp;
    for (int aa = 0; aa < 2; ++aa) {
      Vec v = *basis[aa];
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        const auto x = static_cast<std::uint64_t>(i);
        v[i] *= std::polar(1.0, params.theta * (code.n - 2.0 * std::popcount(x)));
        if (std::popcount(x & emask) % 2) v[i] = -v[i];
      }
      for (int f = 0; f < code.num_checks(); ++f)
        v = 0.5 * (v + (s[f] ? -1.0 : 1.0) * flip(v, mask_of(code.h_x[f])));
      for (Eigen::Index i = 0; i < v.size(); ++i)
        if (std::popcount(static_cast<std::uint64_t>(i) & fix) % 2) v[i] = -v[i];
      for (int la = 0; la < 2; ++la) amp(2 * la + aa) = basis[la]->dot(v) / std::sqrt(2.0);
    }
    j += weight * amp * amp.adjoint();
  }
  return j;
}

ChannelParams oracle_channel(const SurfaceCode& code, const NoiseParams& params, const Syndrome& s,
                             const PauliZMask& correction, const PauliZMask* error) {
  if (syndrome_of(code, correction) != s) throw std::invalid_argument("correction does not produce the syndrome");
  return extract_params(choi_oracle(code, params, s, correction, error));
}

std::vector<double> oracle_syndrome_distribution(const SurfaceCode& code, double theta, const PauliZMask* error) {
  require_small(code);
  Vec v = logical_zero(code);
  const std::uint64_t emask = error ? mask_of(*error) : 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const auto x = static_cast<std::uint64_t>(i);
    v[i] *= std::polar(1.0, theta * (code.n - 2.0 * std::popcount(x)));
    if (std::popcount(x & emask) % 2) v[i] = -v[i];
  }
  const int m = code.num_checks();
  std::vector<double> out(std::size_t{1} << m);
  for (std::size_t key = 0; key < out.size(); ++key) {
    Vec w = v;
    for (int f = 0; f < m; ++f) {
      const double sign = (key >> f) & 1 ? -1.0 : 1.0;
      w = 0.5 * (w + sign * flip(w, mask_of(code.h_x[f])));
    }
    out[key] = w.squaredNorm();
  }
  return out;
}

double map_logical_angle(const SurfaceCode& code, const MatchingGraph& graph, const Syndrome& s,
                         const PauliZMask& e, double phi_base) {
  const PauliZMask ds = decode(graph, s);
  // D(s) + e + D(s xor H_X e) has trivial syndrome; its l_X parity says
  // whether it acts as logical Z relative to the error-free correction.
  const PauliZMask de = decode(graph, xor_bits(s, syndrome_of(code, e)));
  const int parity = logical_parity(code, xor_bits(xor_bits(ds, e), de));
  return fold_angle(phi_base + (parity ? std::numbers::pi / 2 : 0.0));
}

std::size_t ChannelCache::KeyHash::operator()(const Key& k) const {
  std::size_t h = std::hash<std::uint64_t>()(k.theta_bits);
  h ^= std::hash<std::uint64_t>()(k.p_bits) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  h ^= std::hash<std::uint64_t>()(k.s) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h ^ static_cast<std::size_t>(k.d);
}

ChannelParams ChannelCache::get(const NoiseParams& params, const Syndrome& s) {
  const Key key{code_.d, std::bit_cast<std::uint64_t>(params.theta), std::bit_cast<std::uint64_t>(params.p), pack(s)};
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = table_.find(key);
    if (it != table_.end()) {
      ++hits_;
      return it->second;
    }
  }
  const ChannelParams value = logical_channel_tn(code_, params, s, decode(graph_, s));
  std::lock_guard<std::mutex> lock(mutex_);
  table_.emplace(key, value);
  return value;
}

std::size_t ChannelCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return table_.size();
}

void ChannelCache::save(const std::string& path) const {
  nlohmann::json rows = nlohmann::json::array();
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto& [k, v] : table_)
      rows.push_back({{"d", k.d},
                      {"theta", std::bit_cast<double>(k.theta_bits)},
                      {"p", std::bit_cast<double>(k.p_bits)},
                      {"s", bits_string(unpack(k.s, code_.num_checks()))},
                      {"p_s", v.p_s},
                      {"phi_s", v.phi_s},
                      {"q_s", v.q_s},
                      {"degenerate", v.degenerate}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write channel cache " + path);
  out << rows.dump() << '\n';
}

void ChannelCache::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read channel cache " + path);
  const auto rows = nlohmann::json::parse(in);
  std::lock_guard<std::mutex> lock(mutex_);
  for (const auto& r : rows) {
    if (r.at("d").get<int>() != code_.d) continue;
    Syndrome s;
    for (char ch : r.at("s").get<std::string>()) s.push_back(ch == '1');
    const Key key{code_.d, std::bit_cast<std::uint64_t>(r.at("theta").get<double>()),
                  std::bit_cast<std::uint64_t>(r.at("p").get<double>()), pack(s)};
    table_[key] = {r.at("p_s").get<double>(), r.at("phi_s").get<double>(), r.at("q_s").get<double>(),
                   r.at("degenerate").get<bool>()};
  }
}

SyndromeTable tabulate(ChannelCache& cache, const NoiseParams& params, int n_samples, std::uint64_t seed,
                       int workers) {
  if (n_samples <= 0) throw std::invalid_argument("n_samples must be positive");
  const auto samples = sample_batch(cache.code(), params, n_samples, seed, workers);
  std::map<std::uint64_t, int> counts;
  for (const auto& smp : samples) ++counts[pack(smp.s)];
  SyndromeTable table{cache.code().d, params, n_samples, {}};
  for (const auto& [key, c] : counts) table.entries.push_back({key, c, double(c) / n_samples, {}});
  const int m = cache.code().num_checks();
  parallel_for(static_cast<long>(table.entries.size()), workers, [&](long i) {
    table.entries[i].channel = cache.get(params, unpack(table.entries[i].key, m));
  });
  return table;
}

nlohmann::json to_json(const SyndromeTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : table.entries)
    rows.push_back({{"s", e.key}, {"count", e.count}, {"p_s", e.channel.p_s}, {"phi_s", e.channel.phi_s},
                    {"q_s", e.channel.q_s}, {"degenerate", e.channel.degenerate}});
  return {{"d", table.d}, {"theta", table.params.theta}, {"p", table.params.p}, {"n_samples", table.n_samples},
          {"entries", rows}};
}

SyndromeTable table_from_json(const nlohmann::json& j) {
  SyndromeTable t;
  t.d = j.at("d").get<int>();
  t.params = {j.at("theta").get<double>(), j.at("p").get<double>()};
  t.n_samples = j.at("n_samples").get<int>();
  for (const auto& r : j.at("entries")) {
    TableEntry e;
    e.key = r.at("s").get<std::uint64_t>();
    e.count = r.at("count").get<int>();
    e.weight = double(e.count) / t.n_samples;
    e.channel = {r.at("p_s").get<double>(), r.at("phi_s").get<double>(), r.at("q_s").get<double>(),
                 r.at("degenerate").get<bool>()};
    t.entries.push_back(e);
  }
  return t;
}

}  // namespace rrot
