#include "rrot/surface_code.hpp"

#include <algorithm>
#include <stdexcept>

namespace rrot {

SurfaceCode build_code(int d) {
  if (d < 3 || d % 2 == 0) throw std::invalid_argument("code distance must be odd and >= 3");
  SurfaceCode code;
  code.d = d;
  code.n = d * d;
  for (int r = -1; r < d; ++r) {
    for (int c = -1; c < d; ++c) {
      Face f;
      f.row = r;
      f.col = c;
      f.type = SurfaceCode::is_x_face(r, c) ? CheckType::X : CheckType::Z;
      for (int rr = r; rr <= r + 1; ++rr)
        for (int cc = c; cc <= c + 1; ++cc)
          if (rr >= 0 && rr < d && cc >= 0 && cc < d) f.qubits.push_back(code.qubit(rr, cc));
      bool bulk = r >= 0 && r < d - 1 && c >= 0 && c < d - 1;
      bool keep = bulk;
      if (!bulk && f.qubits.size() == 2) {
        bool side = c == -1 || c == d - 1;
        keep = side ? f.type == CheckType::X : f.type == CheckType::Z;
      }
      if (!keep) continue;
      Bits row(code.n, 0);
      for (int q : f.qubits) row[q] = 1;
      if (f.type == CheckType::X) {
        code.h_x.push_back(row);
        code.x_faces.push_back(f);
      } else {
        code.h_z.push_back(row);
        code.z_faces.push_back(f);
      }
    }
  }
  code.logical_x.assign(code.n, 0);
  code.logical_z.assign(code.n, 0);
  for (int i = 0; i < d; ++i) {
    code.logical_x[code.qubit(0, i)] = 1;
    code.logical_z[code.qubit(i, 0)] = 1;
  }
  return code;
}

Syndrome syndrome_of(const SurfaceCode& code, const PauliZMask& e) {
  if (static_cast<int>(e.size()) != code.n) throw std::invalid_argument("mask length differs from n");
  Syndrome s(code.h_x.size(), 0);
  for (std::size_t i = 0; i < code.h_x.size(); ++i) s[i] = static_cast<std::uint8_t>(dot_mod2(code.h_x[i], e));
  return s;
}

int logical_parity(const SurfaceCode& code, const PauliZMask& mask) {
  if (static_cast<int>(mask.size()) != code.n) throw std::invalid_argument("mask length differs from n");
  return dot_mod2(code.logical_x, mask);
}

std::string validate(const SurfaceCode& code) {
  const std::size_t m = (code.n - 1) / 2;
  if (code.h_x.size() != m || code.h_z.size() != m) return "wrong number of checks";
  for (const auto* h : {&code.h_x, &code.h_z})
    for (const auto& row : *h) {
      int w = weight(row);
      if (w != 2 && w != 4) return "check weight not 2 or 4";
    }
  for (const auto& a : code.h_x)
    for (const auto& b : code.h_z)
      if (dot_mod2(a, b)) return "X and Z checks anticommute";
  for (const auto& a : code.h_x)
    if (dot_mod2(a, code.logical_z)) return "X check anticommutes with logical Z";
  for (const auto& b : code.h_z)
    if (dot_mod2(b, code.logical_x)) return "Z check anticommutes with logical X";
  if (dot_mod2(code.logical_x, code.logical_z) != 1) return "logicals commute";
  return {};
}

int min_logical_z_weight(const SurfaceCode& code) {
  const std::size_t m = code.h_z.size();
  if (m > 24) throw std::invalid_argument("row space too large for exhaustive search");
  int best = code.n;
  Bits cur = code.logical_z;
  // Gray-code walk over the Z-stabilizer row space.
  for (std::uint64_t k = 0; k < (1ull << m); ++k) {
    if (k) {
      int flip = __builtin_ctzll(k);
      for (int q = 0; q < code.n; ++q) cur[q] ^= code.h_z[flip][q];
    }
    best = std::min(best, weight(cur));
  }
  return best;
}

nlohmann::json to_json(const SurfaceCode& code) {
  using nlohmann::json;
  json j;
  j["d"] = code.d;
  j["n"] = code.n;
  j["h_x"] = code.h_x;
  j["h_z"] = code.h_z;
  j["logical_x"] = code.logical_x;
  j["logical_z"] = code.logical_z;
  auto faces = [](const std::vector<Face>& fs) {
    json a = json::array();
    for (const auto& f : fs) a.push_back({{"row", f.row}, {"col", f.col}, {"qubits", f.qubits}});
    return a;
  };
  j["x_faces"] = faces(code.x_faces);
  j["z_faces"] = faces(code.z_faces);
  return j;
}

Bits xor_bits(const Bits& a, const Bits& b) {
  if (a.size() != b.size()) throw std::invalid_argument("bit vector lengths differ");
  Bits r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] ^ b[i];
  return r;
}

int weight(const Bits& b) {
  int w = 0;
  for (auto x : b) w += x & 1;
  return w;
}

int dot_mod2(const Bits& a, const Bits& b) {
  if (a.size() != b.size()) throw std::invalid_argument("bit vector lengths differ");
  int s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s ^= a[i] & b[i];
  return s;
}

std::uint64_t pack(const Bits& b) {
  if (b.size() > 64) throw std::invalid_argument("cannot pack more than 64 bits");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b[i]) v |= 1ull << i;
  return v;
}

Bits unpack(std::uint64_t v, int len) {
  Bits b(len);
  for (int i = 0; i < len; ++i) b[i] = (v >> i) & 1;
  return b;
}

std::string bits_string(const Bits& b) {
  std::string s;
  for (auto x : b) s.push_back(x ? '1' : '0');
  return s;
}

}  // namespace rrot
