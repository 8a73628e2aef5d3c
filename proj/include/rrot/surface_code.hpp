#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace rrot {

using Bits = std::vector<std::uint8_t>;

/// X-check outcomes, one bit per X check, 1 marks a flipped check.
using Syndrome = Bits;
/// Support of a Z-type Pauli on the n data qubits.
using PauliZMask = Bits;

enum class CheckType { X, Z };

/// One stabilizer face. (row, col) is the top-left vertex of the plaquette,
/// so boundary faces have row or col equal to -1 or d-1.
struct Face {
  int row = 0;
  int col = 0;
  CheckType type = CheckType::X;
  std::vector<int> qubits;
};

/// Odd-distance square rotated surface code.
///
/// Qubit (r, c) has index r*d + c. Face (r, c) is X-type when r+c is even.
/// Weight-2 X faces sit on the left and right boundaries, weight-2 Z faces
/// on the top and bottom. logical_z is column 0, logical_x is row 0.
struct SurfaceCode {
  int d = 0;
  int n = 0;
  std::vector<Bits> h_x;
  std::vector<Bits> h_z;
  Bits logical_x;
  Bits logical_z;
  std::vector<Face> x_faces;
  std::vector<Face> z_faces;

  int num_checks() const { return static_cast<int>(h_x.size()); }
  int qubit(int r, int c) const { return r * d + c; }
  static bool is_x_face(int r, int c) { return ((r + c) % 2 + 2) % 2 == 0; }
};

/// Builds the distance-d code. Throws std::invalid_argument unless d is odd and >= 3.
SurfaceCode build_code(int d);

/// Returns h_x * e mod 2.
Syndrome syndrome_of(const SurfaceCode& code, const PauliZMask& e);

/// Returns logical_x . mask mod 2.
int logical_parity(const SurfaceCode& code, const PauliZMask& mask);

/// Checks every structural invariant; returns an empty string on success.
std::string validate(const SurfaceCode& code);

/// Minimum weight of logical_z plus any element of the Z-stabilizer row space.
/// Exhaustive over the row space, so only practical for d <= 5.
int min_logical_z_weight(const SurfaceCode& code);

nlohmann::json to_json(const SurfaceCode& code);

Bits xor_bits(const Bits& a, const Bits& b);
int weight(const Bits& b);
int dot_mod2(const Bits& a, const Bits& b);
/// Packs up to 64 bits, bit i of the result is b[i].
std::uint64_t pack(const Bits& b);
Bits unpack(std::uint64_t v, int len);
std::string bits_string(const Bits& b);

}  // namespace rrot
