#pragma once

#include <complex>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "rrot/decoder.hpp"
#include "rrot/fermion_sampler.hpp"
#include "rrot/surface_code.hpp"

namespace rrot {

struct ChannelParams {
  double p_s = 0.0;
  double phi_s = 0.0;
  double q_s = 0.0;
  /// Set when the coherence vanishes (q_s = 1/2) and phi_s is meaningless.
  bool degenerate = false;
};

/// Unnormalized Choi matrix over (logical, ancilla), basis index 2*L + A.
using ChoiMatrix = Eigen::Matrix4cd;

/// Per-qubit factor of the doubled network. Indices are the ket and bra
/// computational values of the qubit; the qubit couples to the X faces
/// listed in `faces` through their (ket, bra) pair variables, and row-0
/// qubits also couple to the ancilla label.
struct SiteTensor {
  int qubit = 0;
  std::vector<int> faces;
  bool ancilla = false;
  std::complex<double> t[2][2];
};

/// Folds an angle into (-pi/2, pi/2].
double fold_angle(double phi);

/// Inverts |0><1| -> (1-2q) e^{2 i phi} |0><1| from the Choi coherence.
ChannelParams extract_params(const ChoiMatrix& j);

/// Site tensors for physical noise params and a fixed Z mask applied after
/// the noise (the correction, possibly xored with an explicit error).
std::vector<SiteTensor> build_site_tensors(const SurfaceCode& code, const NoiseParams& params,
                                           const PauliZMask& zmask);

/// Choi matrix by exact row-by-row contraction. Throws std::length_error
/// when d exceeds `max_d`.
ChoiMatrix choi_tn(const SurfaceCode& code, const NoiseParams& params, const PauliZMask& zmask, int max_d = 7);

/// Logical channel for syndrome s under correction; requires h_x correction = s.
ChannelParams logical_channel_tn(const SurfaceCode& code, const NoiseParams& params, const Syndrome& s,
                                 const PauliZMask& correction, int max_d = 7);

/// Brute-force density-matrix Choi matrix at d = 3. When `error` is given the
/// dephasing is replaced by that fixed Z error after the rotation.
ChoiMatrix choi_oracle(const SurfaceCode& code, const NoiseParams& params, const Syndrome& s,
                       const PauliZMask& correction, const PauliZMask* error = nullptr);

ChannelParams oracle_channel(const SurfaceCode& code, const NoiseParams& params, const Syndrome& s,
                             const PauliZMask& correction, const PauliZMask* error = nullptr);

/// Exact Born probabilities of all X syndromes at d = 3 for the rotated
/// code state, by statevector, optionally followed by a fixed Z error.
/// Index is pack(s).
std::vector<double> oracle_syndrome_distribution(const SurfaceCode& code, double theta,
                                                 const PauliZMask* error = nullptr);

/// Angle of the logical rotation for syndrome s when a Z error e occurred,
/// from the error-free angle phi_base of syndrome s0 = s xor h_x e. Adds pi/2
/// when l_X . [D(s) + e + D(s0)] is odd.
double map_logical_angle(const SurfaceCode& code, const MatchingGraph& graph, const Syndrome& s,
                         const PauliZMask& e, double phi_base);

/// Thread-safe memo of channel evaluations keyed by (d, theta, p, s).
class ChannelCache {
 public:
  ChannelCache(const SurfaceCode& code, const MatchingGraph& graph) : code_(code), graph_(graph) {}
  ChannelParams get(const NoiseParams& params, const Syndrome& s);
  std::size_t size() const;
  std::size_t hits() const { return hits_; }
  /// Writes or reads a JSON table; load ignores entries for other distances.
  void save(const std::string& path) const;
  void load(const std::string& path);
  const SurfaceCode& code() const { return code_; }
  const MatchingGraph& graph() const { return graph_; }

 private:
  struct Key {
    int d;
    std::uint64_t theta_bits, p_bits, s;
    bool operator==(const Key& o) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  const SurfaceCode& code_;
  const MatchingGraph& graph_;
  mutable std::mutex mutex_;
  std::unordered_map<Key, ChannelParams, KeyHash> table_;
  std::size_t hits_ = 0;
};

/// One distinct syndrome observed in a batch.
struct TableEntry {
  std::uint64_t key = 0;
  int count = 0;
  /// count / n_samples.
  double weight = 0.0;
  ChannelParams channel;
};

/// Empirical syndrome distribution at one (theta, p) with the logical channel
/// of every distinct syndrome. Entries are sorted by key.
struct SyndromeTable {
  int d = 0;
  NoiseParams params;
  int n_samples = 0;
  std::vector<TableEntry> entries;
};

/// Samples n syndromes (stream ("sample", i) of `seed`), merges duplicates and
/// evaluates each distinct syndrome through the cache.
SyndromeTable tabulate(ChannelCache& cache, const NoiseParams& params, int n_samples, std::uint64_t seed,
                       int workers);

nlohmann::json to_json(const SyndromeTable& table);
SyndromeTable table_from_json(const nlohmann::json& j);

}  // namespace rrot
