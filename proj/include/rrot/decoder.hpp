#pragma once

#include <vector>

#include "rrot/surface_code.hpp"

namespace rrot {

/// Shortest Z-error chains between X checks and the two rough boundaries.
/// Nodes 0..m-1 are checks, node m is the top boundary and m+1 the bottom.
struct MatchingGraph {
  int num_checks = 0;
  int n = 0;
  std::vector<std::vector<int>> distance;
  /// Qubits of one shortest chain between each node pair.
  std::vector<std::vector<std::vector<int>>> path;

  int top() const { return num_checks; }
  int bottom() const { return num_checks + 1; }
  /// Distance to the nearer boundary.
  int boundary_distance(int check) const;
  /// Node id of the nearer boundary; ties go to the top.
  int nearest_boundary(int check) const;
};

MatchingGraph build_graph(const SurfaceCode& code);

/// Largest defect count handled by exact matching; beyond it a greedy
/// nearest-pair matching is used.
inline constexpr int kExactDefectLimit = 22;

/// Minimum-weight correction D(s) with h_x D(s) = s. Sets *greedy when the
/// defect count exceeds kExactDefectLimit and the fallback was used.
PauliZMask decode(const MatchingGraph& graph, const Syndrome& s, bool* greedy = nullptr);

}  // namespace rrot
