#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "rrot/channel.hpp"

namespace rrot {

/// Discretized control problem for one target angle. Rows index the signed
/// residual delta = target - Phi, columns index the accumulated dephasing Q.
struct ControlGrid {
  double target = 0.0;
  /// Half-width of the zero residual bin; reaching it with Q <= q_acc ends a trial.
  double eps = 0.0;
  /// Magnitude edges e_0 = eps < ... < e_K = pi/2 shared by both signs.
  std::vector<double> mag_edges;
  /// Signed representatives, ascending; the middle entry is 0.
  std::vector<double> delta_centers;
  /// Q edges: bin 0 is [0, e_0], bin k > 0 is (e_{k-1}, e_k], last edge 1/2.
  std::vector<double> q_edges;
  std::vector<double> q_centers;
  /// Rotation angles; action index actions.size() is the reset.
  std::vector<double> actions;
  double gamma = 0.99;
  double delta_tol = 0.01;
  double q_acc = 0.0;
  int max_iterations = 100000;

  int n_phi() const { return static_cast<int>(delta_centers.size()); }
  int n_q() const { return static_cast<int>(q_centers.size()); }
  int n_actions() const { return static_cast<int>(actions.size()) + 1; }
  int reset_action() const { return static_cast<int>(actions.size()); }
  int zero_bin() const { return n_phi() / 2; }
  int delta_bin(double delta) const;
  int q_bin(double q) const;
  int cell(int i, int j) const { return i * n_q() + j; }
  int num_cells() const { return n_phi() * n_q(); }
  /// The zero residual bin with every Q in the bin at most q_acc.
  bool terminal(int i, int j) const { return i == zero_bin() && q_edges[j] <= q_acc; }
  /// Residual bin of the initial state Phi = 0.
  int start_bin() const { return delta_bin(target); }
};

struct GridOptions {
  int n_phi = 201;
  int n_q = 21;
  /// Rotation actions plus one reset.
  int n_theta = 201;
  double gamma = 0.99;
  double delta_tol = 0.01;
  /// eps = eps_ratio * |target|.
  double eps_ratio = 0.01;
  /// Upper edge of the lowest Q bin.
  double q_floor = 1e-6;
  int max_iterations = 100000;
};

/// Builds the signed-residual grid. Rotation actions are n_theta - 1 angles
/// evenly spanning [-theta_max, theta_max]. The magnitude ratio is nudged so
/// that |target| is a bin center. The lowest Q edge is lowered to q_acc if
/// needed and the Q edge nearest q_acc is moved onto it. Throws on invalid
/// sizes, target = 0, |target| >= pi/2 or q_acc <= 0.
ControlGrid make_grid(double target, double theta_max, double q_acc, const GridOptions& opt = {});

/// Same grid with an explicit rotation action list.
ControlGrid make_grid(double target, const std::vector<double>& actions, double q_acc, const GridOptions& opt = {});

/// One outcome of a rotation round.
struct Outcome {
  double weight = 0.0;
  double phi = 0.0;
  double q = 0.0;
  std::uint64_t key = 0;
};

/// Per-syndrome channel tables on a theta grid (ascending, non-negative).
struct ChannelGrid {
  int d = 0;
  double p = 0.0;
  std::vector<SyndromeTable> tables;
};

/// Samples and evaluates every theta of the grid; table k uses the stream
/// ("theta", k) of `seed`.
ChannelGrid build_channel_grid(ChannelCache& cache, double p, const std::vector<double>& thetas, int n_samples,
                               std::uint64_t seed, int workers);

/// Outcome list of a rotation by `theta` interpolated from the grid. Weights
/// are interpolated linearly; log|phi| and log q are interpolated linearly
/// when both neighbours share a sign and are nonzero, linearly in value
/// otherwise. Negative theta mirrors phi. Degenerate channels count as
/// q = 1/2, phi = 0. Throws std::out_of_range when |theta| is off the grid.
std::vector<Outcome> interpolate_outcomes(const ChannelGrid& grid, double theta);

struct EmpiricalKernel {
  std::vector<double> actions;
  /// outcomes[a] for rotation action a; weights sum to 1.
  std::vector<std::vector<Outcome>> outcomes;
};

EmpiricalKernel build_kernel(const ChannelGrid& grid, const std::vector<double>& actions);

/// Content hash used to tie a policy to its kernel.
std::uint64_t kernel_hash(const EmpiricalKernel& kernel);

struct Solution {
  /// v[cell]: expected discounted rounds to finish.
  std::vector<double> v;
  /// Action index per cell.
  std::vector<int> policy;
  /// Sup-norm change per sweep.
  std::vector<double> residuals;
  int iterations = 0;
  /// Q updates that fell above the last edge and were clamped.
  long clamped = 0;
};

/// Value iteration with double-buffered sweeps parallel over cells. Ties
/// go to the smallest action index. Throws std::runtime_error when the
/// iteration cap is reached or the residual ever increases.
Solution value_iterate(const ControlGrid& grid, const EmpiricalKernel& kernel, int workers = 1,
                       double cost_scale = 1.0);

/// Dephasing composition Q + q - 2Qq.
inline double update_q(double q_total, double q) { return q_total + q - 2.0 * q_total * q; }

/// A solved policy with everything needed to replay it.
struct PolicyBundle {
  ControlGrid grid;
  EmpiricalKernel kernel;
  Solution solution;
  std::uint64_t hash = 0;
  int action(double delta, double q_total) const {
    return solution.policy[grid.cell(grid.delta_bin(delta), grid.q_bin(q_total))];
  }
};

nlohmann::json to_json(const ControlGrid& grid);
ControlGrid grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EmpiricalKernel& kernel);
EmpiricalKernel kernel_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PolicyBundle& bundle);
PolicyBundle bundle_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ChannelGrid& grid);
ChannelGrid channel_grid_from_json(const nlohmann::json& j);

}  // namespace rrot
