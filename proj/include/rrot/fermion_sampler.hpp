#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rrot/rng.hpp"
#include "rrot/surface_code.hpp"

namespace rrot {

/// Pure fermionic Gaussian state over 4n Majorana modes, M_ij = Tr[i c_i c_j rho].
/// Qubit q owns modes 4q..4q+3 (c1..c4 in the single-qubit encoding).
struct MajoranaState {
  Eigen::MatrixXd m;
};

struct NoiseParams {
  double theta = 0.0;
  double p = 0.0;
};

struct SyndromeSample {
  Syndrome s;
  Syndrome s0;
  PauliZMask e;
  int attempts = 0;
};

/// Two-mode operator i c_a c_b.
struct Link {
  int a = 0;
  int b = 0;
};

/// Links of the lattice and their grouping into checks. On the physical
/// subspace (S_q = +1 for all q) check f equals sign[f] times the product of
/// its link operators.
struct LinkLayout {
  std::vector<Link> links;
  std::vector<std::vector<int>> x_face_links;
  std::vector<std::vector<int>> z_face_links;
  std::vector<int> x_sign;
  std::vector<int> z_sign;
};

enum Direction { Up = 0, Right = 1, Down = 2, Left = 3 };

/// Mode attached to the edge leaving vertex (r, c) in direction dir.
int edge_mode(const SurfaceCode& code, int r, int c, Direction dir);

LinkLayout build_links(const SurfaceCode& code);

/// Gaussian product state with X = i c1 c2 = +1 and S = +1 on every qubit.
/// All X-check link products are +1; Z checks are fixed later by postselection.
MajoranaState init_code_state(const SurfaceCode& code);

/// Applies exp(i theta Z) on every qubit with Z = i c1 c3.
void apply_transversal_rotation(MajoranaState& state, double theta);

/// Projective measurement of i c_k c_l. Returns +1 or -1.
int measure_link(MajoranaState& state, int k, int l, Rng& rng);

/// Projects onto outcome of i c_k c_l and returns the Born probability of that outcome.
double project_link(MajoranaState& state, int k, int l, int outcome);

/// Empty string when antisymmetry, purity and entry bounds hold.
std::string check_state(const MajoranaState& state, double tol = 1e-9);

/// Expectation of a product of commuting links, the Pfaffian of the
/// covariance restricted to their modes in order (a1, b1, a2, b2, ...).
double link_product_expectation(const MajoranaState& state, const std::vector<Link>& links);

/// Pfaffian of a small antisymmetric matrix.
double pfaffian(Eigen::MatrixXd a);

enum class SamplingMethod {
  /// Z faces in turn: the links of each face are drawn jointly, conditioned
  /// on the face product being +1.
  FaceConditioned,
  /// All links measured freely; runs whose Z-check products are not all +1
  /// are discarded. Expected 2^{(d^2-1)/2} tries.
  Rejection,
};

/// Draws one X syndrome from the exact distribution of the rotated code state.
/// `rotated` must be init_code_state followed by a transversal rotation.
/// `attempts` receives the number of tries used (always 1 for FaceConditioned).
Syndrome sample_syndrome(const SurfaceCode& code, const LinkLayout& layout, const MajoranaState& rotated,
                         Rng& rng, int* attempts = nullptr,
                         SamplingMethod method = SamplingMethod::FaceConditioned);

/// Reusable sampler bound to one code and one angle.
class SyndromeSampler {
 public:
  SyndromeSampler(const SurfaceCode& code, double theta,
                  SamplingMethod method = SamplingMethod::FaceConditioned);
  Syndrome sample(Rng& rng, int* attempts = nullptr) const;
  SyndromeSample sample_with_dephasing(double p, Rng& rng) const;
  const SurfaceCode& code() const { return code_; }

 private:
  SurfaceCode code_;
  LinkLayout layout_;
  MajoranaState rotated_;
  SamplingMethod method_;
};

/// Draws e ~ Bernoulli(p)^n, s0 from the coherent-only pipeline, returns s = s0 xor H_X e.
SyndromeSample sample_with_dephasing(const SurfaceCode& code, const NoiseParams& params, Rng& rng);

/// Batch sampling. Sample i uses the stream ("sample", i) of `seed`, so results
/// do not depend on the worker count.
std::vector<SyndromeSample> sample_batch(const SurfaceCode& code, const NoiseParams& params, int count,
                                         std::uint64_t seed, int workers);

}  // namespace rrot
