#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "msbound/linalg.hpp"

namespace msbound {

enum class PolicyVariant {
  kZero,
  kRandomWalkSat,
  kOrthogonalStationary,
  kSubsampled,
  kGeneralComposite,
};

const char* to_string(PolicyVariant v);
std::optional<PolicyVariant> parse_policy_variant(const std::string& s);

/// Per-trajectory memory of a k-history policy. The whole control block of a
/// cycle is computed from the state observed at the cycle boundary.
struct PolicyState {
  int phase = 0;
  Vector boundary_state;
  std::vector<Vector> control_block;  // indexed by step within the cycle
};

namespace detail {

struct ZeroLaw {
  int input_dim = 0;
};

struct RandomWalkLaw {};

struct OrthogonalLaw {
  Matrix gain;  // B^{-1} A
};

// Cycle of length k on the circle coordinates z = projection * x:
// [u_{(tau+1)k-1}; ...; u_{tau k}] = -R_k^+ Abar sat_r(z_{tau k}).
struct SubsampledLaw {
  Matrix projection;   // identity for the plain orthogonal case
  Matrix rk_pinv;      // (k m) x d2
  Matrix abar;         // A22^k
  int input_dim = 0;
};

}  // namespace detail

/// Bounded control policy. Immutable once synthesized.
class Policy {
 public:
  using Law = std::variant<detail::ZeroLaw, detail::RandomWalkLaw,
                           detail::OrthogonalLaw, detail::SubsampledLaw>;

  PolicyVariant variant() const { return variant_; }
  double radius() const { return r_; }
  /// Uniform bound R on every emitted control.
  double control_bound() const { return bound_; }
  int cycle_length() const { return k_; }
  double sigma_d() const { return sigma_d_; }
  /// Present for GeneralComposite policies.
  const std::optional<SpectralSplit>& split() const { return split_; }
  /// Maps a full state to the coordinates the policy regulates (the circle
  /// block for GeneralComposite). nullopt means the identity.
  const std::optional<Matrix>& circle_projection() const { return circle_projection_; }

  PolicyState initial_state() const;

  /// Emits the control for time t and advances the phase machine.
  /// Throws kContractViolation when t mod k != state.phase.
  Vector step(PolicyState& state, const VectorRef& x, long t) const;

  friend Policy synth_zero(int input_dim);
  friend Policy synth_random_walk(double r, double c1);
  friend Policy synth_orthogonal_stationary(const MatrixRef& a, const MatrixRef& b,
                                            double r, double c1);
  friend Policy synth_subsampled(const MatrixRef& a, const MatrixRef& b, double r,
                                 double c1);
  friend Policy synth_general(const LinearSystem& system, double r, double c1);

 private:
  Policy() = default;

  PolicyVariant variant_ = PolicyVariant::kZero;
  double r_ = 0.0;
  double bound_ = 0.0;
  double sigma_d_ = 0.0;
  int k_ = 1;
  Law law_ = detail::ZeroLaw{};
  std::optional<SpectralSplit> split_;
  std::optional<Matrix> circle_projection_;
};

Policy synth_zero(int input_dim);

/// u(x) = -sat_r(x). Requires r > c1.
Policy synth_random_walk(double r, double c1);

/// u(x) = -B^{-1} A sat_r(x) for orthogonal A and square invertible B.
Policy synth_orthogonal_stationary(const MatrixRef& a, const MatrixRef& b, double r,
                                   double c1);

/// k-history policy for orthogonal A with (A, B) reachable in k steps.
Policy synth_subsampled(const MatrixRef& a, const MatrixRef& b, double r, double c1);

/// General marginally stable + stabilizable case: the sub-sampled policy on
/// the unit-circle block of the spectral split. Schur-stable A yields the
/// Zero policy. `c1` bounds the first moment of the circle-block noise.
Policy synth_general(const LinearSystem& system, double r, double c1);

/// Functional form of Policy::step.
std::pair<Vector, PolicyState> policy_step(const Policy& p, const PolicyState& s,
                                           const VectorRef& x, long t);

inline double control_bound(const Policy& p) { return p.control_bound(); }

/// Pushforward of a first-moment bound onto the circle coordinates:
/// ||P2 T_inv||_2 * c1 (zero when there is no circle block).
double circle_noise_c1(const SpectralSplit& split, double c1);

struct SynthesisReport {
  PolicyVariant variant = PolicyVariant::kZero;
  double r = 0.0;
  double sigma_d = 0.0;
  double R = 0.0;
  int k = 0;
  double c1_estimate = 0.0;   // first moment of the full noise
  double c1_circle = 0.0;     // bound used for the r > C1 check
  double margin = 0.0;        // r / c1_circle (infinite when c1_circle = 0)
  double cond_T = 1.0;
  std::vector<std::string> warnings;
};

SynthesisReport make_report(const Policy& p, double c1_estimate, double c1_circle);

}  // namespace msbound
