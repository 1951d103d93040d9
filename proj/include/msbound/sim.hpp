#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msbound/linalg.hpp"
#include "msbound/noise.hpp"
#include "msbound/policy.hpp"
#include "msbound/rng.hpp"

namespace msbound {

/// One closed-loop run of x_{t+1} = A x_t + B u_t + w_t.
struct Trajectory {
  std::uint64_t run = 0;
  std::uint64_t seed = 0;
  std::vector<Vector> states;    // x_0 .. x_T (fewer when diverged)
  std::vector<Vector> controls;  // u_0 .. u_{T-1}
  std::vector<Vector> noise;     // w_0 .. w_{T-1}, only when retained
  bool diverged = false;
  std::optional<long> truncated_at;  // first t with a non-finite or huge state
  double max_control_norm = 0.0;
};

struct SimulationOptions {
  bool keep_noise = false;
  double divergence_threshold = 1e12;
};

Trajectory simulate_trajectory(const LinearSystem& system, const Policy& policy,
                               const NoiseModel& noise, const VectorRef& x0, long horizon,
                               const RngStream& stream, const SimulationOptions& options = {});

/// max_t ||x_{t+1} - (A x_t + B u_t + w_t)||; requires retained noise.
double replay_residual(const LinearSystem& system, const Trajectory& traj);

/// Runs 0..runs-1 of `master_seed`, returned in run order. Parallelism does
/// not affect the result.
std::vector<Trajectory> simulate_runs(const LinearSystem& system, const Policy& policy,
                                      const NoiseModel& noise, const VectorRef& x0,
                                      long horizon, std::uint64_t runs,
                                      std::uint64_t master_seed, unsigned threads = 0,
                                      const SimulationOptions& options = {});

/// Per-time empirical moments of ||x_t|| over Monte Carlo runs.
struct MomentSeries {
  long horizon = 0;
  std::uint64_t runs = 0;
  std::vector<double> mean_sq;      // E||x_t||^2
  std::vector<double> stderr_sq;    // standard error of mean_sq
  std::vector<double> mean_norm;    // E||x_t||
  std::vector<double> mean_fourth;  // E||x_t||^4
  std::vector<double> max_u_norm;   // max over runs of ||u_t|| (0 at t = T)
  std::vector<std::uint64_t> count; // runs contributing at t

  std::uint64_t diverged_runs = 0;
  std::vector<std::uint64_t> diverged_run_ids;
  bool excluded_diverged = false;
  double completeness = 1.0;        // fraction of runs that never diverged
  double max_control_norm = 0.0;

  // Per-run statistics over the tail window [tail_start, horizon], computed
  // from complete runs only. The slope of the mean series equals the mean of
  // the per-run least-squares slopes, so their spread gives an honest
  // standard error despite the time correlation of the series.
  long tail_start = 0;
  std::uint64_t tail_runs = 0;
  double tail_slope_mean = 0.0;
  double tail_slope_stderr = 0.0;
  double tail_level_mean = 0.0;     // time-average of ||x_t||^2 over the window
  double tail_level_stderr = 0.0;
};

struct MonteCarloOptions {
  unsigned threads = 0;             // 0 = hardware concurrency
  bool exclude_diverged = false;    // drop diverged runs entirely
  std::optional<long> tail_start;   // default horizon / 2
  double divergence_threshold = 1e12;
};

MomentSeries monte_carlo_moments(const LinearSystem& system, const Policy& policy,
                                 const NoiseModel& noise, const VectorRef& x0, long horizon,
                                 std::uint64_t runs, std::uint64_t master_seed,
                                 const MonteCarloOptions& options = {});

/// E||x_t||^2 of the uncontrolled system with time-invariant noise covariance
/// Q: ||A^t x0||^2 + sum_{j<t} trace(A^j Q A^j^T).
double zero_control_moment_oracle(const MatrixRef& a, const MatrixRef& q, const VectorRef& x0,
                                  long t);
/// The same quantity for t = 0..horizon.
std::vector<double> zero_control_moment_series(const MatrixRef& a, const MatrixRef& q,
                                               const VectorRef& x0, long horizon);

/// Least-squares slope of values[start..end] against t.
double least_squares_slope(std::span<const double> values, long start, long end);

/// The scalar chain xi_tau = ||P x_{tau k}|| on which the drift hypotheses
/// are checked: k = 1, P = I for stationary policies; the sub-sampled circle
/// chain for k-history policies.
struct ChainSpec {
  int k = 1;
  std::optional<Matrix> projection;  // nullopt = identity
};

ChainSpec chain_for(const Policy& policy);
std::vector<double> chain_values(const Trajectory& traj, const ChainSpec& chain);

enum class Verdict { kPass, kFail, kInconclusive };
const char* to_string(Verdict v);

struct DriftReport {
  double J = 0.0;
  double r = 0.0;
  double c1 = 0.0;
  double b_hat = 0.0;         // mean of xi_{tau+1} - xi_tau on {xi_tau > J}
  double b_stderr = 0.0;
  double bound = 0.0;         // -(r - c1)
  double m4_hat = 0.0;        // mean |xi_{tau+1} - xi_tau|^4 over all transitions
  std::uint64_t events = 0;
  std::uint64_t transitions = 0;
  Verdict verdict = Verdict::kInconclusive;
};

/// Excursion drift on {xi > J}. PASS when b_hat <= -(r - c1) + 3 stderr.
DriftReport drift_condition_check(std::span<const Trajectory> trajectories, double J, double r,
                                  double c1, const ChainSpec& chain = {});

/// First moment of the chain noise and E[(r + ||w~||)^4], where
/// w~ = P sum_i A^{k-1-i} w_{tau k + i} is the noise of one chain transition.
struct ChainNoiseMoments {
  double c1 = 0.0;
  double c1_stderr = 0.0;
  double fourth_bound = 0.0;
  double fourth_bound_stderr = 0.0;
  std::uint64_t samples = 0;
};

ChainNoiseMoments estimate_chain_noise_moments(const NoiseModel& noise, const MatrixRef& a,
                                               const ChainSpec& chain, double r,
                                               std::uint64_t samples, const RngStream& stream);

struct FourthDifferenceReport {
  double max_mean_fourth = 0.0;  // max over tau of the run-average |dxi|^4
  long argmax = 0;
  double bound = 0.0;            // E[(r + ||w~||)^4] estimate + 3 stderr
  Verdict verdict = Verdict::kInconclusive;
};

FourthDifferenceReport fourth_difference_check(std::span<const Trajectory> trajectories,
                                               double r, const ChainNoiseMoments& moments,
                                               const ChainSpec& chain = {});

enum class Boundedness { kBounded, kGrowing, kInconclusive };
const char* to_string(Boundedness b);

struct BoundednessReport {
  Boundedness verdict = Boundedness::kInconclusive;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  long window_start = 0;
  long window_end = 0;
  std::optional<double> reference_slope;
  std::string note;
};

/// Tail-window slope test: BOUNDED when the 3-sigma interval contains 0 and
/// excludes `reference_slope` (the uncontrolled growth rate) when given.
BoundednessReport boundedness_verdict(const MomentSeries& series,
                                      std::optional<double> reference_slope = std::nullopt);

struct ConvergenceReport {
  long steps = 0;             // first t after which ||P x_t|| <= 1e-12 for good
  long step_limit = 0;        // k (ceil(||P x0|| / r) + 2)
  long decay_steps = -1;      // first t with ||x_t|| < decay_tolerance; -1 if never
  double max_control_after = 0.0;
  double decay_rate = 0.0;    // (||x_end|| / ||x_steps||)^{1 / (end - steps)}
  double stable_spectral_radius = 0.0;
};

/// Noiseless finite-time convergence of the regulated block followed by
/// open-loop decay of the remaining state. Throws kNumericalFailure when the
/// block does not reach zero within step_limit or the state does not decay
/// below `decay_tolerance` within `max_steps`.
ConvergenceReport noiseless_convergence_check(const LinearSystem& system, const Policy& policy,
                                              const VectorRef& x0,
                                              double decay_tolerance = 1e-6,
                                              long max_steps = 100000);

/// Behaviour of the tail-averaged second moment as the run count grows.
struct StabilizationProbe {
  std::vector<std::uint64_t> runs;
  std::vector<double> level;          // tail-window mean of ||x_t||^2
  std::vector<double> level_stderr;
  std::vector<std::uint64_t> diverged;
  bool stabilized = false;
};

/// Stabilized when the relative standard error at the largest run count is
/// at most `rel_tol` and the last two estimates agree within 3 combined
/// standard errors.
StabilizationProbe second_moment_stabilization(const LinearSystem& system, const Policy& policy,
                                               const NoiseModel& noise, const VectorRef& x0,
                                               long horizon, std::span<const std::uint64_t> runs,
                                               std::uint64_t master_seed, unsigned threads = 0,
                                               double rel_tol = 0.05);

}  // namespace msbound
