#include "msbound/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace msbound {

namespace {

constexpr std::uint64_t kRunsPerChunk = 32;
constexpr double kZeroTolerance = 1e-12;

unsigned resolve_threads(unsigned requested, std::uint64_t tasks) {
  unsigned n = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return static_cast<unsigned>(std::min<std::uint64_t>(n, std::max<std::uint64_t>(tasks, 1)));
}

// Runs fn(i) for i in [0, tasks) on a small worker pool. Results must be
// written to per-task slots so that scheduling cannot affect them.
template <typename Fn>
void parallel_for(std::uint64_t tasks, unsigned threads, Fn&& fn) {
  const unsigned n = resolve_threads(threads, tasks);
  if (n <= 1) {
    for (std::uint64_t i = 0; i < tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (unsigned w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::uint64_t i = next.fetch_add(1);
        if (i >= tasks) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(tasks);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

void check_dimensions(const LinearSystem& system, const NoiseModel& noise, const VectorRef& x0,
                      long horizon) {
  if (x0.size() != system.state_dim()) {
    fail(ErrorKind::kInvalidArgument, "initial state dimension does not match A");
  }
  if (noise.dim() != system.state_dim()) {
    fail(ErrorKind::kInvalidArgument, "noise dimension does not match A");
  }
  if (horizon < 1) fail(ErrorKind::kInvalidArgument, "horizon must be >= 1");
  require_finite(x0, "x0");
}

// Tree reduction over a contiguous index range; the shape of the tree only
// depends on the number of items.
template <typename T, typename Merge>
T pairwise_reduce(std::vector<T>& items, std::size_t lo, std::size_t hi, Merge& merge) {
  if (hi - lo == 1) return std::move(items[lo]);
  const std::size_t mid = lo + (hi - lo) / 2;
  T left = pairwise_reduce(items, lo, mid, merge);
  T right = pairwise_reduce(items, mid, hi, merge);
  merge(left, right);
  return left;
}

// Running mean and centred second moment (Welford), merged with Chan's
// pairwise update. Identical inputs give exactly zero spread.
struct Moments {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }

  double stderr_of_mean() const {
    if (n < 2) return 0.0;
    const double var = std::max(0.0, m2 / static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
  }
};

struct Accumulator {
  std::vector<Moments> sq;
  std::vector<double> s1, s4, maxu;
  Moments slope, level;
  std::vector<std::uint64_t> diverged;
  double max_u = 0.0;

  explicit Accumulator(long horizon = 0)
      : sq(horizon + 1), s1(horizon + 1, 0.0), s4(horizon + 1, 0.0), maxu(horizon + 1, 0.0) {}

  void merge(const Accumulator& o) {
    for (std::size_t t = 0; t < sq.size(); ++t) {
      sq[t].merge(o.sq[t]);
      s1[t] += o.s1[t];
      s4[t] += o.s4[t];
      maxu[t] = std::max(maxu[t], o.maxu[t]);
    }
    slope.merge(o.slope);
    level.merge(o.level);
    diverged.insert(diverged.end(), o.diverged.begin(), o.diverged.end());
    max_u = std::max(max_u, o.max_u);
  }
};

}  // namespace

Trajectory simulate_trajectory(const LinearSystem& system, const Policy& policy,
                               const NoiseModel& noise, const VectorRef& x0, long horizon,
                               const RngStream& stream, const SimulationOptions& options) {
  check_dimensions(system, noise, x0, horizon);
  const Matrix& a = system.A();
  const Matrix& b = system.B();
  const double authority = policy.control_bound() + tol::kResidual * (1.0 + policy.control_bound());

  Trajectory traj;
  traj.run = stream.run();
  traj.seed = stream.master_seed();
  traj.states.reserve(horizon + 1);
  traj.controls.reserve(horizon);
  if (options.keep_noise) traj.noise.reserve(horizon);

  PolicyState state = policy.initial_state();
  Vector x = x0;
  traj.states.push_back(x);
  for (long t = 0; t < horizon; ++t) {
    Vector u = policy.step(state, x, t);
    if (u.size() != system.input_dim()) {
      fail(ErrorKind::kInvalidArgument, "policy input dimension does not match B");
    }
    const double un = u.norm();
    if (un > authority) {
      std::ostringstream os;
      os << "control norm " << un << " exceeds the authority bound "
         << policy.control_bound() << " at t = " << t;
      fail(ErrorKind::kContractViolation, os.str());
    }
    traj.max_control_norm = std::max(traj.max_control_norm, un);
    Vector w = noise.sample(stream, static_cast<std::uint64_t>(t));
    Vector next = a * x + b * u + w;
    traj.controls.push_back(std::move(u));
    if (options.keep_noise) traj.noise.push_back(std::move(w));
    if (!next.allFinite() || next.norm() > options.divergence_threshold) {
      traj.diverged = true;
      traj.truncated_at = t + 1;
      break;
    }
    x = next;
    traj.states.push_back(std::move(next));
  }
  return traj;
}

double replay_residual(const LinearSystem& system, const Trajectory& traj) {
  if (traj.noise.size() != traj.controls.size()) {
    fail(ErrorKind::kInvalidArgument, "replay needs a trajectory with retained noise");
  }
  double worst = 0.0;
  for (std::size_t t = 0; t + 1 < traj.states.size(); ++t) {
    const Vector expect =
        system.A() * traj.states[t] + system.B() * traj.controls[t] + traj.noise[t];
    worst = std::max(worst, (traj.states[t + 1] - expect).norm());
  }
  return worst;
}

std::vector<Trajectory> simulate_runs(const LinearSystem& system, const Policy& policy,
                                      const NoiseModel& noise, const VectorRef& x0,
                                      long horizon, std::uint64_t runs,
                                      std::uint64_t master_seed, unsigned threads,
                                      const SimulationOptions& options) {
  check_dimensions(system, noise, x0, horizon);
  std::vector<Trajectory> out(runs);
  const RngStream base(master_seed, 0);
  const Vector start = x0;
  parallel_for(runs, threads, [&](std::uint64_t i) {
    out[i] = simulate_trajectory(system, policy, noise, start, horizon, base.fork(i), options);
  });
  return out;
}

double least_squares_slope(std::span<const double> values, long start, long end) {
  if (start < 0 || end >= static_cast<long>(values.size()) || end - start < 1) {
    fail(ErrorKind::kInvalidArgument, "least_squares_slope: bad window");
  }
  const double n = static_cast<double>(end - start + 1);
  const double t_mean = 0.5 * static_cast<double>(start + end);
  double y_mean = 0.0;
  for (long t = start; t <= end; ++t) y_mean += values[t];
  y_mean /= n;
  double num = 0.0;
  double den = 0.0;
  for (long t = start; t <= end; ++t) {
    const double dt = static_cast<double>(t) - t_mean;
    num += dt * (values[t] - y_mean);
    den += dt * dt;
  }
  return num / den;
}

MomentSeries monte_carlo_moments(const LinearSystem& system, const Policy& policy,
                                 const NoiseModel& noise, const VectorRef& x0, long horizon,
                                 std::uint64_t runs, std::uint64_t master_seed,
                                 const MonteCarloOptions& options) {
  check_dimensions(system, noise, x0, horizon);
  if (runs < 1) fail(ErrorKind::kInvalidArgument, "at least one run is required");
  const long tail_start = options.tail_start.value_or(horizon / 2);
  if (tail_start < 0 || tail_start >= horizon) {
    fail(ErrorKind::kInvalidArgument, "tail window start must lie in [0, horizon)");
  }

  const std::uint64_t chunks = (runs + kRunsPerChunk - 1) / kRunsPerChunk;
  std::vector<Accumulator> partial(chunks);
  const RngStream base(master_seed, 0);
  const Vector start = x0;
  SimulationOptions sim_options;
  sim_options.divergence_threshold = options.divergence_threshold;

  parallel_for(chunks, options.threads, [&](std::uint64_t c) {
    Accumulator acc(horizon);
    std::vector<double> sq(horizon + 1);
    const std::uint64_t first = c * kRunsPerChunk;
    const std::uint64_t last = std::min(runs, first + kRunsPerChunk);
    for (std::uint64_t run = first; run < last; ++run) {
      const Trajectory traj =
          simulate_trajectory(system, policy, noise, start, horizon, base.fork(run), sim_options);
      acc.max_u = std::max(acc.max_u, traj.max_control_norm);
      if (traj.diverged) {
        acc.diverged.push_back(run);
        if (options.exclude_diverged) continue;
      }
      for (std::size_t t = 0; t < traj.states.size(); ++t) {
        const double n2 = traj.states[t].squaredNorm();
        sq[t] = n2;
        acc.sq[t].add(n2);
        acc.s1[t] += std::sqrt(n2);
        acc.s4[t] += n2 * n2;
      }
      for (std::size_t t = 0; t < traj.controls.size(); ++t) {
        acc.maxu[t] = std::max(acc.maxu[t], traj.controls[t].norm());
      }
      if (!traj.diverged) {
        const double slope = least_squares_slope(sq, tail_start, horizon);
        double level = 0.0;
        for (long t = tail_start; t <= horizon; ++t) level += sq[t];
        level /= static_cast<double>(horizon - tail_start + 1);
        acc.slope.add(slope);
        acc.level.add(level);
      }
    }
    partial[c] = std::move(acc);
  });

  auto merge = [](Accumulator& a, const Accumulator& b) { a.merge(b); };
  const Accumulator total = pairwise_reduce(partial, 0, partial.size(), merge);

  MomentSeries s;
  s.horizon = horizon;
  s.runs = runs;
  s.mean_sq.resize(horizon + 1);
  s.stderr_sq.resize(horizon + 1);
  s.mean_norm.resize(horizon + 1);
  s.mean_fourth.resize(horizon + 1);
  s.max_u_norm = total.maxu;
  s.count.resize(horizon + 1);
  for (long t = 0; t <= horizon; ++t) {
    const std::uint64_t n = total.sq[t].n;
    s.count[t] = n;
    s.mean_sq[t] = total.sq[t].mean;
    s.stderr_sq[t] = total.sq[t].stderr_of_mean();
    s.mean_norm[t] = n ? total.s1[t] / static_cast<double>(n) : 0.0;
    s.mean_fourth[t] = n ? total.s4[t] / static_cast<double>(n) : 0.0;
  }
  s.diverged_runs = total.diverged.size();
  s.diverged_run_ids = total.diverged;
  s.excluded_diverged = options.exclude_diverged;
  s.completeness = 1.0 - static_cast<double>(s.diverged_runs) / static_cast<double>(runs);
  s.max_control_norm = total.max_u;
  s.tail_start = tail_start;
  s.tail_runs = total.slope.n;
  s.tail_slope_mean = total.slope.mean;
  s.tail_slope_stderr = total.slope.stderr_of_mean();
  s.tail_level_mean = total.level.mean;
  s.tail_level_stderr = total.level.stderr_of_mean();
  return s;
}

std::vector<double> zero_control_moment_series(const MatrixRef& a, const MatrixRef& q,
                                               const VectorRef& x0, long horizon) {
  if (a.rows() != a.cols() || q.rows() != a.rows() || q.cols() != a.cols() ||
      x0.size() != a.rows()) {
    fail(ErrorKind::kInvalidArgument, "zero_control_moment_oracle: dimension mismatch");
  }
  if (horizon < 0) fail(ErrorKind::kInvalidArgument, "t must be >= 0");
  std::vector<double> out(horizon + 1);
  Vector mean = x0;
  Matrix propagated = q;  // A^j Q A^j^T
  double noise_sum = 0.0;
  for (long t = 0; t <= horizon; ++t) {
    out[t] = mean.squaredNorm() + noise_sum;
    noise_sum += propagated.trace();
    propagated = a * propagated * a.transpose();
    mean = a * mean;
  }
  return out;
}

double zero_control_moment_oracle(const MatrixRef& a, const MatrixRef& q, const VectorRef& x0,
                                  long t) {
  return zero_control_moment_series(a, q, x0, t).back();
}

ChainSpec chain_for(const Policy& policy) {
  ChainSpec chain;
  chain.k = policy.cycle_length();
  chain.projection = policy.circle_projection();
  return chain;
}

std::vector<double> chain_values(const Trajectory& traj, const ChainSpec& chain) {
  if (chain.k < 1) fail(ErrorKind::kInvalidArgument, "chain period must be >= 1");
  std::vector<double> xi;
  for (std::size_t t = 0; t < traj.states.size(); t += chain.k) {
    xi.push_back(chain.projection ? (*chain.projection * traj.states[t]).norm()
                                  : traj.states[t].norm());
  }
  return xi;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "PASS";
    case Verdict::kFail: return "FAIL";
    case Verdict::kInconclusive: return "INCONCLUSIVE";
  }
  return "unknown";
}

DriftReport drift_condition_check(std::span<const Trajectory> trajectories, double J, double r,
                                  double c1, const ChainSpec& chain) {
  if (!(J >= r)) fail(ErrorKind::kInvalidArgument, "excursion threshold J must be >= r");
  DriftReport rep;
  rep.J = J;
  rep.r = r;
  rep.c1 = c1;
  rep.bound = -(r - c1);
  Moments drift;
  double m4 = 0.0;
  for (const auto& traj : trajectories) {
    const std::vector<double> xi = chain_values(traj, chain);
    for (std::size_t i = 0; i + 1 < xi.size(); ++i) {
      const double delta = xi[i + 1] - xi[i];
      m4 += delta * delta * delta * delta;
      ++rep.transitions;
      if (xi[i] > J) {
        drift.add(delta);
        ++rep.events;
      }
    }
  }
  if (rep.transitions > 0) rep.m4_hat = m4 / static_cast<double>(rep.transitions);
  // Without a saturation radius there is no drift to detect.
  if (rep.events == 0 || r <= 0.0) {
    rep.verdict = Verdict::kInconclusive;
    return rep;
  }
  rep.b_hat = drift.mean;
  rep.b_stderr = drift.stderr_of_mean();
  rep.verdict = rep.b_hat <= rep.bound + 3.0 * rep.b_stderr ? Verdict::kPass : Verdict::kFail;
  return rep;
}

ChainNoiseMoments estimate_chain_noise_moments(const NoiseModel& noise, const MatrixRef& a,
                                               const ChainSpec& chain, double r,
                                               std::uint64_t samples, const RngStream& stream) {
  if (a.rows() != noise.dim() || a.cols() != noise.dim()) {
    fail(ErrorKind::kInvalidArgument, "noise dimension does not match A");
  }
  if (samples < 2) fail(ErrorKind::kInvalidArgument, "need at least two samples");
  Moments first, fourth;
  for (std::uint64_t i = 0; i < samples; ++i) {
    Vector acc = Vector::Zero(noise.dim());
    for (int j = 0; j < chain.k; ++j) {
      acc = a * acc + noise.sample(stream, i * chain.k + j);
    }
    const double n = chain.projection ? (*chain.projection * acc).norm() : acc.norm();
    first.add(n);
    fourth.add(std::pow(r + n, 4));
  }
  ChainNoiseMoments m;
  m.samples = samples;
  m.c1 = first.mean;
  m.c1_stderr = first.stderr_of_mean();
  m.fourth_bound = fourth.mean;
  m.fourth_bound_stderr = fourth.stderr_of_mean();
  return m;
}

FourthDifferenceReport fourth_difference_check(std::span<const Trajectory> trajectories,
                                               double r, const ChainNoiseMoments& moments,
                                               const ChainSpec& chain) {
  (void)r;  // the radius enters through moments.fourth_bound
  FourthDifferenceReport rep;
  rep.bound = moments.fourth_bound + 3.0 * moments.fourth_bound_stderr;
  std::vector<double> sum;
  std::vector<std::uint64_t> cnt;
  for (const auto& traj : trajectories) {
    const std::vector<double> xi = chain_values(traj, chain);
    if (xi.size() > sum.size() + 1) {
      sum.resize(xi.size() - 1, 0.0);
      cnt.resize(xi.size() - 1, 0);
    }
    for (std::size_t i = 0; i + 1 < xi.size(); ++i) {
      const double d = xi[i + 1] - xi[i];
      sum[i] += d * d * d * d;
      cnt[i] += 1;
    }
  }
  if (sum.empty()) return rep;
  for (std::size_t i = 0; i < sum.size(); ++i) {
    const double m = sum[i] / static_cast<double>(cnt[i]);
    if (m > rep.max_mean_fourth || i == 0) {
      rep.max_mean_fourth = m;
      rep.argmax = static_cast<long>(i);
    }
  }
  rep.verdict = rep.max_mean_fourth <= rep.bound ? Verdict::kPass : Verdict::kFail;
  return rep;
}

const char* to_string(Boundedness b) {
  switch (b) {
    case Boundedness::kBounded: return "BOUNDED";
    case Boundedness::kGrowing: return "GROWING";
    case Boundedness::kInconclusive: return "INCONCLUSIVE";
  }
  return "unknown";
}

BoundednessReport boundedness_verdict(const MomentSeries& series,
                                      std::optional<double> reference_slope) {
  BoundednessReport rep;
  rep.reference_slope = reference_slope;
  const long horizon = static_cast<long>(series.mean_sq.size()) - 1;
  if (horizon < 200) {
    rep.note = "horizon shorter than 200 steps";
    return rep;
  }
  const long start = series.tail_start > 0 ? series.tail_start : horizon / 2;
  rep.window_start = start;
  rep.window_end = horizon;
  if (horizon - start < 3) {
    rep.note = "tail window too short";
    return rep;
  }
  rep.slope = least_squares_slope(series.mean_sq, start, horizon);

  const bool all_complete = series.count[start] == series.count[horizon] &&
                            series.tail_runs == series.count[horizon];
  if (series.tail_runs >= 2 && all_complete) {
    rep.slope_stderr = series.tail_slope_stderr;
  } else {
    // Residual-based OLS standard error; ignores serial correlation.
    const double n = static_cast<double>(horizon - start + 1);
    const double t_mean = 0.5 * static_cast<double>(start + horizon);
    double y_mean = 0.0;
    for (long t = start; t <= horizon; ++t) y_mean += series.mean_sq[t];
    y_mean /= n;
    double sxx = 0.0, sse = 0.0;
    for (long t = start; t <= horizon; ++t) {
      const double dt = static_cast<double>(t) - t_mean;
      sxx += dt * dt;
      const double resid = series.mean_sq[t] - (y_mean + rep.slope * dt);
      sse += resid * resid;
    }
    rep.slope_stderr = std::sqrt(sse / (n - 2.0) / sxx);
    rep.note = "slope error from OLS residuals";
  }
  double level = 0.0;
  for (long t = start; t <= horizon; ++t) level += series.mean_sq[t];
  level /= static_cast<double>(horizon - start + 1);
  const double half_width = 3.0 * rep.slope_stderr + 1e-9 * (1.0 + std::abs(level));
  rep.ci_low = rep.slope - half_width;
  rep.ci_high = rep.slope + half_width;

  const bool covers_reference =
      reference_slope && *reference_slope >= rep.ci_low && *reference_slope <= rep.ci_high;
  if (rep.ci_low > 0.0) {
    rep.verdict = Boundedness::kGrowing;
  } else if (covers_reference) {
    rep.verdict = Boundedness::kInconclusive;
    rep.note = "interval covers both zero and the uncontrolled slope";
  } else {
    rep.verdict = Boundedness::kBounded;
  }
  return rep;
}

ConvergenceReport noiseless_convergence_check(const LinearSystem& system, const Policy& policy,
                                              const VectorRef& x0, double decay_tolerance,
                                              long max_steps) {
  const int d = system.state_dim();
  if (x0.size() != d) fail(ErrorKind::kInvalidArgument, "initial state dimension mismatch");
  const Matrix projection = policy.circle_projection().value_or(Matrix::Identity(d, d));
  auto block_norm = [&](const Vector& x) {
    return projection.rows() == 0 ? 0.0 : (projection * x).norm();
  };

  ConvergenceReport rep;
  const int k = policy.cycle_length();
  const double r = policy.radius();
  const double z0 = block_norm(x0);
  rep.step_limit = r > 0.0 ? k * (static_cast<long>(std::ceil(z0 / r)) + 2) : 2L * k;
  if (policy.split() && policy.split()->d1() > 0) {
    Eigen::EigenSolver<Matrix> es(policy.split()->A11, false);
    rep.stable_spectral_radius = es.eigenvalues().cwiseAbs().maxCoeff();
  }

  PolicyState state = policy.initial_state();
  Vector x = x0;
  std::vector<double> control_norms;
  std::vector<double> state_norms;
  long last_nonzero = -1;
  for (long t = 0;; ++t) {
    state_norms.push_back(x.norm());
    if (block_norm(x) > kZeroTolerance) last_nonzero = t;
    if (rep.decay_steps < 0 && t > last_nonzero && x.norm() < decay_tolerance) {
      rep.decay_steps = t;
    }
    if (t >= rep.step_limit && rep.decay_steps >= 0) break;
    if (t > rep.step_limit && last_nonzero >= rep.step_limit) break;
    if (t >= max_steps) break;
    const Vector u = policy.step(state, x, t);
    control_norms.push_back(u.norm());
    x = system.A() * x + system.B() * u;
    if (!x.allFinite()) break;
  }

  rep.steps = last_nonzero + 1;
  if (rep.steps > rep.step_limit) {
    std::ostringstream os;
    os << "regulated block did not reach zero within " << rep.step_limit << " steps";
    fail(ErrorKind::kNumericalFailure, os.str());
  }
  for (std::size_t t = rep.steps; t < control_norms.size(); ++t) {
    rep.max_control_after = std::max(rep.max_control_after, control_norms[t]);
  }
  if (rep.max_control_after > kZeroTolerance) {
    std::ostringstream os;
    os << "controls after convergence are not zero (max " << rep.max_control_after << ")";
    fail(ErrorKind::kNumericalFailure, os.str());
  }
  if (rep.decay_steps < 0) {
    std::ostringstream os;
    os << "state norm did not fall below " << decay_tolerance << " within " << max_steps
       << " steps";
    fail(ErrorKind::kNumericalFailure, os.str());
  }
  if (rep.decay_steps > rep.steps && state_norms[rep.steps] > 0.0) {
    rep.decay_rate = std::pow(state_norms[rep.decay_steps] / state_norms[rep.steps],
                              1.0 / static_cast<double>(rep.decay_steps - rep.steps));
  }
  return rep;
}

StabilizationProbe second_moment_stabilization(const LinearSystem& system, const Policy& policy,
                                               const NoiseModel& noise, const VectorRef& x0,
                                               long horizon, std::span<const std::uint64_t> runs,
                                               std::uint64_t master_seed, unsigned threads,
                                               double rel_tol) {
  if (runs.size() < 2) fail(ErrorKind::kInvalidArgument, "need at least two run counts");
  StabilizationProbe probe;
  MonteCarloOptions options;
  options.threads = threads;
  for (const std::uint64_t n : runs) {
    const MomentSeries s =
        monte_carlo_moments(system, policy, noise, x0, horizon, n, master_seed, options);
    probe.runs.push_back(n);
    probe.level.push_back(s.tail_level_mean);
    probe.level_stderr.push_back(s.tail_level_stderr);
    probe.diverged.push_back(s.diverged_runs);
  }
  const std::size_t last = probe.runs.size() - 1;
  const double rel = probe.level[last] > 0.0 ? probe.level_stderr[last] / probe.level[last]
                                             : 0.0;
  const double gap = std::abs(probe.level[last] - probe.level[last - 1]);
  const double band = 3.0 * std::hypot(probe.level_stderr[last], probe.level_stderr[last - 1]);
  probe.stabilized = std::isfinite(probe.level[last]) && rel <= rel_tol && gap <= band;
  return probe;
}

}  // namespace msbound
