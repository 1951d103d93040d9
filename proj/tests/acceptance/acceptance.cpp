// Acceptance gate. Prints one PASS/FAIL line per criterion; with an argument
// runs only that criterion. Exit status is nonzero when any selected
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "msbound/config.hpp"
#include "msbound/report.hpp"
#include "msbound/sim.hpp"

using namespace msbound;

namespace {

// Oracles computed independently before the build.
constexpr double kFoldedMean = 0.7978845608028654;   // E|w|, w ~ N(0, 1)
constexpr long kConvergenceSteps = 24;               // 12 cycles of length 2 from sqrt(500)

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

LinearSystem example_system() {
  const ExperimentConfig c = paper_example_config();
  return LinearSystem(c.A, c.B);
}

Vector example_x0() { return paper_example_config().x0; }

NoiseModel unit_gaussian(int d) { return NoiseModel::gaussian(Matrix::Identity(d, d)); }

Outcome criterion1() {
  const auto t0 = Clock::now();
  ExperimentConfig c = paper_example_config();
  c.c1_samples = 1000000;
  c.policy.r.reset();  // r = 2 * C1 estimate
  c.policy.margin = 2.0;
  const Synthesis s = synthesize(c);
  const double elapsed = seconds_since(t0);
  ExperimentConfig fixed = paper_example_config();
  const Synthesis s2 = synthesize(fixed);
  Outcome o;
  o.pass = s.report.k == 2 && s.report.R >= 3.2 && s.report.R <= 4.0 && elapsed < 10.0;
  o.detail = "k = " + std::to_string(s.report.k) + ", C1 estimate = " + fmt(s.c1.mean) +
             ", r = 2*C1 = " + fmt(s.report.r) + ", R = " + fmt(s.report.R) +
             " (target [3.2, 4.0]), " + fmt(elapsed, 3) + " s; with r = 2: R = " +
             fmt(s2.report.R);
  return o;
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  const LinearSystem sys = example_system();
  const ExperimentConfig c = paper_example_config();
  const long T = 500;
  const MomentSeries s = monte_carlo_moments(sys, synth_zero(1), unit_gaussian(4), c.x0, T, 1000,
                                             c.master_seed);
  const std::vector<double> oracle =
      zero_control_moment_series(c.A, Matrix::Identity(4, 4), c.x0, T);
  long inside = 0;
  for (long t = 0; t <= T; ++t) {
    inside += std::abs(s.mean_sq[t] - oracle[t]) <= 3.0 * s.stderr_sq[t];
  }
  const double frac = static_cast<double>(inside) / static_cast<double>(T + 1);
  const double slope = least_squares_slope(s.mean_sq, T / 2, T);
  const double elapsed = seconds_since(t0);
  Outcome o;
  o.pass = frac >= 0.99 && std::abs(slope - 2.0) <= 0.2 && elapsed < 60.0;
  o.detail = "within 3 se at " + fmt(100 * frac, 4) + "% of steps, slope = " + fmt(slope) +
             " (target 2 +/- 0.2), " + fmt(elapsed, 3) + " s";
  return o;
}

Outcome criterion3() {
  const LinearSystem sys = example_system();
  const ExperimentConfig c = paper_example_config();
  const NoiseModel g = unit_gaussian(4);
  const std::vector<double> oracle =
      zero_control_moment_series(c.A, Matrix::Identity(4, 4), c.x0, c.horizon);
  const double ref = least_squares_slope(oracle, c.horizon / 2, c.horizon);

  const Synthesis full = synthesize(c, 1.0);
  const Synthesis tenth = synthesize(c, 0.1);
  const MomentSeries sf =
      monte_carlo_moments(sys, full.policy, g, c.x0, c.horizon, c.runs, c.master_seed);
  const MomentSeries su =
      monte_carlo_moments(sys, synth_zero(1), g, c.x0, c.horizon, c.runs, c.master_seed);
  const MomentSeries st =
      monte_carlo_moments(sys, tenth.policy, g, c.x0, c.horizon, c.runs, c.master_seed);
  const BoundednessReport bf = boundedness_verdict(sf, ref);
  const BoundednessReport bu = boundedness_verdict(su);
  const BoundednessReport bt = boundedness_verdict(st, ref);
  Outcome o;
  o.pass = bf.verdict == Boundedness::kBounded && bu.verdict == Boundedness::kGrowing &&
           std::abs(bu.slope - 2.0) <= 0.2;
  o.detail = std::string("full authority ") + to_string(bf.verdict) + " (slope " +
             fmt(bf.slope) + ", CI [" + fmt(bf.ci_low) + ", " + fmt(bf.ci_high) +
             "]); uncontrolled " + to_string(bu.verdict) + " (slope " + fmt(bu.slope) +
             "); tenth authority, informational: " + to_string(bt.verdict) + " (slope " +
             fmt(bt.slope) + ", final mean " + fmt(st.mean_sq.back()) + ")";
  return o;
}

Outcome criterion4() {
  const LinearSystem sys = example_system();
  const Policy p = synth_general(sys, 2.0, 0.0);
  const ConvergenceReport rep = noiseless_convergence_check(sys, p, example_x0());
  Outcome o;
  o.pass = rep.steps == kConvergenceSteps && rep.max_control_after <= 1e-12 &&
           rep.decay_steps >= 0 && rep.decay_steps <= 400;
  o.detail = "circle block zero after " + std::to_string(rep.steps) + " steps (expected " +
             std::to_string(kConvergenceSteps) + "), max |u| afterwards " +
             fmt(rep.max_control_after) + ", ||x|| < 1e-6 after " +
             std::to_string(rep.decay_steps) + " steps";
  return o;
}

struct WalkSetup {
  LinearSystem sys{Matrix::Identity(1, 1), Matrix::Identity(1, 1)};
  NoiseModel noise = unit_gaussian(1);
  Policy policy = synth_random_walk(2.0, kFoldedMean);
  std::vector<Trajectory> runs;
  WalkSetup() {
    Vector x0(1);
    x0 << 100.0;
    runs = simulate_runs(sys, policy, noise, x0, 500, 1000, 1);
  }
};

const WalkSetup& walk() {
  static const WalkSetup setup;
  return setup;
}

Outcome criterion5() {
  const WalkSetup& w = walk();
  const double target = -(2.0 - kFoldedMean);
  const DriftReport rep = drift_condition_check(w.runs, 2.0, 2.0, kFoldedMean);
  Outcome o;
  o.pass = rep.events >= 10000 && std::abs(rep.b_hat - target) <= 0.05;
  o.detail = "b_hat = " + fmt(rep.b_hat) + " +/- " + fmt(rep.b_stderr) + " over " +
             std::to_string(rep.events) + " events (J = 2), target " + fmt(target) +
             " +/- 0.05; drift bound check " + to_string(rep.verdict);
  return o;
}

Outcome criterion6() {
  const WalkSetup& w = walk();
  const ChainNoiseMoments m =
      estimate_chain_noise_moments(w.noise, w.sys.A(), ChainSpec{}, 2.0, 1000000,
                                   RngStream(1, RngStream::kAuxiliaryRunBase + 1));
  const FourthDifferenceReport rep = fourth_difference_check(w.runs, 2.0, m);
  Outcome o;
  o.pass = rep.verdict == Verdict::kPass;
  o.detail = "max mean |dxi|^4 = " + fmt(rep.max_mean_fourth) + " at tau = " +
             std::to_string(rep.argmax) + ", E[(r + |w|)^4] = " + fmt(m.fourth_bound) +
             " +/- " + fmt(m.fourth_bound_stderr);
  return o;
}

Matrix random_orthogonal(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = n(rng);
  return Eigen::HouseholderQR<Matrix>(g).householderQ();
}

Outcome criterion7() {
  double worst_cycle = 0.0, worst_recon = 0.0, worst_orth = 0.0, worst_ratio = 0.0;

  // Sub-sampled noiseless identity on the example system.
  const LinearSystem sys = example_system();
  const Policy p = synth_general(sys, 2.0, 0.0);
  const Matrix proj = *p.circle_projection();
  const Matrix abar = p.split()->A22 * p.split()->A22;
  const Trajectory tr =
      simulate_trajectory(sys, p, NoiseModel::zero(4), example_x0(), 60, RngStream(1, 0));
  for (std::size_t t = 0; t + 2 < tr.states.size(); t += 2) {
    const Vector z = proj * tr.states[t];
    const Vector expect = abar * (z - saturate(z, 2.0));
    worst_cycle = std::max(worst_cycle, (proj * tr.states[t + 2] - expect).norm());
  }

  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> ang(0.1, 3.0);
  std::uniform_real_distribution<double> stab(-0.95, 0.95);
  std::uniform_int_distribution<int> dim(1, 6);

  // Split reconstruction on random similarity transforms of marginally
  // stable block-diagonal matrices.
  const SpectralSplit ps = spectral_split(sys.A(), sys.B());
  auto split_errors = [&](const SpectralSplit& s, const Matrix& a) {
    worst_recon = std::max(worst_recon, (s.T * s.block_diagonal() * s.T_inv - a).norm() /
                                            (1.0 + a.norm()));
    worst_orth = std::max(
        worst_orth, (s.A22 * s.A22.transpose() - Matrix::Identity(s.d2(), s.d2())).norm());
  };
  split_errors(ps, sys.A());
  for (int i = 0; i < 200; ++i) {
    const int d = 2 + i % 5;
    Matrix core = Matrix::Zero(d, d);
    int pos = 0;
    for (; pos + 1 < d && pos < 4; pos += 2) core.block(pos, pos, 2, 2) = rotation(ang(rng));
    for (; pos < d; ++pos) core(pos, pos) = stab(rng);
    Matrix g(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) g(r, c) = n(rng) + (r == c ? 2.0 : 0.0);
    const Matrix a = g * core * g.inverse();
    Matrix b(d, 2);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < 2; ++c) b(r, c) = n(rng);
    split_errors(spectral_split(a, b), a);
  }

  // Allocation bound on random reachable orthogonal instances with k <= 4.
  int instances = 0;
  while (instances < 1000) {
    const int d = dim(rng);
    const int m = std::uniform_int_distribution<int>(1, d)(rng);
    Matrix core = Matrix::Zero(d, d);
    int pos = 0;
    for (; pos + 1 < d; pos += 2) core.block(pos, pos, 2, 2) = rotation(ang(rng));
    if (pos < d) core(pos, pos) = n(rng) > 0 ? 1.0 : -1.0;
    const Matrix u = random_orthogonal(d, rng);
    const Matrix a = u * core * u.transpose();
    Matrix b(d, m);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < m; ++c) b(r, c) = n(rng);
    const auto k = reachability_index(a, b);
    if (!k || *k > 4) continue;
    const Matrix rk = reachability_matrix(a, b, *k);
    const double sigma = min_singular_value(rk);
    if (sigma < 1e-6) continue;
    Vector v(d);
    for (int r = 0; r < d; ++r) v(r) = n(rng);
    const double r = 2.0;
    v = saturate(v, r) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const Vector alloc = pinv_apply(rk, v);
    for (int blk = 0; blk < *k; ++blk) {
      worst_ratio = std::max(worst_ratio, alloc.segment(blk * m, m).norm() / (r / sigma));
    }
    ++instances;
  }

  Outcome o;
  o.pass = worst_cycle <= 1e-10 && worst_recon <= 1e-8 && worst_orth <= 1e-8 &&
           worst_ratio <= 1.0 + 1e-12;
  o.detail = "cycle identity error " + fmt(worst_cycle) + ", reconstruction " +
             fmt(worst_recon) + ", A22 orthogonality " + fmt(worst_orth) +
             ", max ||u_i|| / (r / sigma_d) = " + fmt(worst_ratio, 12) + " over " +
             std::to_string(instances) + " instances";
  return o;
}

Outcome criterion8() {
  const LinearSystem sys = example_system();
  const ExperimentConfig c = paper_example_config();
  const Synthesis s = synthesize(c);
  auto csv_for = [&](unsigned threads) {
    MonteCarloOptions o;
    o.threads = threads;
    const MomentSeries m = monte_carlo_moments(sys, s.policy, unit_gaussian(4), c.x0, c.horizon,
                                               c.runs, c.master_seed, o);
    std::ostringstream os;
    write_moment_csv(os, m);
    return os.str();
  };
  const std::string ref = csv_for(1);
  const bool rerun = csv_for(1) == ref;
  const bool t4 = csv_for(4) == ref;
  const bool t8 = csv_for(8) == ref;
  Outcome o;
  o.pass = rerun && t4 && t8;
  o.detail = std::string("rerun ") + (rerun ? "identical" : "DIFFERS") + ", 4 threads " +
             (t4 ? "identical" : "DIFFERS") + ", 8 threads " + (t8 ? "identical" : "DIFFERS") +
             " (" + std::to_string(ref.size()) + " bytes)";
  return o;
}

Outcome criterion9() {
  const LinearSystem sys = example_system();
  const NoiseModel cauchy = NoiseModel::cauchy(4, 1.0);
  const Policy p = synth_general(sys, 2.0, 0.0);
  const std::vector<std::uint64_t> runs = {250, 500, 1000, 2000, 4000};
  Outcome o;
  try {
    const StabilizationProbe probe =
        second_moment_stabilization(sys, p, cauchy, example_x0(), 500, runs, 1);
    std::ostringstream os;
    os << "moment_violating = " << (cauchy.moment_violating() ? "true" : "false")
       << ", tail level by N:";
    for (std::size_t i = 0; i < probe.runs.size(); ++i) {
      os << ' ' << probe.runs[i] << ':' << fmt(probe.level[i], 4) << " (+/- "
         << fmt(probe.level_stderr[i], 3) << ", " << probe.diverged[i] << " diverged)";
    }
    os << ", stabilized = " << (probe.stabilized ? "true" : "false");
    o.pass = cauchy.moment_violating() && !probe.stabilized;
    o.detail = os.str();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("crashed: ") + e.what();
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"synthesis reproduction", criterion1},
      {"uncontrolled oracle agreement", criterion2},
      {"boundedness", criterion3},
      {"finite-time convergence", criterion4},
      {"excursion drift", criterion5},
      {"fourth difference", criterion6},
      {"algebraic identities", criterion7},
      {"reproducibility", criterion8},
      {"heavy-tail negative test", criterion9},
  };
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "usage: %s [criterion 1-%zu]\n", argv[0], criteria.size());
      return 2;
    }
  }
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i + 1) != only) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    all = all && o.pass;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
