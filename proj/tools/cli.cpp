#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "msbound/config.hpp"
#include "msbound/report.hpp"
#include "msbound/sim.hpp"

namespace msbound::cli {

using nlohmann::json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kInvalidConfig: return kUsage;
    case ErrorKind::kHypothesisViolation: return kHypothesis;
    case ErrorKind::kNotStabilizable: return kNotStabilizable;
    case ErrorKind::kInsufficientAuthority: return kAuthority;
    case ErrorKind::kRankDeficient:
    case ErrorKind::kNumericalFailure: return kNumerical;
    case ErrorKind::kIo: return kIo;
    case ErrorKind::kContractViolation: return kContract;
  }
  return kUsage;
}

namespace {

struct Options {
  std::string config_path;
  bool paper_example = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> runs;
  std::optional<long> horizon;
  std::optional<unsigned> threads;
  std::string csv;
  std::string svg;
  std::string plot_data;
  std::string compare;
};

ExperimentConfig resolve_config(const Options& o) {
  if (o.paper_example && !o.config_path.empty()) {
    fail(ErrorKind::kInvalidConfig, "--config and --paper-example are mutually exclusive");
  }
  if (!o.paper_example && o.config_path.empty()) {
    fail(ErrorKind::kInvalidConfig, "one of --config or --paper-example is required");
  }
  ExperimentConfig c = o.paper_example ? paper_example_config() : load_config(o.config_path);
  if (o.seed) c.master_seed = *o.seed;
  if (o.runs) c.runs = *o.runs;
  if (o.horizon) c.horizon = *o.horizon;
  if (o.threads) c.threads = *o.threads;
  if (!o.csv.empty()) c.outputs.csv = o.csv;
  if (!o.svg.empty()) c.outputs.svg = o.svg;
  if (!o.plot_data.empty()) c.outputs.plot_data = o.plot_data;
  if (!o.compare.empty()) {
    c.compare_authorities.clear();
    std::stringstream ss(o.compare);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != item.size()) {
        fail(ErrorKind::kInvalidConfig, "--compare-authorities expects numbers, got '" + item + "'");
      }
      c.compare_authorities.push_back(v);
    }
  }
  validate(c);
  return c;
}

int cmd_synth(const ExperimentConfig& c, std::ostream& out) {
  const Synthesis s = synthesize(c);
  json j = to_json(s.report);
  j["c1_stderr"] = s.c1.std_error;
  j["moment_violating"] = s.bounds.violating;
  out << j.dump(2) << '\n';
  return kOk;
}

MonteCarloOptions mc_options(const ExperimentConfig& c) {
  MonteCarloOptions o;
  o.threads = c.threads;
  return o;
}

// Growth rate of the uncontrolled second moment over the tail window, when
// the noise covariance is time-invariant.
std::optional<double> reference_slope(const ExperimentConfig& c, const NoiseModel& noise,
                                      long window_start) {
  if (c.noise.kind == NoiseKind::kGaussianScheduled) return std::nullopt;
  const auto q = noise.covariance_at(0);
  if (!q) return std::nullopt;
  const std::vector<double> oracle = zero_control_moment_series(c.A, *q, c.x0, c.horizon);
  return least_squares_slope(oracle, window_start, c.horizon);
}

int cmd_simulate(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  const NoiseModel noise = make_noise(c.noise, static_cast<int>(c.A.rows()));
  const LinearSystem system(c.A, c.B);
  std::vector<double> scales = c.compare_authorities;
  if (scales.empty()) scales.push_back(1.0);

  std::vector<ComparisonSeries> series;
  json summary = json::array();
  for (double scale : scales) {
    const Synthesis s = synthesize(c, scale);
    ComparisonSeries cs;
    cs.label = authority_label(scale);
    cs.authority = scale;
    cs.series = monte_carlo_moments(system, s.policy, noise, c.x0, c.horizon, c.runs,
                                    c.master_seed, mc_options(c));
    json entry = to_json(cs.series);
    entry["label"] = cs.label;
    entry["authority"] = scale;
    entry["synthesis"] = to_json(s.report);
    if (c.horizon >= 200) {
      entry["boundedness"] = to_json(boundedness_verdict(cs.series));
    }
    summary.push_back(std::move(entry));
    series.push_back(std::move(cs));
  }

  // The main CSV holds the full-authority run, or the first one requested.
  std::size_t main = 0;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (scales[i] == 1.0) {
      main = i;
      break;
    }
  }
  std::ostringstream csv;
  write_moment_csv(csv, series[main].series);
  if (c.outputs.csv.empty()) {
    out << csv.str();
  } else {
    write_text_file(c.outputs.csv, csv.str());
  }
  if (!c.outputs.plot_data.empty()) {
    std::ostringstream plot;
    write_comparison_csv(plot, series);
    write_text_file(c.outputs.plot_data, plot.str());
  }
  if (!c.outputs.svg.empty()) {
    std::ostringstream svg;
    std::ostringstream title;
    title << "Empirical mean of ||x_t||^2 over " << c.runs << " runs";
    write_svg(svg, series, title.str());
    write_text_file(c.outputs.svg, svg.str());
  }
  // Keep stdout machine-readable: the summary goes to stdout only when the
  // CSV went to a file.
  (c.outputs.csv.empty() ? err : out) << summary.dump(2) << '\n';
  return kOk;
}

struct CheckLine {
  std::string status;  // PASS, FAIL or WARN
  std::string name;
  std::string detail;
};

int cmd_verify(const ExperimentConfig& c, std::ostream& out) {
  const LinearSystem system(c.A, c.B);
  const int d = system.state_dim();
  const NoiseModel noise = make_noise(c.noise, d);
  const Synthesis s = synthesize(c);
  const Policy& policy = s.policy;
  const bool violating = s.bounds.violating;
  std::vector<CheckLine> lines;
  std::ostringstream os;
  os << std::setprecision(6);
  auto take = [&os] {
    std::string str = os.str();
    os.str("");
    return str;
  };

  if (violating) {
    os << "noise kind " << to_string(c.noise.kind)
       << " has no finite fourth moment; statistical checks are advisory";
    lines.push_back({"WARN", "moment_assumption", take()});
  } else {
    os << "C1 = " << s.c1.mean << " +/- " << s.c1.std_error << ", C4 = " << s.bounds.c4
       << ", r = " << policy.radius() << ", C1 on regulated block = " << s.report.c1_circle;
    lines.push_back({"PASS", "moment_assumption", take()});
  }
  // Statistical checks are only advisory when the moment assumption fails.
  auto stat_status = [&](bool pass) -> std::string {
    if (violating) return "WARN";
    return pass ? "PASS" : "FAIL";
  };

  const ChainSpec chain = chain_for(policy);
  const Vector z0 = chain.projection ? Vector(*chain.projection * c.x0) : c.x0;
  const double r = policy.radius();
  const std::vector<Trajectory> trajectories =
      simulate_runs(system, policy, noise, c.x0, c.horizon, c.runs, c.master_seed, c.threads);
  const std::uint64_t aux_samples = std::max<std::uint64_t>(2, std::min<std::uint64_t>(c.c1_samples, 200000));
  const ChainNoiseMoments moments = estimate_chain_noise_moments(
      noise, c.A, chain, r, aux_samples,
      RngStream(c.master_seed, RngStream::kAuxiliaryRunBase + 1));

  if (r > 0.0) {
    const double J = std::max(r, z0.norm());
    const DriftReport drift = drift_condition_check(trajectories, J, r, moments.c1, chain);
    os << "b_hat = " << drift.b_hat << " +/- " << drift.b_stderr << " vs bound "
       << drift.bound << " (J = " << drift.J << ", events = " << drift.events << ")";
    if (drift.verdict == Verdict::kInconclusive) {
      lines.push_back({"WARN", "drift", "no excursion events above J"});
    } else {
      lines.push_back({stat_status(drift.verdict == Verdict::kPass), "drift", take()});
    }
    const FourthDifferenceReport fourth = fourth_difference_check(trajectories, r, moments, chain);
    os << "max mean |dxi|^4 = " << fourth.max_mean_fourth << " at tau = " << fourth.argmax
       << " vs bound " << fourth.bound;
    if (fourth.verdict == Verdict::kInconclusive) {
      lines.push_back({"WARN", "fourth_difference", "no chain transitions"});
    } else {
      lines.push_back({stat_status(fourth.verdict == Verdict::kPass), "fourth_difference", take()});
    }
  } else {
    lines.push_back({"WARN", "drift", "policy applies no control; drift check skipped"});
    lines.push_back({"WARN", "fourth_difference", "policy applies no control; check skipped"});
  }

  const MomentSeries series =
      monte_carlo_moments(system, policy, noise, c.x0, c.horizon, c.runs, c.master_seed,
                          mc_options(c));
  std::optional<double> ref;
  if (policy.variant() != PolicyVariant::kZero && !violating) {
    ref = reference_slope(c, noise, series.tail_start);
  }
  const BoundednessReport bounded = boundedness_verdict(series, ref);
  os << to_string(bounded.verdict) << ", slope = " << bounded.slope << " CI [" << bounded.ci_low
     << ", " << bounded.ci_high << "]";
  if (ref) os << ", uncontrolled slope = " << *ref;
  if (series.diverged_runs) os << ", diverged runs = " << series.diverged_runs;
  if (bounded.verdict == Boundedness::kInconclusive) {
    if (!bounded.note.empty()) os << " (" << bounded.note << ")";
    lines.push_back({"WARN", "boundedness", take()});
  } else {
    lines.push_back({stat_status(bounded.verdict == Boundedness::kBounded), "boundedness", take()});
  }

  try {
    const ConvergenceReport conv = noiseless_convergence_check(system, policy, c.x0);
    os << "regulated block zero after " << conv.steps << " steps (limit " << conv.step_limit
       << "), ||x|| < 1e-6 after " << conv.decay_steps << " steps";
    lines.push_back({"PASS", "noiseless_convergence", take()});
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kNumericalFailure) throw;
    lines.push_back({"FAIL", "noiseless_convergence", e.what()});
  }

  bool failed = false;
  for (const auto& l : lines) {
    out << std::left << std::setw(5) << l.status << ' ' << std::setw(22) << l.name << ' '
        << l.detail << '\n';
    failed = failed || l.status == "FAIL";
  }
  return failed ? kVerifyFailed : kOk;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config_path, "Experiment config (JSON)");
  sub->add_flag("--paper-example", o.paper_example, "Use the built-in example experiment");
  sub->add_option("--seed", o.seed, "Master seed");
  sub->add_option("--runs", o.runs, "Monte Carlo runs N")->check(CLI::PositiveNumber);
  sub->add_option("--horizon", o.horizon, "Horizon T")->check(CLI::PositiveNumber);
  sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  sub->add_option("--csv", o.csv, "Moment CSV output path");
  sub->add_option("--svg", o.svg, "SVG chart output path");
  sub->add_option("--plot-data", o.plot_data, "Comparison CSV output path");
  sub->add_option("--compare-authorities", o.compare,
                  "Comma-separated authority scales, e.g. 1.0,0.1,0.0");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bounded-control synthesis and Monte Carlo verification", "msbound"};
  app.require_subcommand(1);
  Options o;
  CLI::App* synth = app.add_subcommand("synth", "Synthesize a policy and print its report");
  CLI::App* simulate = app.add_subcommand("simulate", "Run the Monte Carlo experiment");
  CLI::App* verify = app.add_subcommand("verify", "Check the drift and boundedness hypotheses");
  for (CLI::App* sub : {synth, simulate, verify}) add_common(sub, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const ExperimentConfig config = resolve_config(o);
    if (synth->parsed()) return cmd_synth(config, out);
    if (simulate->parsed()) return cmd_simulate(config, out, err);
    return cmd_verify(config, out);
  } catch (const Error& e) {
    err << "msbound: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::bad_alloc&) {
    err << "msbound: out of memory\n";
    return kNumerical;
  }
}

}  // namespace msbound::cli
