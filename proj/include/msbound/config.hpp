#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "msbound/linalg.hpp"
#include "msbound/noise.hpp"
#include "msbound/policy.hpp"

namespace msbound {

/// Noise section of a config. Only the fields used by `kind` are meaningful.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::kGaussianIID;
  Matrix covariance;              // gaussian
  std::vector<Matrix> schedule;   // gaussian_scheduled
  double radius = 1.0;            // uniform_ball
  double scale = 1.0;             // laplace, student_t, cauchy
  double nu = 5.0;                // student_t
};

struct PolicySpec {
  std::string variant = "auto";   // "auto" or a PolicyVariant name
  std::optional<double> r;        // nullopt = "auto": margin * C1
  double margin = 2.0;
};

struct OutputSpec {
  std::string csv;
  std::string plot_data;
  std::string svg;
};

struct ExperimentConfig {
  Matrix A;
  Matrix B;
  Vector x0;
  NoiseSpec noise;
  PolicySpec policy;
  long horizon = 500;
  std::uint64_t runs = 1000;
  std::uint64_t master_seed = 1;
  unsigned threads = 0;
  std::uint64_t c1_samples = 1000000;
  std::vector<double> compare_authorities;
  OutputSpec outputs;
};

/// Parses and validates; every failure is kInvalidConfig.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// Dimension, range and noise-parameter checks (kInvalidConfig).
void validate(const ExperimentConfig& config);

/// The two-rotation-plus-stable-block example: A = rotation(0.8) (+) diag(0.5, 0.9),
/// B = e1, x0 = (10, 20, 30, 40), N(0, I_4), N = 1000, T = 500, r = 2.
ExperimentConfig paper_example_config();

NoiseModel make_noise(const NoiseSpec& spec, int dim);

struct Synthesis {
  Policy policy;
  SynthesisReport report;
  C1Estimate c1;
  MomentBounds bounds;
  double r_full = 0.0;  // radius at authority scale 1
};

/// Estimates C1 on the auxiliary stream of the master seed, resolves "auto"
/// fields and synthesizes the policy with radius authority_scale * r. Scales
/// below 1 are reduced-authority comparisons and skip the r > C1 check;
/// scale 0 gives the Zero policy.
Synthesis synthesize(const ExperimentConfig& config, double authority_scale = 1.0);

}  // namespace msbound
