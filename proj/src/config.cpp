#include "msbound/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace msbound {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorKind::kInvalidConfig, what); }

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) bad("unknown key '" + it.key() + "' in " + where);
  }
}

const json& required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) bad(std::string("missing '") + key + "' in " + where);
  return j.at(key);
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) bad(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(what + " must be finite");
  return v;
}

std::uint64_t count(const json& j, const std::string& what) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0)) {
    bad(what + " must be a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

Matrix matrix_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) bad(what + " must be a nonempty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) bad(what + " rows must be nonempty arrays");
  const std::size_t cols = j[0].size();
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) bad(what + " must be rectangular");
    for (std::size_t c = 0; c < cols; ++c) {
      m(i, c) = number(j[i][c], what + " entry");
    }
  }
  return m;
}

Vector vector_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) bad(what + " must be a nonempty array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = number(j[i], what + " entry");
  return v;
}

json matrix_to(const MatrixRef& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to(const VectorRef& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

NoiseSpec noise_from(const json& j, int dim) {
  if (!j.is_object()) bad("noise must be an object");
  reject_unknown(j, {"kind", "params"}, "noise");
  const json& kind = required(j, "kind", "noise");
  if (!kind.is_string()) bad("noise.kind must be a string");
  const auto parsed = parse_noise_kind(kind.get<std::string>());
  if (!parsed) bad("unknown noise kind '" + kind.get<std::string>() + "'");
  const json params = j.value("params", json::object());
  if (!params.is_object()) bad("noise.params must be an object");

  NoiseSpec spec;
  spec.kind = *parsed;
  switch (spec.kind) {
    case NoiseKind::kZero:
      reject_unknown(params, {}, "noise.params");
      break;
    case NoiseKind::kGaussianIID:
      reject_unknown(params, {"covariance", "variance"}, "noise.params");
      if (params.contains("covariance") && params.contains("variance")) {
        bad("give either noise.params.covariance or noise.params.variance");
      }
      if (params.contains("covariance")) {
        spec.covariance = matrix_from(params["covariance"], "noise.params.covariance");
      } else {
        const double var = params.contains("variance")
                               ? number(params["variance"], "noise.params.variance")
                               : 1.0;
        spec.covariance = var * Matrix::Identity(dim, dim);
      }
      break;
    case NoiseKind::kGaussianScheduled: {
      reject_unknown(params, {"schedule"}, "noise.params");
      const json& sched = required(params, "schedule", "noise.params");
      if (!sched.is_array() || sched.empty()) bad("noise.params.schedule must be a nonempty array");
      for (const auto& q : sched) spec.schedule.push_back(matrix_from(q, "schedule entry"));
      break;
    }
    case NoiseKind::kUniformBall:
      reject_unknown(params, {"radius"}, "noise.params");
      if (params.contains("radius")) spec.radius = number(params["radius"], "noise.params.radius");
      break;
    case NoiseKind::kLaplace:
    case NoiseKind::kCauchy:
      reject_unknown(params, {"scale"}, "noise.params");
      if (params.contains("scale")) spec.scale = number(params["scale"], "noise.params.scale");
      break;
    case NoiseKind::kStudentT:
      reject_unknown(params, {"scale", "nu"}, "noise.params");
      if (params.contains("scale")) spec.scale = number(params["scale"], "noise.params.scale");
      spec.nu = number(required(params, "nu", "noise.params"), "noise.params.nu");
      break;
  }
  return spec;
}

json noise_to(const NoiseSpec& spec) {
  json params = json::object();
  switch (spec.kind) {
    case NoiseKind::kZero: break;
    case NoiseKind::kGaussianIID: params["covariance"] = matrix_to(spec.covariance); break;
    case NoiseKind::kGaussianScheduled: {
      json sched = json::array();
      for (const auto& q : spec.schedule) sched.push_back(matrix_to(q));
      params["schedule"] = std::move(sched);
      break;
    }
    case NoiseKind::kUniformBall: params["radius"] = spec.radius; break;
    case NoiseKind::kLaplace:
    case NoiseKind::kCauchy: params["scale"] = spec.scale; break;
    case NoiseKind::kStudentT:
      params["nu"] = spec.nu;
      params["scale"] = spec.scale;
      break;
  }
  return json{{"kind", to_string(spec.kind)}, {"params", std::move(params)}};
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) bad("config must be a JSON object");
  reject_unknown(j,
                 {"system", "noise", "policy", "horizon", "runs", "master_seed", "threads",
                  "c1_samples", "compare_authorities", "outputs"},
                 "config");
  ExperimentConfig c;

  const json& sys = required(j, "system", "config");
  if (!sys.is_object()) bad("system must be an object");
  reject_unknown(sys, {"A", "B", "x0"}, "system");
  c.A = matrix_from(required(sys, "A", "system"), "system.A");
  c.B = matrix_from(required(sys, "B", "system"), "system.B");
  c.x0 = vector_from(required(sys, "x0", "system"), "system.x0");

  c.noise = noise_from(required(j, "noise", "config"), static_cast<int>(c.A.rows()));

  if (j.contains("policy")) {
    const json& p = j["policy"];
    if (!p.is_object()) bad("policy must be an object");
    reject_unknown(p, {"variant", "r", "margin"}, "policy");
    if (p.contains("variant")) {
      if (!p["variant"].is_string()) bad("policy.variant must be a string");
      c.policy.variant = p["variant"].get<std::string>();
    }
    if (p.contains("r")) {
      if (p["r"].is_string()) {
        if (p["r"].get<std::string>() != "auto") bad("policy.r must be a number or \"auto\"");
      } else {
        c.policy.r = number(p["r"], "policy.r");
      }
    }
    if (p.contains("margin")) c.policy.margin = number(p["margin"], "policy.margin");
  }

  if (j.contains("horizon")) c.horizon = static_cast<long>(count(j["horizon"], "horizon"));
  if (j.contains("runs")) c.runs = count(j["runs"], "runs");
  if (j.contains("master_seed")) c.master_seed = count(j["master_seed"], "master_seed");
  if (j.contains("threads")) c.threads = static_cast<unsigned>(count(j["threads"], "threads"));
  if (j.contains("c1_samples")) c.c1_samples = count(j["c1_samples"], "c1_samples");
  if (j.contains("compare_authorities")) {
    const json& a = j["compare_authorities"];
    if (!a.is_array()) bad("compare_authorities must be an array");
    for (const auto& v : a) c.compare_authorities.push_back(number(v, "compare_authorities entry"));
  }
  if (j.contains("outputs")) {
    const json& o = j["outputs"];
    if (!o.is_object()) bad("outputs must be an object");
    reject_unknown(o, {"csv", "plot_data", "svg"}, "outputs");
    auto str = [&](const char* key, std::string& out) {
      if (!o.contains(key)) return;
      if (!o[key].is_string()) bad(std::string("outputs.") + key + " must be a string");
      out = o[key].get<std::string>();
    };
    str("csv", c.outputs.csv);
    str("plot_data", c.outputs.plot_data);
    str("svg", c.outputs.svg);
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    bad(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json policy{{"variant", c.policy.variant}, {"margin", c.policy.margin}};
  if (c.policy.r) {
    policy["r"] = *c.policy.r;
  } else {
    policy["r"] = "auto";
  }
  return json{
      {"system", {{"A", matrix_to(c.A)}, {"B", matrix_to(c.B)}, {"x0", vector_to(c.x0)}}},
      {"noise", noise_to(c.noise)},
      {"policy", std::move(policy)},
      {"horizon", c.horizon},
      {"runs", c.runs},
      {"master_seed", c.master_seed},
      {"threads", c.threads},
      {"c1_samples", c.c1_samples},
      {"compare_authorities", c.compare_authorities},
      {"outputs",
       {{"csv", c.outputs.csv}, {"plot_data", c.outputs.plot_data}, {"svg", c.outputs.svg}}},
  };
}

void validate(const ExperimentConfig& c) {
  const auto d = c.A.rows();
  if (d < 1 || c.A.cols() != d) bad("system.A must be square");
  if (c.B.rows() != d || c.B.cols() < 1) bad("system.B must have as many rows as A");
  if (c.x0.size() != d) bad("system.x0 must have the dimension of A");
  if (!c.A.allFinite() || !c.B.allFinite() || !c.x0.allFinite()) bad("system entries must be finite");
  if (c.horizon < 1) bad("horizon must be >= 1");
  if (c.horizon > 0xffffffffL) bad("horizon must fit in 32 bits");
  if (c.runs < 1) bad("runs must be >= 1");
  if (c.c1_samples < 1000) bad("c1_samples must be >= 1000");
  if (c.policy.variant != "auto" && !parse_policy_variant(c.policy.variant)) {
    bad("unknown policy variant '" + c.policy.variant + "'");
  }
  if (c.policy.r && !(*c.policy.r > 0.0)) bad("policy.r must be positive");
  if (!(c.policy.margin > 1.0)) bad("policy.margin must exceed 1");
  for (double a : c.compare_authorities) {
    if (!(a >= 0.0)) bad("compare_authorities entries must be >= 0");
  }
  try {
    (void)make_noise(c.noise, static_cast<int>(d));
  } catch (const Error& e) {
    bad(std::string("noise: ") + e.what());
  }
}

NoiseModel make_noise(const NoiseSpec& spec, int dim) {
  switch (spec.kind) {
    case NoiseKind::kZero: return NoiseModel::zero(dim);
    case NoiseKind::kGaussianIID:
      if (spec.covariance.rows() != dim) {
        fail(ErrorKind::kInvalidArgument, "covariance dimension does not match A");
      }
      return NoiseModel::gaussian(spec.covariance);
    case NoiseKind::kGaussianScheduled:
      for (const auto& q : spec.schedule) {
        if (q.rows() != dim) fail(ErrorKind::kInvalidArgument, "schedule dimension does not match A");
      }
      return NoiseModel::gaussian_scheduled(spec.schedule);
    case NoiseKind::kUniformBall: return NoiseModel::uniform_ball(dim, spec.radius);
    case NoiseKind::kLaplace: return NoiseModel::laplace(dim, spec.scale);
    case NoiseKind::kStudentT: return NoiseModel::student_t(dim, spec.nu, spec.scale);
    case NoiseKind::kCauchy: return NoiseModel::cauchy(dim, spec.scale);
  }
  fail(ErrorKind::kInvalidConfig, "unknown noise kind");
}

ExperimentConfig paper_example_config() {
  ExperimentConfig c;
  c.A = Matrix::Zero(4, 4);
  c.A.topLeftCorner(2, 2) = rotation(0.8);
  c.A(2, 2) = 0.5;
  c.A(3, 3) = 0.9;
  c.B = Matrix::Zero(4, 1);
  c.B(0, 0) = 1.0;
  c.x0 = Vector(4);
  c.x0 << 10.0, 20.0, 30.0, 40.0;
  c.noise.kind = NoiseKind::kGaussianIID;
  c.noise.covariance = Matrix::Identity(4, 4);
  c.policy.variant = "auto";
  c.policy.r = 2.0;
  c.horizon = 500;
  c.runs = 1000;
  c.compare_authorities = {1.0, 0.1, 0.0};
  return c;
}

Synthesis synthesize(const ExperimentConfig& config, double authority_scale) {
  validate(config);
  if (!(authority_scale >= 0.0) || !std::isfinite(authority_scale)) {
    fail(ErrorKind::kInvalidArgument, "authority scale must be finite and >= 0");
  }
  const LinearSystem system(config.A, config.B);
  const int d = system.state_dim();
  const NoiseModel noise = make_noise(config.noise, d);
  const MomentBounds bounds = moment_bounds(noise);
  const C1Estimate c1 = estimate_c1(noise, config.c1_samples,
                                    RngStream(config.master_seed, RngStream::kAuxiliaryRunBase));

  std::optional<PolicyVariant> variant;
  if (config.policy.variant != "auto") variant = parse_policy_variant(config.policy.variant);
  // synth_general also covers Schur-stable A (Zero policy) and orthogonal A.
  if (!variant) variant = PolicyVariant::kGeneralComposite;

  std::vector<std::string> warnings;
  double c1_circle = c1.mean;
  if (*variant == PolicyVariant::kGeneralComposite) {
    c1_circle = circle_noise_c1(spectral_split(system.A(), system.B()), c1.mean);
  }
  double r_full = 0.0;
  if (config.policy.r) {
    r_full = *config.policy.r;
  } else if (c1_circle > 0.0 && std::isfinite(c1_circle)) {
    r_full = config.policy.margin * c1_circle;
  } else {
    r_full = 1.0;
    warnings.push_back("noise first moment is zero or unavailable; automatic radius set to 1");
  }
  const double r = authority_scale * r_full;

  double c1_check = c1_circle;
  if (bounds.violating || !std::isfinite(bounds.c1)) {
    c1_check = 0.0;
    warnings.push_back("noise violates the bounded fourth moment assumption; r > C1 not enforced");
  }
  if (authority_scale < 1.0) c1_check = 0.0;

  auto build = [&]() -> Policy {
    if (authority_scale == 0.0) return synth_zero(system.input_dim());
    switch (*variant) {
      case PolicyVariant::kZero: return synth_zero(system.input_dim());
      case PolicyVariant::kRandomWalkSat:
        if (!system.A().isIdentity(0.0) || !system.B().isIdentity(0.0)) {
          fail(ErrorKind::kHypothesisViolation, "random_walk requires A = I and B = I");
        }
        return synth_random_walk(r, c1_check);
      case PolicyVariant::kOrthogonalStationary:
        return synth_orthogonal_stationary(system.A(), system.B(), r, c1_check);
      case PolicyVariant::kSubsampled:
        return synth_subsampled(system.A(), system.B(), r, c1_check);
      case PolicyVariant::kGeneralComposite: return synth_general(system, r, c1_check);
    }
    fail(ErrorKind::kInvalidConfig, "unknown policy variant");
  };
  Policy policy = build();
  SynthesisReport report = make_report(policy, c1.mean, c1_circle);
  report.warnings.insert(report.warnings.end(), warnings.begin(), warnings.end());
  return Synthesis{std::move(policy), std::move(report), c1, bounds, r_full};
}

}  // namespace msbound
