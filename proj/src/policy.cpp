#include "msbound/policy.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/LU>

namespace msbound {

const char* to_string(PolicyVariant v) {
  switch (v) {
    case PolicyVariant::kZero: return "zero";
    case PolicyVariant::kRandomWalkSat: return "random_walk";
    case PolicyVariant::kOrthogonalStationary: return "orthogonal_stationary";
    case PolicyVariant::kSubsampled: return "subsampled";
    case PolicyVariant::kGeneralComposite: return "general";
  }
  return "unknown";
}

std::optional<PolicyVariant> parse_policy_variant(const std::string& s) {
  for (auto v : {PolicyVariant::kZero, PolicyVariant::kRandomWalkSat,
                 PolicyVariant::kOrthogonalStationary, PolicyVariant::kSubsampled,
                 PolicyVariant::kGeneralComposite}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

namespace {

void require_authority(double r, double c1) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    fail(ErrorKind::kInvalidArgument, "saturation radius must be positive and finite");
  }
  if (!(c1 >= 0.0)) {
    fail(ErrorKind::kInvalidArgument, "first-moment bound must be nonnegative");
  }
  if (!(r > c1)) {
    std::ostringstream os;
    os << "saturation radius r = " << r << " must exceed the noise first moment C1 = "
       << c1;
    fail(ErrorKind::kInsufficientAuthority, os.str());
  }
}

void require_orthogonal(const MatrixRef& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    fail(ErrorKind::kInvalidArgument, "A must be square and nonempty");
  }
  require_finite(a, "A");
  const double err =
      (a * a.transpose() - Matrix::Identity(a.rows(), a.rows())).norm();
  if (err > tol::kOrthogonality) {
    std::ostringstream os;
    os << "A is not orthogonal (||A A^T - I||_F = " << err << ")";
    fail(ErrorKind::kHypothesisViolation, os.str());
  }
}

Matrix matrix_power(const MatrixRef& a, int k) {
  Matrix out = Matrix::Identity(a.rows(), a.cols());
  for (int i = 0; i < k; ++i) out = a * out;
  return out;
}

}  // namespace

Policy synth_zero(int input_dim) {
  if (input_dim < 1) fail(ErrorKind::kInvalidArgument, "input dimension must be >= 1");
  Policy p;
  p.variant_ = PolicyVariant::kZero;
  p.law_ = detail::ZeroLaw{input_dim};
  return p;
}

Policy synth_random_walk(double r, double c1) {
  require_authority(r, c1);
  Policy p;
  p.variant_ = PolicyVariant::kRandomWalkSat;
  p.r_ = r;
  p.bound_ = r;
  p.law_ = detail::RandomWalkLaw{};
  return p;
}

Policy synth_orthogonal_stationary(const MatrixRef& a, const MatrixRef& b, double r,
                                   double c1) {
  require_orthogonal(a);
  if (b.rows() != a.rows() || b.cols() != a.rows()) {
    fail(ErrorKind::kInvalidArgument, "B must be square with the dimension of A");
  }
  require_finite(b, "B");
  require_authority(r, c1);
  Eigen::JacobiSVD<Matrix> svd(b);
  const auto& s = svd.singularValues();
  if (!(s(s.size() - 1) > tol::kRank * s(0))) {
    fail(ErrorKind::kRankDeficient, "B is rank deficient");
  }
  Policy p;
  p.variant_ = PolicyVariant::kOrthogonalStationary;
  p.r_ = r;
  p.sigma_d_ = s(s.size() - 1);
  p.bound_ = r / p.sigma_d_;
  p.law_ = detail::OrthogonalLaw{Eigen::FullPivLU<Matrix>(b).solve(a)};
  return p;
}

Policy synth_subsampled(const MatrixRef& a, const MatrixRef& b, double r, double c1) {
  require_orthogonal(a);
  if (b.rows() != a.rows() || b.cols() == 0) {
    fail(ErrorKind::kInvalidArgument, "B must be d x m with m >= 1");
  }
  require_finite(b, "B");
  require_authority(r, c1);
  const auto k = reachability_index(a, b);
  if (!k) fail(ErrorKind::kNotStabilizable, "(A, B) is not reachable");
  const Matrix rk = reachability_matrix(a, b, *k);

  Policy p;
  p.variant_ = PolicyVariant::kSubsampled;
  p.r_ = r;
  p.k_ = *k;
  p.sigma_d_ = min_singular_value(rk);
  p.bound_ = r / p.sigma_d_;
  p.law_ = detail::SubsampledLaw{Matrix::Identity(a.rows(), a.rows()), pseudoinverse(rk),
                                 matrix_power(a, *k), static_cast<int>(b.cols())};
  return p;
}

Policy synth_general(const LinearSystem& system, double r, double c1) {
  SpectralSplit split = spectral_split(system.A(), system.B());
  const int d = system.state_dim();
  if (split.d2() == 0) {
    Policy p = synth_zero(system.input_dim());
    p.r_ = r;
    p.k_ = 1;
    p.circle_projection_ = Matrix(0, d);
    p.split_ = std::move(split);
    return p;
  }
  require_authority(r, c1);
  const Matrix rk = reachability_matrix(split.A22, split.B2, split.k);

  Policy p;
  p.variant_ = PolicyVariant::kGeneralComposite;
  p.r_ = r;
  p.k_ = split.k;
  p.sigma_d_ = split.sigma_d;
  p.bound_ = r / split.sigma_d;
  p.circle_projection_ = split.circle_projection();
  p.law_ = detail::SubsampledLaw{split.circle_projection(), pseudoinverse(rk),
                                 matrix_power(split.A22, split.k), system.input_dim()};
  p.split_ = std::move(split);
  return p;
}

PolicyState Policy::initial_state() const { return PolicyState{}; }

namespace {

struct StepVisitor {
  const Policy& policy;
  PolicyState& state;
  const VectorRef& x;

  Vector operator()(const detail::ZeroLaw& law) const {
    return Vector::Zero(law.input_dim);
  }
  Vector operator()(const detail::RandomWalkLaw&) const {
    return -saturate(x, policy.radius());
  }
  Vector operator()(const detail::OrthogonalLaw& law) const {
    if (x.size() != law.gain.cols()) {
      fail(ErrorKind::kInvalidArgument, "state dimension mismatch");
    }
    return -law.gain * saturate(x, policy.radius());
  }
  Vector operator()(const detail::SubsampledLaw& law) const {
    const int k = policy.cycle_length();
    if (state.phase == 0) {
      if (x.size() != law.projection.cols()) {
        fail(ErrorKind::kInvalidArgument, "state dimension mismatch");
      }
      const Vector z = law.projection * x;
      const Vector block = -law.rk_pinv * (law.abar * saturate(z, policy.radius()));
      state.boundary_state = x;
      state.control_block.resize(k);
      // Block rows list u_{(tau+1)k-1} first.
      for (int i = 0; i < k; ++i) {
        state.control_block[i] = block.segment((k - 1 - i) * law.input_dim, law.input_dim);
      }
    }
    return state.control_block.at(state.phase);
  }
};

}  // namespace

Vector Policy::step(PolicyState& state, const VectorRef& x, long t) const {
  if (t < 0 || t % k_ != state.phase) {
    std::ostringstream os;
    os << "policy phase " << state.phase << " is inconsistent with t = " << t
       << " (cycle length " << k_ << ")";
    fail(ErrorKind::kContractViolation, os.str());
  }
  Vector u = std::visit(StepVisitor{*this, state, x}, law_);
  state.phase = (state.phase + 1) % k_;
  return u;
}

std::pair<Vector, PolicyState> policy_step(const Policy& p, const PolicyState& s,
                                           const VectorRef& x, long t) {
  PolicyState next = s;
  Vector u = p.step(next, x, t);
  return {std::move(u), std::move(next)};
}

double circle_noise_c1(const SpectralSplit& split, double c1) {
  if (split.d2() == 0) return 0.0;
  return spectral_norm(split.circle_projection()) * c1;
}

SynthesisReport make_report(const Policy& p, double c1_estimate, double c1_circle) {
  SynthesisReport rep;
  rep.variant = p.variant();
  rep.r = p.radius();
  rep.sigma_d = p.sigma_d();
  rep.R = p.control_bound();
  rep.k = p.variant() == PolicyVariant::kZero ? 0 : p.cycle_length();
  rep.c1_estimate = c1_estimate;
  rep.c1_circle = c1_circle;
  rep.margin = c1_circle > 0.0 ? p.radius() / c1_circle
                               : std::numeric_limits<double>::infinity();
  if (p.split()) {
    rep.cond_T = p.split()->cond_T;
    rep.warnings = p.split()->warnings;
  }
  return rep;
}

}  // namespace msbound
