#include "msbound/noise.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace msbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix psd_factor(const MatrixRef& q) {
  if (q.rows() != q.cols() || q.rows() == 0) {
    fail(ErrorKind::kInvalidArgument, "covariance must be square and nonempty");
  }
  require_finite(q, "covariance");
  if ((q - q.transpose()).norm() > 1e-12 * (1.0 + q.norm())) {
    fail(ErrorKind::kInvalidArgument, "covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(q);
  const Eigen::VectorXd& ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff())) {
    fail(ErrorKind::kInvalidArgument, "covariance must be positive semidefinite");
  }
  return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

void require_dim(int dim) {
  if (dim < 1) fail(ErrorKind::kInvalidArgument, "noise dimension must be >= 1");
}

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    fail(ErrorKind::kInvalidArgument, std::string(what) + " must be positive and finite");
  }
}

// Marsaglia-Tsang; shape < 1 uses Gamma(a) = Gamma(a + 1) U^{1/a}.
double gamma_variate(DrawCursor& cur, double shape) {
  if (shape < 1.0) {
    const double g = gamma_variate(cur, shape + 1.0);
    return g * std::pow(cur.uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = cur.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = cur.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

Vector normal_vector(DrawCursor& cur, int dim) {
  Vector z(dim);
  for (int i = 0; i < dim; ++i) z(i) = cur.normal();
  return z;
}

double gaussian_c4(const Matrix& q) {
  const double tr = q.trace();
  return tr * tr + 2.0 * (q * q).trace();
}

}  // namespace

const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::kZero: return "zero";
    case NoiseKind::kGaussianIID: return "gaussian";
    case NoiseKind::kGaussianScheduled: return "gaussian_scheduled";
    case NoiseKind::kUniformBall: return "uniform_ball";
    case NoiseKind::kLaplace: return "laplace";
    case NoiseKind::kStudentT: return "student_t";
    case NoiseKind::kCauchy: return "cauchy";
  }
  return "unknown";
}

std::optional<NoiseKind> parse_noise_kind(const std::string& s) {
  for (auto k : {NoiseKind::kZero, NoiseKind::kGaussianIID, NoiseKind::kGaussianScheduled,
                 NoiseKind::kUniformBall, NoiseKind::kLaplace, NoiseKind::kStudentT,
                 NoiseKind::kCauchy}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

NoiseModel NoiseModel::zero(int dim) {
  require_dim(dim);
  return NoiseModel(NoiseKind::kZero, dim);
}

NoiseModel NoiseModel::gaussian(const MatrixRef& covariance) {
  NoiseModel m(NoiseKind::kGaussianIID, static_cast<int>(covariance.rows()));
  m.factors_.push_back(psd_factor(covariance));
  m.covariances_.push_back(covariance);
  return m;
}

NoiseModel NoiseModel::gaussian_scheduled(std::vector<Matrix> schedule) {
  if (schedule.empty()) fail(ErrorKind::kInvalidArgument, "empty covariance schedule");
  NoiseModel m(NoiseKind::kGaussianScheduled, static_cast<int>(schedule.front().rows()));
  for (const auto& q : schedule) {
    if (q.rows() != m.dim_) {
      fail(ErrorKind::kInvalidArgument, "covariance schedule has inconsistent dimensions");
    }
    m.factors_.push_back(psd_factor(q));
  }
  m.covariances_ = std::move(schedule);
  return m;
}

NoiseModel NoiseModel::uniform_ball(int dim, double radius) {
  require_dim(dim);
  require_positive(radius, "ball radius");
  NoiseModel m(NoiseKind::kUniformBall, dim);
  m.scale_ = radius;
  return m;
}

NoiseModel NoiseModel::laplace(int dim, double scale) {
  require_dim(dim);
  require_positive(scale, "Laplace scale");
  NoiseModel m(NoiseKind::kLaplace, dim);
  m.scale_ = scale;
  return m;
}

NoiseModel NoiseModel::student_t(int dim, double nu, double scale) {
  require_dim(dim);
  require_positive(nu, "degrees of freedom");
  require_positive(scale, "Student-t scale");
  NoiseModel m(NoiseKind::kStudentT, dim);
  m.nu_ = nu;
  m.scale_ = scale;
  return m;
}

NoiseModel NoiseModel::cauchy(int dim, double scale) {
  require_dim(dim);
  require_positive(scale, "Cauchy scale");
  NoiseModel m(NoiseKind::kCauchy, dim);
  m.nu_ = 1.0;
  m.scale_ = scale;
  return m;
}

std::optional<Matrix> NoiseModel::covariance_at(std::uint64_t t) const {
  const Matrix eye = Matrix::Identity(dim_, dim_);
  switch (kind_) {
    case NoiseKind::kZero: return Matrix::Zero(dim_, dim_);
    case NoiseKind::kGaussianIID: return covariances_.front();
    case NoiseKind::kGaussianScheduled: return covariances_[t % covariances_.size()];
    case NoiseKind::kUniformBall: return eye * (scale_ * scale_ / (dim_ + 2.0));
    case NoiseKind::kLaplace: return eye * (2.0 * scale_ * scale_);
    case NoiseKind::kStudentT:
      if (nu_ > 2.0) return eye * (scale_ * scale_ * nu_ / (nu_ - 2.0));
      return std::nullopt;
    case NoiseKind::kCauchy: return std::nullopt;
  }
  return std::nullopt;
}

bool NoiseModel::moment_violating() const { return moment_bounds(*this).violating; }

Vector NoiseModel::sample(const RngStream& stream, std::uint64_t t) const {
  if (kind_ == NoiseKind::kZero) return Vector::Zero(dim_);
  DrawCursor cur = stream.at(t);
  switch (kind_) {
    case NoiseKind::kZero: break;
    case NoiseKind::kGaussianIID: return factors_.front() * normal_vector(cur, dim_);
    case NoiseKind::kGaussianScheduled:
      return factors_[t % factors_.size()] * normal_vector(cur, dim_);
    case NoiseKind::kUniformBall: {
      Vector z = normal_vector(cur, dim_);
      const double n = z.norm();
      const double radius = scale_ * std::pow(cur.uniform(), 1.0 / dim_);
      return z * (radius / n);
    }
    case NoiseKind::kLaplace: {
      Vector w(dim_);
      for (int i = 0; i < dim_; ++i) {
        const double u = cur.uniform() - 0.5;
        w(i) = -scale_ * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
      }
      return w;
    }
    case NoiseKind::kStudentT: {
      Vector z = normal_vector(cur, dim_);
      const double g = 2.0 * gamma_variate(cur, 0.5 * nu_);
      return z * (scale_ * std::sqrt(nu_ / g));
    }
    case NoiseKind::kCauchy: {
      Vector z = normal_vector(cur, dim_);
      return z * (scale_ / std::abs(cur.normal()));
    }
  }
  return Vector::Zero(dim_);
}

MomentBounds moment_bounds(const NoiseModel& model) {
  MomentBounds b;
  const int d = model.dim();
  switch (model.kind()) {
    case NoiseKind::kZero:
      break;
    case NoiseKind::kGaussianIID:
    case NoiseKind::kGaussianScheduled:
      // c1 is the Jensen bound sqrt(trace Q), c4 the Gaussian fourth moment.
      for (const auto& q : model.covariances()) {
        b.c1 = std::max(b.c1, std::sqrt(q.trace()));
        b.c4 = std::max(b.c4, gaussian_c4(q));
      }
      b.exact = false;
      break;
    case NoiseKind::kUniformBall: {
      const double rho = model.scale();
      b.c1 = rho * d / (d + 1.0);
      b.c4 = std::pow(rho, 4) * d / (d + 4.0);
      break;
    }
    case NoiseKind::kLaplace: {
      const double s = model.scale();
      b.c1 = std::sqrt(2.0 * d) * s;  // Jensen on E||w||^2 = 2 d s^2
      b.exact = false;
      b.c4 = std::pow(s, 4) * (24.0 * d + 4.0 * d * (d - 1.0));
      break;
    }
    case NoiseKind::kStudentT: {
      const double nu = model.nu();
      const double s = model.scale();
      if (nu > 1.0) {
        b.c1 = s * std::sqrt(nu) *
               std::exp(std::lgamma(0.5 * (d + 1)) + std::lgamma(0.5 * (nu - 1.0)) -
                        std::lgamma(0.5 * d) - std::lgamma(0.5 * nu));
      } else {
        b.c1 = kInf;
      }
      b.c4 = nu > 4.0 ? std::pow(s, 4) * d * (d + 2.0) * nu * nu / ((nu - 2.0) * (nu - 4.0))
                      : kInf;
      break;
    }
    case NoiseKind::kCauchy:
      b.c1 = kInf;
      b.c4 = kInf;
      break;
  }
  b.violating = !std::isfinite(b.c4);
  return b;
}

C1Estimate estimate_c1(const NoiseModel& model, std::uint64_t n, const RngStream& stream) {
  if (n < 1000) fail(ErrorKind::kInvalidArgument, "estimate_c1 needs at least 1000 samples");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::uint64_t t = 0; t < n; ++t) {
    const double v = model.sample(stream, t).norm();
    sum += v;
    sum_sq += v * v;
  }
  C1Estimate est;
  est.samples = n;
  est.mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, (sum_sq - sum * est.mean) / static_cast<double>(n - 1));
  est.std_error = std::sqrt(var / static_cast<double>(n));
  est.divergence_warning = model.moment_violating();
  return est;
}

}  // namespace msbound
