#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msbound/linalg.hpp"
#include "msbound/rng.hpp"

namespace msbound {

enum class NoiseKind {
  kZero,
  kGaussianIID,
  kGaussianScheduled,
  kUniformBall,
  kLaplace,
  kStudentT,
  kCauchy,
};

const char* to_string(NoiseKind k);
std::optional<NoiseKind> parse_noise_kind(const std::string& s);

/// Bounds on sup_t E||w_t|| and sup_t E||w_t||^4.
struct MomentBounds {
  double c1 = 0.0;
  double c4 = 0.0;        // +inf when the fourth moment does not exist
  bool exact = true;      // false when c1 is only an upper bound
  bool violating = false; // fourth moment infinite
};

/// Zero-mean, independent-in-time noise process. Immutable.
///
/// Kinds and parameters:
///   Zero                         no noise
///   GaussianIID(Q)               N(0, Q), Q symmetric PSD
///   GaussianScheduled(Q_0..Q_p)  N(0, Q_{t mod p})
///   UniformBall(rho)             uniform on the Euclidean ball of radius rho
///   Laplace(b)                   i.i.d. Laplace(0, b) components
///   StudentT(nu, s)              multivariate t: s * z * sqrt(nu / chi2_nu)
///   Cauchy(s)                    spherically symmetric Cauchy (t with nu = 1)
class NoiseModel {
 public:
  static NoiseModel zero(int dim);
  static NoiseModel gaussian(const MatrixRef& covariance);
  static NoiseModel gaussian_scheduled(std::vector<Matrix> schedule);
  static NoiseModel uniform_ball(int dim, double radius);
  static NoiseModel laplace(int dim, double scale);
  static NoiseModel student_t(int dim, double nu, double scale = 1.0);
  static NoiseModel cauchy(int dim, double scale = 1.0);

  NoiseKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double scale() const { return scale_; }
  double nu() const { return nu_; }
  const std::vector<Matrix>& covariances() const { return covariances_; }

  /// Covariance Q_t when it exists (nullopt for heavy tails with nu <= 2).
  std::optional<Matrix> covariance_at(std::uint64_t t) const;

  /// True when sup_t E||w_t||^4 is infinite, i.e. the noise violates the
  /// bounded fourth moment assumption.
  bool moment_violating() const;

  /// Draw w_t; a pure function of (stream seed, stream run, t).
  Vector sample(const RngStream& stream, std::uint64_t t) const;

 private:
  NoiseModel(NoiseKind kind, int dim) : kind_(kind), dim_(dim) {}

  NoiseKind kind_;
  int dim_;
  double scale_ = 0.0;
  double nu_ = 0.0;
  std::vector<Matrix> covariances_;
  std::vector<Matrix> factors_;  // Q_t = L L^T
};

MomentBounds moment_bounds(const NoiseModel& model);

struct C1Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  bool divergence_warning = false;
};

/// Empirical mean of ||w|| over draws t = 0..n-1 of `stream`. n >= 1000.
C1Estimate estimate_c1(const NoiseModel& model, std::uint64_t n, const RngStream& stream);

}  // namespace msbound
