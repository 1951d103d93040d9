#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "msbound/errors.hpp"

namespace msbound {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixRef = Eigen::Ref<const Eigen::MatrixXd>;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// Numerical thresholds shared by the whole library.
namespace tol {
inline constexpr double kUnitCircle = 1e-9;   // ||lambda| - 1| below this is "on the circle"
inline constexpr double kRank = 1e-10;        // relative to sigma_max
inline constexpr double kReconstruction = 1e-8;
inline constexpr double kOrthogonality = 1e-8;
inline constexpr double kResidual = 1e-10;
inline constexpr double kCluster = 1e-7;      // absolute complex distance
inline constexpr double kConditionWarning = 1e8;
}  // namespace tol

/// Throws kInvalidArgument unless every entry is finite.
void require_finite(const MatrixRef& m, const std::string& name);

/// Radial projection onto the closed Euclidean ball of radius r.
/// Unlike component-wise clipping this keeps the direction of v.
Vector saturate(const VectorRef& v, double r);

/// Smallest of the min(rows, cols) singular values.
double min_singular_value(const MatrixRef& m);

/// Numerical rank with the relative threshold tol::kRank.
int numerical_rank(const MatrixRef& m);

/// Moore-Penrose pseudoinverse of a full-row-rank d x n matrix (n >= d).
/// Throws kRankDeficient when sigma_min <= tol::kRank * sigma_max.
Matrix pseudoinverse(const MatrixRef& m);

/// u = M^+ v. For full row rank M this satisfies M u = v and
/// ||u|| <= ||v|| / sigma_min(M).
Vector pinv_apply(const MatrixRef& m, const VectorRef& v);

/// [B | AB | ... | A^{k-1} B], d x (k m).
Matrix reachability_matrix(const MatrixRef& a, const MatrixRef& b, int k);

/// Smallest k <= d with rank R_k = d, or nullopt when (A, B) is not
/// reachable. A 0 x 0 system is reachable in 0 steps.
std::optional<int> reachability_index(const MatrixRef& a, const MatrixRef& b);

enum class Stability {
  kSchurStable,
  kMarginallyStable,
  kUnstable,
  kDefectiveOnCircle,
};

const char* to_string(Stability s);

struct EigenCluster {
  std::complex<double> value;  // cluster mean
  int algebraic = 0;
  int geometric = 0;
};

struct StabilityClass {
  Stability tag = Stability::kSchurStable;
  int unit_circle_dim = 0;
  double spectral_radius = 0.0;
  std::vector<std::complex<double>> eigenvalues;
  /// Clusters of unit-modulus eigenvalues, one entry per cluster
  /// (conjugate clusters are listed separately).
  std::vector<EigenCluster> circle_clusters;
};

StabilityClass classify_stability(const MatrixRef& a);

/// Change of basis bringing (A, B) to (diag(A11, A22), [B1; B2]) with A11
/// Schur stable and A22 orthogonal (a direct sum of +-1 entries and 2x2
/// rotation blocks). Block order is (stable, circle).
struct SpectralSplit {
  Matrix T;
  Matrix T_inv;
  Matrix A11;
  Matrix A22;
  Matrix B1;
  Matrix B2;
  int k = 0;              // reachability index of (A22, B2); 0 when d2 = 0
  double sigma_d = 0.0;   // sigma_min(R_k(A22, B2)); 0 when d2 = 0
  double cond_T = 1.0;
  std::vector<std::string> warnings;

  int d1() const { return static_cast<int>(A11.rows()); }
  int d2() const { return static_cast<int>(A22.rows()); }
  /// Rows d1..d-1 of T_inv: maps original coordinates to the circle block.
  Matrix circle_projection() const { return T_inv.bottomRows(d2()); }
  Matrix stable_projection() const { return T_inv.topRows(d1()); }
  /// diag(A11, A22).
  Matrix block_diagonal() const;
};

/// Throws kHypothesisViolation for Unstable or DefectiveOnCircle A and
/// kNotStabilizable when (A22, B2) is not reachable.
SpectralSplit spectral_split(const MatrixRef& a, const MatrixRef& b);

/// Validated (A, B) pair.
class LinearSystem {
 public:
  LinearSystem(Matrix a, Matrix b);

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  int state_dim() const { return static_cast<int>(a_.rows()); }
  int input_dim() const { return static_cast<int>(b_.cols()); }

  StabilityClass classify() const { return classify_stability(a_); }

 private:
  Matrix a_;
  Matrix b_;
};

/// 2x2 counter-clockwise rotation by phi.
Matrix rotation(double phi);

double spectral_norm(const MatrixRef& m);

}  // namespace msbound
