#include "msbound/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

namespace msbound {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kRankDeficient: return "rank-deficient";
    case ErrorKind::kHypothesisViolation: return "hypothesis-violation";
    case ErrorKind::kNotStabilizable: return "not-stabilizable";
    case ErrorKind::kInsufficientAuthority: return "insufficient-authority";
    case ErrorKind::kNumericalFailure: return "numerical-failure";
    case ErrorKind::kContractViolation: return "contract-violation";
    case ErrorKind::kInvalidConfig: return "invalid-config";
    case ErrorKind::kIo: return "io-error";
  }
  return "unknown";
}

const char* to_string(Stability s) {
  switch (s) {
    case Stability::kSchurStable: return "SchurStable";
    case Stability::kMarginallyStable: return "MarginallyStable";
    case Stability::kUnstable: return "Unstable";
    case Stability::kDefectiveOnCircle: return "DefectiveOnCircle";
  }
  return "unknown";
}

void require_finite(const MatrixRef& m, const std::string& name) {
  if (!m.allFinite()) {
    fail(ErrorKind::kInvalidArgument, name + " has non-finite entries");
  }
}

Vector saturate(const VectorRef& v, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    fail(ErrorKind::kInvalidArgument, "saturation radius must be positive");
  }
  require_finite(v, "saturate input");
  const double n = v.norm();
  if (n <= r) return v;
  return (r / n) * v;
}

namespace {

Eigen::VectorXd singular_values(const MatrixRef& m) {
  if (m.size() == 0) {
    fail(ErrorKind::kInvalidArgument, "singular values of an empty matrix");
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

template <typename Derived>
int rank_from_singular_values(const Eigen::MatrixBase<Derived>& sv) {
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cutoff = tol::kRank * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++rank;
  }
  return rank;
}

int complex_rank(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return rank_from_singular_values(svd.singularValues());
}

// Orthonormal basis of the (numerical) null space; `dim` columns are taken
// from the trailing right singular vectors.
template <typename MatrixType>
MatrixType null_space(const MatrixType& m, int dim) {
  Eigen::JacobiSVD<MatrixType> svd(m, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(dim);
}

// Phase and scale normalization of a complex eigenvector: the largest
// component (lowest index on ties) becomes real positive and ||v||^2 = 2,
// so that a unitary-like pair (Re v, Im v) has unit columns.
Eigen::VectorXcd normalize_eigenvector(Eigen::VectorXcd v) {
  const double max_abs = v.cwiseAbs().maxCoeff();
  Eigen::Index pivot = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= max_abs * (1.0 - 1e-12)) {
      pivot = i;
      break;
    }
  }
  const std::complex<double> phase = std::conj(v(pivot)) / std::abs(v(pivot));
  v *= phase;
  v *= std::sqrt(2.0) / v.norm();
  return v;
}

}  // namespace

double min_singular_value(const MatrixRef& m) {
  const auto sv = singular_values(m);
  return sv(sv.size() - 1);
}

double spectral_norm(const MatrixRef& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

int numerical_rank(const MatrixRef& m) {
  if (m.size() == 0) return 0;
  return rank_from_singular_values(singular_values(m));
}

Matrix pseudoinverse(const MatrixRef& m) {
  require_finite(m, "pseudoinverse input");
  if (m.rows() == 0 || m.cols() < m.rows()) {
    fail(ErrorKind::kInvalidArgument,
         "pseudoinverse allocation needs a flat matrix (cols >= rows)");
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  if (!(s(s.size() - 1) > tol::kRank * s(0))) {
    std::ostringstream os;
    os << "matrix is rank deficient: sigma_min = " << s(s.size() - 1)
       << ", sigma_max = " << s(0);
    fail(ErrorKind::kRankDeficient, os.str());
  }
  return svd.matrixV() * s.cwiseInverse().asDiagonal() *
         svd.matrixU().transpose();
}

Vector pinv_apply(const MatrixRef& m, const VectorRef& v) {
  if (v.size() != m.rows()) {
    fail(ErrorKind::kInvalidArgument, "pinv_apply: vector length mismatch");
  }
  return pseudoinverse(m) * v;
}

Matrix reachability_matrix(const MatrixRef& a, const MatrixRef& b, int k) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) {
    fail(ErrorKind::kInvalidArgument, "reachability_matrix: dimension mismatch");
  }
  if (k < 1) {
    fail(ErrorKind::kInvalidArgument, "reachability_matrix: k must be >= 1");
  }
  const Eigen::Index m = b.cols();
  Matrix r(a.rows(), m * k);
  r.leftCols(m) = b;
  for (int i = 1; i < k; ++i) {
    r.middleCols(m * i, m) = a * r.middleCols(m * (i - 1), m);
  }
  return r;
}

std::optional<int> reachability_index(const MatrixRef& a, const MatrixRef& b) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) {
    fail(ErrorKind::kInvalidArgument, "reachability_index: dimension mismatch");
  }
  const int d = static_cast<int>(a.rows());
  if (d == 0) return 0;
  if (b.cols() == 0) return std::nullopt;
  for (int k = 1; k <= d; ++k) {
    if (numerical_rank(reachability_matrix(a, b, k)) == d) return k;
  }
  return std::nullopt;
}

StabilityClass classify_stability(const MatrixRef& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    fail(ErrorKind::kInvalidArgument, "classify_stability: A must be square and nonempty");
  }
  require_finite(a, "A");
  const int d = static_cast<int>(a.rows());

  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    fail(ErrorKind::kNumericalFailure, "eigenvalue solver did not converge");
  }

  StabilityClass out;
  const Eigen::VectorXcd& eig = es.eigenvalues();
  std::vector<std::complex<double>> circle;
  bool unstable = false;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    const double mod = std::abs(eig(i));
    out.eigenvalues.push_back(eig(i));
    out.spectral_radius = std::max(out.spectral_radius, mod);
    if (std::abs(mod - 1.0) <= tol::kUnitCircle) {
      circle.push_back(eig(i));
    } else if (mod > 1.0) {
      unstable = true;
    }
  }
  out.unit_circle_dim = static_cast<int>(circle.size());

  // Single-linkage clustering.
  std::vector<int> label(circle.size(), -1);
  int n_clusters = 0;
  for (std::size_t i = 0; i < circle.size(); ++i) {
    if (label[i] >= 0) continue;
    label[i] = n_clusters;
    std::vector<std::size_t> frontier{i};
    while (!frontier.empty()) {
      const std::size_t j = frontier.back();
      frontier.pop_back();
      for (std::size_t l = 0; l < circle.size(); ++l) {
        if (label[l] < 0 && std::abs(circle[l] - circle[j]) <= tol::kCluster) {
          label[l] = n_clusters;
          frontier.push_back(l);
        }
      }
    }
    ++n_clusters;
  }

  bool defective = false;
  for (int c = 0; c < n_clusters; ++c) {
    EigenCluster cluster;
    std::complex<double> sum = 0.0;
    for (std::size_t i = 0; i < circle.size(); ++i) {
      if (label[i] == c) {
        sum += circle[i];
        ++cluster.algebraic;
      }
    }
    std::complex<double> mu = sum / static_cast<double>(cluster.algebraic);
    if (std::abs(mu.imag()) <= tol::kCluster) mu = {mu.real() > 0 ? 1.0 : -1.0, 0.0};
    mu /= std::abs(mu);
    cluster.value = mu;
    const Eigen::MatrixXcd shifted =
        a.cast<std::complex<double>>() -
        mu * Eigen::MatrixXcd::Identity(d, d);
    cluster.geometric = d - complex_rank(shifted);
    if (cluster.geometric < cluster.algebraic) defective = true;
    out.circle_clusters.push_back(cluster);
  }

  if (unstable) {
    out.tag = Stability::kUnstable;
  } else if (defective) {
    out.tag = Stability::kDefectiveOnCircle;
  } else if (out.unit_circle_dim > 0) {
    out.tag = Stability::kMarginallyStable;
  } else {
    out.tag = Stability::kSchurStable;
  }
  return out;
}

Matrix SpectralSplit::block_diagonal() const {
  const int d = d1() + d2();
  Matrix out = Matrix::Zero(d, d);
  out.topLeftCorner(d1(), d1()) = A11;
  out.bottomRightCorner(d2(), d2()) = A22;
  return out;
}

SpectralSplit spectral_split(const MatrixRef& a, const MatrixRef& b) {
  if (b.rows() != a.rows()) {
    fail(ErrorKind::kInvalidArgument, "spectral_split: B must have as many rows as A");
  }
  require_finite(b, "B");
  const StabilityClass cls = classify_stability(a);
  if (cls.tag == Stability::kUnstable) {
    fail(ErrorKind::kHypothesisViolation,
         "A has an eigenvalue outside the closed unit disk");
  }
  if (cls.tag == Stability::kDefectiveOnCircle) {
    fail(ErrorKind::kHypothesisViolation,
         "A has a unit-modulus eigenvalue with a nontrivial Jordan block");
  }

  const int d = static_cast<int>(a.rows());
  const int d2 = cls.unit_circle_dim;
  const int d1 = d - d2;
  SpectralSplit split;

  if (d2 == 0) {
    split.T = Matrix::Identity(d, d);
    split.T_inv = Matrix::Identity(d, d);
    split.A11 = a;
    split.A22 = Matrix(0, 0);
    split.B1 = b;
    split.B2 = Matrix(0, b.cols());
    return split;
  }

  // Upper-half-plane (and real) clusters in increasing argument.
  std::vector<EigenCluster> clusters;
  for (const auto& c : cls.circle_clusters) {
    if (c.value.imag() >= 0.0) clusters.push_back(c);
  }
  std::sort(clusters.begin(), clusters.end(), [](const auto& x, const auto& y) {
    return std::arg(x.value) < std::arg(y.value);
  });

  using Complex = std::complex<double>;
  const Eigen::MatrixXcd ac = a.cast<Complex>();
  const Eigen::MatrixXcd act = a.transpose().cast<Complex>();
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(d, d);

  Matrix circle_basis(d, d2);
  Matrix left_basis(d, d2);
  Matrix a22 = Matrix::Zero(d2, d2);
  int col = 0;
  for (const auto& c : clusters) {
    const int g = c.geometric;
    const bool real = c.value.imag() == 0.0;
    const Eigen::MatrixXcd right = null_space<Eigen::MatrixXcd>(ac - c.value * eye, g);
    const Eigen::MatrixXcd left = null_space<Eigen::MatrixXcd>(act - c.value * eye, g);
    if (real) {
      // The eigenspace of a real eigenvalue has a real basis; take the
      // real null space directly to avoid phase ambiguity.
      const Matrix shifted = a - c.value.real() * Matrix::Identity(d, d);
      circle_basis.middleCols(col, g) = null_space<Matrix>(shifted, g);
      left_basis.middleCols(col, g) = null_space<Matrix>(shifted.transpose(), g);
      a22.block(col, col, g, g).diagonal().setConstant(c.value.real());
      col += g;
      continue;
    }
    const double phi = std::arg(c.value);
    for (int j = 0; j < g; ++j) {
      const Eigen::VectorXcd v = normalize_eigenvector(right.col(j));
      // A v = e^{i phi} v  =>  in the basis (Re v, -Im v) A acts as rotation(phi).
      circle_basis.col(col) = v.real();
      circle_basis.col(col + 1) = -v.imag();
      left_basis.col(col) = left.col(j).real();
      left_basis.col(col + 1) = left.col(j).imag();
      a22.block(col, col, 2, 2) = rotation(phi);
      col += 2;
    }
  }
  if (col != d2) {
    fail(ErrorKind::kNumericalFailure, "unit-circle eigenvalues do not pair up");
  }
  if (numerical_rank(left_basis) != d2) {
    fail(ErrorKind::kNumericalFailure, "left eigenvectors are numerically dependent");
  }

  Matrix t(d, d);
  if (d1 > 0) {
    // The stable invariant subspace is the annihilator of the left
    // eigenvectors attached to the unit-circle eigenvalues.
    t.leftCols(d1) = null_space<Matrix>(left_basis.transpose(), d1);
  }
  t.rightCols(d2) = circle_basis;

  Eigen::FullPivLU<Matrix> lu(t);
  if (!lu.isInvertible()) {
    fail(ErrorKind::kNumericalFailure, "change of basis is singular");
  }
  split.T = t;
  split.T_inv = lu.inverse();
  {
    Eigen::JacobiSVD<Matrix> svd(t);
    const auto& s = svd.singularValues();
    split.cond_T = s(0) / s(s.size() - 1);
  }
  if (split.cond_T > tol::kConditionWarning) {
    std::ostringstream os;
    os << "change of basis is ill-conditioned (cond(T) = " << split.cond_T << ")";
    split.warnings.push_back(os.str());
  }

  const Matrix transformed = split.T_inv * a * t;
  split.A11 = transformed.topLeftCorner(d1, d1);
  split.A22 = a22;
  const Matrix bt = split.T_inv * b;
  split.B1 = bt.topRows(d1);
  split.B2 = bt.bottomRows(d2);

  const double recon = (t * split.block_diagonal() * split.T_inv - a).norm();
  if (recon > tol::kReconstruction * (1.0 + a.norm())) {
    std::ostringstream os;
    os << "spectral split reconstruction error " << recon << " exceeds tolerance";
    fail(ErrorKind::kNumericalFailure, os.str());
  }
  if (d1 > 0) {
    Eigen::EigenSolver<Matrix> es(split.A11, false);
    if (es.eigenvalues().cwiseAbs().maxCoeff() >= 1.0) {
      fail(ErrorKind::kNumericalFailure, "stable block is not Schur stable");
    }
  }

  const auto k = reachability_index(split.A22, split.B2);
  if (!k) {
    fail(ErrorKind::kNotStabilizable,
         "the unit-circle subsystem (A22, B2) is not reachable");
  }
  split.k = *k;
  split.sigma_d = min_singular_value(reachability_matrix(split.A22, split.B2, split.k));
  return split;
}

LinearSystem::LinearSystem(Matrix a, Matrix b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() == 0 || a_.rows() != a_.cols()) {
    fail(ErrorKind::kInvalidArgument, "A must be square and nonempty");
  }
  if (b_.rows() != a_.rows() || b_.cols() == 0) {
    fail(ErrorKind::kInvalidArgument, "B must be d x m with m >= 1");
  }
  require_finite(a_, "A");
  require_finite(b_, "B");
}

Matrix rotation(double phi) {
  Matrix r(2, 2);
  r << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  return r;
}

}  // namespace msbound
