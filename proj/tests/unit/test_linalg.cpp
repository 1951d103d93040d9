#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "msbound/linalg.hpp"
#include "test_util.hpp"

using namespace msbound;

namespace {

// Computed independently before the build (2x2 Gram matrix eigenvalues).
constexpr double kSigmaExample = 0.550720701129742;

Matrix example_a() {
  Matrix a = Matrix::Zero(4, 4);
  a.topLeftCorner(2, 2) = rotation(0.8);
  a(2, 2) = 0.5;
  a(3, 3) = 0.9;
  return a;
}

Matrix e1(int d) {
  Matrix b = Matrix::Zero(d, 1);
  b(0, 0) = 1.0;
  return b;
}

}  // namespace

TEST(Saturate, Examples) {
  EXPECT_TRUE(saturate(vec({1, 1}), 2).isApprox(vec({1, 1})));
  EXPECT_TRUE(saturate(vec({3, 4}), 1).isApprox(vec({0.6, 0.8}), 1e-15));
  EXPECT_EQ(saturate(vec({0, 0, 0}), 5), vec({0, 0, 0}));
}

TEST(Saturate, BallIdempotenceAndFixedPoints) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 3.0);
  std::uniform_real_distribution<double> rr(0.1, 5.0);
  for (int i = 0; i < 2000; ++i) {
    Vector v(1 + i % 5);
    for (int j = 0; j < v.size(); ++j) v(j) = n(rng);
    const double r = rr(rng);
    const Vector s = saturate(v, r);
    EXPECT_LE(s.norm(), r * (1 + 1e-15));
    EXPECT_TRUE(saturate(s, r).isApprox(s, 1e-14));
    EXPECT_EQ(s == v, v.norm() <= r);
  }
}

TEST(Saturate, OrthogonalEquivariance) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    const int d = 1 + i % 6;
    Matrix g(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) g(a, b) = n(rng);
    const Matrix u = Eigen::HouseholderQR<Matrix>(g).householderQ();
    Vector v(d);
    for (int a = 0; a < d; ++a) v(a) = n(rng);
    EXPECT_LE((saturate(u * v, 1.5) - u * saturate(v, 1.5)).norm(), tol::kResidual);
  }
}

TEST(Saturate, RejectsBadRadius) {
  EXPECT_ERROR_KIND(saturate(vec({1}), 0.0), ErrorKind::kInvalidArgument);
  EXPECT_ERROR_KIND(saturate(vec({1}), -1.0), ErrorKind::kInvalidArgument);
}

TEST(MinSingularValue, Examples) {
  EXPECT_NEAR(min_singular_value(Matrix::Identity(2, 2)), 1.0, 1e-15);
  Matrix m(2, 2);
  m << 1, std::cos(0.8), 0, std::sin(0.8);
  EXPECT_NEAR(min_singular_value(m), kSigmaExample, 1e-12);
  Matrix z(2, 2);
  z << 1, 0, 2, 0;
  EXPECT_NEAR(min_singular_value(z), 0.0, 1e-15);
}

TEST(MinSingularValue, MatchesGramEigenvalue) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const int rows = 1 + i % 5;
    const int cols = rows + (i / 5) % 3;
    Matrix m(rows, cols);
    for (int a = 0; a < rows; ++a)
      for (int b = 0; b < cols; ++b) m(a, b) = n(rng);
    const Matrix gram = m * m.transpose();
    const double lam = Eigen::SelfAdjointEigenSolver<Matrix>(gram).eigenvalues()(0);
    EXPECT_NEAR(std::pow(min_singular_value(m), 2), lam, 1e-10 * (1 + gram.norm()));
  }
}

TEST(PinvApply, Examples) {
  EXPECT_TRUE(pinv_apply(Matrix::Identity(3, 3), vec({1, 2, 3})).isApprox(vec({1, 2, 3})));
  Matrix d(2, 2);
  d << 2, 0, 0, 4;
  EXPECT_TRUE(pinv_apply(d, vec({2, 4})).isApprox(vec({1, 1}), 1e-15));
  Matrix m(2, 2);
  m << 1, std::cos(0.8), 0, std::sin(0.8);
  const Vector u = pinv_apply(m, vec({0, 1}));
  EXPECT_LE((m * u - vec({0, 1})).norm(), tol::kResidual);
  // Direct 2x2 solve computed outside the library.
  EXPECT_NEAR(u(0), -0.97121, 1e-5);
  EXPECT_NEAR(u(1), 1.39401, 1e-5);
  EXPECT_LE(u.norm(), 1.0 / kSigmaExample);
}

TEST(PinvApply, AllocationBoundOnRandomInstances) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const int d = 1 + i % 6;
    const int m = 1 + (i / 6) % 3;
    const int k = (d + m - 1) / m + (i % 2);
    Matrix mat(d, k * m);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < k * m; ++b) mat(a, b) = n(rng);
    Vector v(d);
    for (int a = 0; a < d; ++a) v(a) = n(rng);
    v = saturate(v, 2.0);
    const Vector u = pinv_apply(mat, v);
    EXPECT_LE((mat * u - v).norm(), 1e-9 * (1 + v.norm()));
    const double bound = 2.0 / min_singular_value(mat);
    for (int b = 0; b < k; ++b) EXPECT_LE(u.segment(b * m, m).norm(), bound * (1 + 1e-12));
  }
}

TEST(Pseudoinverse, RankDeficientThrows) {
  Matrix z(2, 2);
  z << 1, 0, 2, 0;
  EXPECT_ERROR_KIND(pseudoinverse(z), ErrorKind::kRankDeficient);
  EXPECT_ERROR_KIND(pseudoinverse(Matrix::Ones(3, 2)), ErrorKind::kInvalidArgument);
}

TEST(Reachability, MatrixExamples) {
  EXPECT_EQ(reachability_matrix(Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1),
            Matrix::Identity(2, 2));
  Matrix expect(2, 2);
  expect << 1, std::cos(0.8), 0, std::sin(0.8);
  EXPECT_TRUE(reachability_matrix(rotation(0.8), e1(2), 2).isApprox(expect, 1e-15));
  Matrix shift(2, 2);
  shift << 0, 1, 0, 0;
  Matrix b(2, 1);
  b << 0, 1;
  Matrix shift_expect(2, 2);
  shift_expect << 0, 1, 1, 0;
  EXPECT_EQ(reachability_matrix(shift, b, 2), shift_expect);
}

TEST(Reachability, IndexExamples) {
  EXPECT_EQ(reachability_index(rotation(0.8), e1(2)), 2);
  EXPECT_EQ(reachability_index(Matrix::Identity(3, 3), Matrix::Identity(3, 3)), 1);
  EXPECT_EQ(reachability_index(rotation(0.8), Matrix::Zero(2, 1)), std::nullopt);
  EXPECT_EQ(reachability_index(Matrix(0, 0), Matrix(0, 1)), 0);
}

TEST(ClassifyStability, Examples) {
  EXPECT_EQ(classify_stability(Matrix::Constant(1, 1, 0.5)).tag, Stability::kSchurStable);
  const StabilityClass c = classify_stability(example_a());
  EXPECT_EQ(c.tag, Stability::kMarginallyStable);
  EXPECT_EQ(c.unit_circle_dim, 2);
  EXPECT_NEAR(c.spectral_radius, 1.0, 1e-12);
  Matrix jordan(2, 2);
  jordan << 1, 1, 0, 1;
  EXPECT_EQ(classify_stability(jordan).tag, Stability::kDefectiveOnCircle);
  EXPECT_EQ(classify_stability(Matrix::Constant(1, 1, 1.5)).tag, Stability::kUnstable);
  EXPECT_EQ(classify_stability(Matrix::Identity(3, 3)).tag, Stability::kMarginallyStable);
  EXPECT_EQ(classify_stability(-Matrix::Identity(2, 2)).unit_circle_dim, 2);
}

TEST(SpectralSplit, SchurStable) {
  const SpectralSplit s = spectral_split(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1));
  EXPECT_EQ(s.d2(), 0);
  EXPECT_EQ(s.k, 0);
  EXPECT_EQ(s.A22.size(), 0);
}

TEST(SpectralSplit, ExampleSystem) {
  const Matrix a = example_a();
  const SpectralSplit s = spectral_split(a, e1(4));
  EXPECT_EQ(s.d1(), 2);
  EXPECT_EQ(s.d2(), 2);
  EXPECT_EQ(s.k, 2);
  EXPECT_NEAR(s.sigma_d, kSigmaExample, 1e-12);
  EXPECT_TRUE(s.A22.isApprox(rotation(0.8), 1e-12));
  EXPECT_TRUE(s.B2.isApprox(e1(2), 1e-12));
  EXPECT_LE((s.T * s.block_diagonal() * s.T_inv - a).norm(), 1e-8 * (1 + a.norm()));
  EXPECT_LE((s.A22 * s.A22.transpose() - Matrix::Identity(2, 2)).norm(), 1e-8);
  EXPECT_LT(s.cond_T, 10.0);
}

TEST(SpectralSplit, AlreadyOrthogonal) {
  const SpectralSplit s = spectral_split(rotation(0.8), Matrix::Identity(2, 2));
  EXPECT_EQ(s.d1(), 0);
  EXPECT_EQ(s.k, 1);
  EXPECT_TRUE(s.A22.isApprox(rotation(0.8), 1e-12));
  EXPECT_LE((s.T * s.A22 * s.T_inv - rotation(0.8)).norm(), 1e-8);
  // T is the identity up to column scaling.
  EXPECT_NEAR(std::abs(s.T(0, 1)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(s.T(1, 0)), 0.0, 1e-12);
}

TEST(SpectralSplit, RandomSimilarityTransforms) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> ang(0.1, 3.0);
  std::uniform_real_distribution<double> stable(-0.95, 0.95);
  for (int i = 0; i < 100; ++i) {
    const int pairs = 1 + i % 2;
    const int reals = i % 3;
    const int d = 2 * pairs + reals;
    Matrix core = Matrix::Zero(d, d);
    for (int p = 0; p < pairs; ++p) core.block(2 * p, 2 * p, 2, 2) = rotation(ang(rng));
    for (int q = 0; q < reals; ++q) core(2 * pairs + q, 2 * pairs + q) = stable(rng);
    Matrix g(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) g(a, b) = n(rng) + (a == b ? 2.0 : 0.0);
    const Matrix a = g * core * g.inverse();
    Matrix b(d, 1);
    for (int r = 0; r < d; ++r) b(r, 0) = n(rng);
    const SpectralSplit s = spectral_split(a, b);
    EXPECT_EQ(s.d2(), 2 * pairs);
    EXPECT_LE((s.T * s.block_diagonal() * s.T_inv - a).norm(), 1e-8 * (1 + a.norm()));
    EXPECT_LE((s.A22 * s.A22.transpose() - Matrix::Identity(s.d2(), s.d2())).norm(), 1e-8);
    EXPECT_LE((s.T_inv * b - (Matrix(d, 1) << s.B1, s.B2).finished()).norm(), 1e-8 * (1 + b.norm()));
  }
}

TEST(SpectralSplit, Errors) {
  Matrix jordan(2, 2);
  jordan << 1, 1, 0, 1;
  EXPECT_ERROR_KIND(spectral_split(jordan, e1(2)), ErrorKind::kHypothesisViolation);
  EXPECT_ERROR_KIND(spectral_split(Matrix::Constant(1, 1, 2.0), e1(1)),
                    ErrorKind::kHypothesisViolation);
  // Circle block unreachable: input only drives the stable mode.
  Matrix b = Matrix::Zero(4, 1);
  b(2, 0) = 1.0;
  EXPECT_ERROR_KIND(spectral_split(example_a(), b), ErrorKind::kNotStabilizable);
}

TEST(LinearSystem, Validation) {
  EXPECT_ERROR_KIND(LinearSystem(Matrix::Ones(2, 3), Matrix::Ones(2, 1)),
                    ErrorKind::kInvalidArgument);
  EXPECT_ERROR_KIND(LinearSystem(Matrix::Ones(2, 2), Matrix::Ones(3, 1)),
                    ErrorKind::kInvalidArgument);
  Matrix nan = Matrix::Ones(2, 2);
  nan(0, 0) = std::nan("");
  EXPECT_ERROR_KIND(LinearSystem(nan, Matrix::Ones(2, 1)), ErrorKind::kInvalidArgument);
  const LinearSystem s(example_a(), e1(4));
  EXPECT_EQ(s.state_dim(), 4);
  EXPECT_EQ(s.input_dim(), 1);
  EXPECT_EQ(s.classify().tag, Stability::kMarginallyStable);
}
