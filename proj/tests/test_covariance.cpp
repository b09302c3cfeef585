// SPDX-License-Identifier: Apache-2.0
#include "nkai/covariance.hpp"
#include "nkai/signal.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace nkai;

namespace {

SourceScenario two_source_scenario() { return SourceScenario::equal_power({15.0, 17.0}, 3.33); }

// Virtual ULA manifold written straight from the exponential, independent of
// steering_vector().
CMatrix g1_oracle(int length, double d1, const std::vector<double>& doas) {
  CMatrix g(length, static_cast<Eigen::Index>(doas.size()));
  for (int n = 0; n < length; ++n) {
    for (std::size_t p = 0; p < doas.size(); ++p) {
      const double phase = -2.0 * std::numbers::pi * d1 * n * std::sin(doas[p] * std::numbers::pi / 180.0);
      g(n, static_cast<Eigen::Index>(p)) = Complex(std::cos(phase), std::sin(phase));
    }
  }
  return g;
}

// (G1 Rs G1^H + sigma^2 I), the covariance of the filled virtual ULA.
CMatrix virtual_ula_covariance(int length, const SourceScenario& s) {
  const CMatrix g = g1_oracle(length, 0.5, s.doas_deg);
  CMatrix rs = CMatrix::Zero(g.cols(), g.cols());
  for (Eigen::Index p = 0; p < g.cols(); ++p) rs(p, p) = s.powers[static_cast<std::size_t>(p)];
  CMatrix r = g * rs * g.adjoint();
  r.diagonal().array() += s.noise_power;
  return r;
}

double projector_gap(const CMatrix& a, const CMatrix& b) {
  return (a * a.adjoint() - b * b.adjoint()).norm();
}

}  // namespace

TEST(HermitianCovariance, SymmetrizesInput) {
  CMatrix m(2, 2);
  m << Complex(1, 0), Complex(2, 1), Complex(2, -1.2), Complex(3, 0.1);
  const HermitianCovariance r(m);
  EXPECT_LT((r.matrix() - r.matrix().adjoint()).norm(), 1e-15);
  EXPECT_NEAR(r.matrix()(0, 1).imag(), 1.1, 1e-15);
  EXPECT_THROW(HermitianCovariance(CMatrix::Zero(2, 3)), InvalidArgument);
}

TEST(SampleCovariance, SingleSnapshotIsOuterProduct) {
  CVector y(3);
  y << Complex(1, 2), Complex(-0.5, 0), Complex(0, 3);
  const HermitianCovariance r = sample_covariance(y);
  EXPECT_LT((r.matrix() - y * y.adjoint()).norm(), 1e-14);
}

TEST(SampleCovariance, TraceIsMeanSquaredNorm) {
  // Orthogonal columns scaled by sqrt(M).
  const int m = 4;
  CMatrix y = CMatrix::Identity(m, m) * std::sqrt(static_cast<double>(m));
  y(0, 1) = 0.0;
  const HermitianCovariance r = sample_covariance(y);
  const double mean_sq = y.colwise().squaredNorm().mean();
  EXPECT_NEAR(r.matrix().trace().real(), mean_sq, 1e-12);
  EXPECT_LT((r.matrix() - CMatrix::Identity(m, m)).norm(), 1e-12);
}

TEST(SampleCovariance, MatchesNaiveAccumulation) {
  const auto y = synthesize(ArrayGeometry::nested(4, 4), two_source_scenario(), 150, 99);
  CMatrix naive = CMatrix::Zero(8, 8);
  for (Eigen::Index i = 0; i < y.snapshots(); ++i) {
    for (int a = 0; a < 8; ++a) {
      for (int b = 0; b < 8; ++b) naive(a, b) += y.data(a, i) * std::conj(y.data(b, i));
    }
  }
  naive /= static_cast<double>(y.snapshots());
  const CMatrix r = sample_covariance(y.data).matrix();
  EXPECT_LT((r - naive).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(sample_covariance(CMatrix(3, 0)), InvalidArgument);
}

TEST(VectorizeToCoarray, PureNoiseGivesCenterSpike) {
  const auto geom = ArrayGeometry::nested(3, 3);
  const HermitianCovariance r(2.5 * CMatrix::Identity(6, 6));
  for (auto policy : {DuplicatePolicy::SelectFirst, DuplicatePolicy::Average}) {
    const CoarrayVector z = vectorize_to_coarray(r, geom, policy);
    ASSERT_EQ(z.values.size(), 23);
    EXPECT_EQ(z.half_length(), 12);
    for (Eigen::Index i = 0; i < z.values.size(); ++i) {
      const double expected = z.lag_of(i) == 0 ? 2.5 : 0.0;
      EXPECT_NEAR(std::abs(z.values(i) - expected), 0.0, 1e-15);
    }
  }
}

TEST(VectorizeToCoarray, BroadsideSourceGivesFlatLags) {
  const auto geom = ArrayGeometry::nested(4, 4);
  SourceScenario s;
  s.doas_deg = {0.0};
  s.powers = {1.7};
  s.noise_power = 0.4;
  const CoarrayVector z = vectorize_to_coarray(analytic_covariance(geom, s), geom);
  ASSERT_EQ(z.values.size(), 39);
  for (Eigen::Index i = 0; i < z.values.size(); ++i) {
    const double expected = 1.7 + (z.lag_of(i) == 0 ? 0.4 : 0.0);
    EXPECT_NEAR(std::abs(z.values(i) - expected), 0.0, 1e-13);
  }
}

TEST(VectorizeToCoarray, PoliciesAgreeOnAnalyticCovariance) {
  const auto geom = ArrayGeometry::nested(4, 4);
  const auto r = analytic_covariance(geom, two_source_scenario());
  const CoarrayVector first = vectorize_to_coarray(r, geom, DuplicatePolicy::SelectFirst);
  const CoarrayVector avg = vectorize_to_coarray(r, geom, DuplicatePolicy::Average);
  EXPECT_LT((first.values - avg.values).cwiseAbs().maxCoeff(), 1e-12);
  // z equals G p + sigma^2 e on the lags -19..19.
  for (Eigen::Index i = 0; i < first.values.size(); ++i) {
    const int lag = first.lag_of(i);
    Complex expected = lag == 0 ? Complex(1.0) : Complex(0.0);
    for (std::size_t p = 0; p < 2; ++p) {
      const double phase = -std::numbers::pi * lag * std::sin(two_source_scenario().doas_deg[p] * std::numbers::pi / 180.0);
      expected += two_source_scenario().powers[p] * Complex(std::cos(phase), std::sin(phase));
    }
    EXPECT_NEAR(std::abs(first.values(i) - expected), 0.0, 1e-12);
  }
}

TEST(VectorizeToCoarray, SelectFirstTakesFirstColumnMajorEntry) {
  const auto geom = ArrayGeometry::nested(2, 2);  // positions {0,1,2,5}
  CMatrix m = CMatrix::Zero(4, 4);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) m(a, b) = Complex(10 * a + b, a - b);
  }
  const HermitianCovariance r(m);
  const CoarrayVector z = vectorize_to_coarray(r, geom, DuplicatePolicy::SelectFirst);
  // Lag 1 first appears at (a=1, b=0) in column-major order.
  EXPECT_EQ(z.at_lag(1), r.matrix()(1, 0));
  EXPECT_EQ(z.at_lag(-1), std::conj(r.matrix()(1, 0)));
  // Lag 3 first appears at (a=3, b=2): 5 - 2.
  EXPECT_EQ(z.at_lag(3), r.matrix()(3, 2));
  const CoarrayVector avg = vectorize_to_coarray(r, geom, DuplicatePolicy::Average);
  // Lag 1 pairs: (1,0), (2,1).
  EXPECT_NEAR(std::abs(avg.at_lag(1) - (r.matrix()(1, 0) + r.matrix()(2, 1)) / 2.0), 0.0, 1e-14);
}

TEST(VectorizeToCoarray, ConjugateSymmetricOnFiniteSamples) {
  const auto geom = ArrayGeometry::nested(4, 4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = sample_covariance(synthesize(geom, two_source_scenario(), 30, seed).data);
    for (auto policy : {DuplicatePolicy::SelectFirst, DuplicatePolicy::Average}) {
      const CoarrayVector z = vectorize_to_coarray(r, geom, policy);
      for (int lag = 0; lag < z.half_length(); ++lag) {
        EXPECT_NEAR(std::abs(z.at_lag(lag) - std::conj(z.at_lag(-lag))), 0.0, 1e-13);
      }
    }
  }
}

TEST(VectorizeToCoarray, RejectsHolesAndSizeMismatch) {
  const auto holes = ArrayGeometry::sparse({0, 1, 4});
  EXPECT_THROW(vectorize_to_coarray(HermitianCovariance(CMatrix::Identity(3, 3)), holes),
               UnsupportedGeometry);
  EXPECT_THROW(vectorize_to_coarray(HermitianCovariance(CMatrix::Identity(3, 3)), ArrayGeometry::nested(2, 2)),
               InvalidArgument);
}

TEST(SpatialSmoothing, NoiseOnlyIsScaledIdentity) {
  const int mbar = 20;
  const double sigma2 = 1.3;
  CoarrayVector z;
  z.values = CVector::Zero(2 * mbar - 1);
  z.values(mbar - 1) = sigma2;
  const CMatrix r = spatial_smoothing(z).matrix();
  EXPECT_LT((r - (sigma2 * sigma2 / mbar) * CMatrix::Identity(mbar, mbar)).norm(), 1e-15);
}

TEST(SpatialSmoothing, EqualsScaledSquareOfVirtualUlaCovariance) {
  const auto geom = ArrayGeometry::nested(4, 4);
  const auto s = two_source_scenario();
  const CMatrix smoothed = spatial_smoothing(vectorize_to_coarray(analytic_covariance(geom, s), geom)).matrix();
  const CMatrix rv = virtual_ula_covariance(20, s);
  const CMatrix expected = rv * rv / 20.0;
  EXPECT_LT((smoothed - expected).norm() / expected.norm(), 1e-8);
}

TEST(SpatialSmoothing, WindowsAreSlidingSegments) {
  // z = lags -2..2 with distinct entries; window i spans rows (3-i+1)..(5-i+1).
  CoarrayVector z;
  z.values.resize(5);
  z.values << Complex(1, 1), Complex(2, 0), Complex(3, 0), Complex(4, 0), Complex(5, -1);
  CMatrix expected = CMatrix::Zero(3, 3);
  for (int i = 1; i <= 3; ++i) {
    const CVector w = z.values.segment(3 - i, 3);
    expected += w * w.adjoint();
  }
  expected /= 3.0;
  EXPECT_LT((spatial_smoothing(z).matrix() - expected).norm(), 1e-14);
}

TEST(SpatialSmoothing, RejectsEvenOrTinyVectors) {
  CoarrayVector z;
  z.values = CVector::Ones(4);
  EXPECT_THROW(spatial_smoothing(z), InvalidArgument);
  z.values = CVector::Ones(1);
  EXPECT_THROW(spatial_smoothing(z), InvalidArgument);
}

TEST(SpatialSmoothing, FiniteSampleOutputIsHermitianPsd) {
  const auto geom = ArrayGeometry::nested(4, 4);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto y = synthesize(geom, SourceScenario::equal_power({15.0, 17.0}, -5.0 + seed % 10), 20 + seed, seed);
    for (auto policy : {DuplicatePolicy::SelectFirst, DuplicatePolicy::Average}) {
      const auto r = spatial_smoothing(vectorize_to_coarray(sample_covariance(y.data), geom, policy));
      EXPECT_LT((r.matrix() - r.matrix().adjoint()).norm(), 1e-12);
      EXPECT_TRUE(is_psd(r));
    }
  }
}

TEST(EquivalentUlaCovariance, ScaledIdentity) {
  const int mbar = 9;
  const double sigma2 = 2.0;
  const HermitianCovariance smoothed((sigma2 * sigma2 / mbar) * CMatrix::Identity(mbar, mbar));
  const CMatrix root = equivalent_ula_covariance(smoothed).matrix();
  EXPECT_LT((root - (sigma2 / std::sqrt(mbar)) * CMatrix::Identity(mbar, mbar)).norm(), 1e-14);
}

TEST(EquivalentUlaCovariance, RecoversVirtualUlaCovariance) {
  const auto geom = ArrayGeometry::nested(4, 4);
  const auto s = two_source_scenario();
  const auto smoothed = spatial_smoothing(vectorize_to_coarray(analytic_covariance(geom, s), geom));
  const CMatrix root = equivalent_ula_covariance(smoothed).matrix();
  const CMatrix expected = virtual_ula_covariance(20, s) / std::sqrt(20.0);
  EXPECT_LT((root - expected).norm() / expected.norm(), 1e-8);
  EXPECT_LT((root * root - smoothed.matrix()).norm() / smoothed.matrix().norm(), 1e-12);
}

TEST(EquivalentUlaCovariance, SharesEigenvectorsAndSquaresEigenvalues) {
  const auto geom = ArrayGeometry::nested(4, 4);
  const auto smoothed = spatial_smoothing(vectorize_to_coarray(
      sample_covariance(synthesize(geom, two_source_scenario(), 150, 5).data), geom));
  const auto root = equivalent_ula_covariance(smoothed);
  Eigen::SelfAdjointEigenSolver<CMatrix> es_s(smoothed.matrix());
  Eigen::SelfAdjointEigenSolver<CMatrix> es_r(root.matrix());
  EXPECT_LT((es_r.eigenvalues().array().square() - es_s.eigenvalues().array()).abs().maxCoeff(),
            1e-8 * es_s.eigenvalues().maxCoeff());
  // Noise subspaces (18 minor eigenvectors) coincide.
  EXPECT_LT(projector_gap(es_s.eigenvectors().leftCols(18), es_r.eigenvectors().leftCols(18)), 1e-8);
}

TEST(EquivalentUlaCovariance, NoiseSubspaceMatchesOnAnalyticInput) {
  const auto geom = ArrayGeometry::nested(4, 4);
  const auto smoothed = spatial_smoothing(vectorize_to_coarray(analytic_covariance(geom, two_source_scenario()), geom));
  const auto root = equivalent_ula_covariance(smoothed);
  Eigen::SelfAdjointEigenSolver<CMatrix> es_s(smoothed.matrix());
  Eigen::SelfAdjointEigenSolver<CMatrix> es_r(root.matrix());
  EXPECT_LT(projector_gap(es_s.eigenvectors().leftCols(18), es_r.eigenvectors().leftCols(18)), 1e-8);
}

TEST(EquivalentUlaCovariance, RejectsIndefiniteInput) {
  CMatrix m = CMatrix::Identity(3, 3);
  m(2, 2) = -0.5;
  EXPECT_THROW(equivalent_ula_covariance(HermitianCovariance(m)), NotPsd);
  // Tiny negative rounding is clamped.
  m(2, 2) = -1e-14;
  EXPECT_NO_THROW(equivalent_ula_covariance(HermitianCovariance(m)));
}

TEST(DuplicatePolicy, NamesRoundTrip) {
  EXPECT_EQ(duplicate_policy_from_string(to_string(DuplicatePolicy::Average)), DuplicatePolicy::Average);
  EXPECT_EQ(duplicate_policy_from_string("select-first"), DuplicatePolicy::SelectFirst);
  EXPECT_THROW(duplicate_policy_from_string("median"), InvalidArgument);
}
