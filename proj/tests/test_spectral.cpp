#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "test_support.hpp"

using namespace phaselin;
using phaselin::testing::phase_distance;

TEST(Spectral, IdentityPicksLargestMeasurement) {
  RealVec y(4);
  y << 0.5, 3.0, 1.0, 2.0;
  SpectralOptions opts;
  opts.scale_to_measurements = false;
  RandomStream rng(1);
  const Vec<Complex> v =
      spectral_initializer(MeasurementMatrix<Complex>(Mat<Complex>::Identity(4, 4)), y, opts, rng);
  Vec<Complex> e1 = Vec<Complex>::Zero(4);
  e1(1) = 1.0;
  EXPECT_LE((v - e1).norm(), 1e-6);
}

TEST(Spectral, NoiselessRecoveryDirection) {
  constexpr int kSeeds = 100;
  std::vector<double> cosines;
  for (int s = 0; s < kSeeds; ++s) {
    RandomStream rng(static_cast<std::uint64_t>(s));
    const auto a = make_gaussian_matrix<Complex>(64, 4, rng);
    const Vec<Complex> x = rng.standard_vector<Complex>(4);
    const RealVec y = intensities<Complex>(a.matrix(), x);
    const Vec<Complex> v = spectral_initializer(a, y, SpectralOptions{}, rng);
    cosines.push_back(std::abs(v.dot(x)) / (v.norm() * x.norm()));
  }
  std::nth_element(cosines.begin(), cosines.begin() + kSeeds / 2, cosines.end());
  const double median = cosines[kSeeds / 2];
  ::testing::Test::RecordProperty("median_cosine", std::to_string(median));
  EXPECT_GE(median, 0.9);
}

TEST(Spectral, ZeroMeasurementsAreDegenerate) {
  RandomStream rng(2);
  const auto a = make_gaussian_matrix<double>(8, 3, rng);
  try {
    (void)spectral_initializer(a, RealVec::Zero(8), SpectralOptions{}, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateInitializer);
  }
}

TEST(Spectral, InvariantToMeasurementOrder) {
  RandomStream rng(3);
  const auto a = make_gaussian_matrix<Complex>(40, 5, rng);
  const RealVec y = intensities<Complex>(a.matrix(), rng.standard_vector<Complex>(5));
  std::vector<int> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.begin() + 25);
  Mat<Complex> ap(40, 5);
  RealVec yp(40);
  for (int i = 0; i < 40; ++i) {
    ap.row(i) = a.matrix().row(perm[i]);
    yp(i) = y(perm[i]);
  }
  RandomStream r1(9), r2(9);
  const Vec<Complex> v1 = spectral_initializer(a, y, SpectralOptions{}, r1);
  const Vec<Complex> v2 = spectral_initializer(MeasurementMatrix<Complex>(ap), yp, SpectralOptions{}, r2);
  EXPECT_LE(phase_distance<Complex>(v1, v2), 1e-8 * v1.norm());
}

TEST(Spectral, DirectionIgnoresMeasurementScale) {
  RandomStream rng(4);
  const auto a = make_gaussian_matrix<double>(30, 4, rng);
  const RealVec y = intensities<double>(a.matrix(), rng.standard_vector<double>(4));
  SpectralOptions opts;
  opts.scale_to_measurements = false;
  RandomStream r1(5), r2(5);
  const RealVec v1 = spectral_initializer(a, y, opts, r1);
  const RealVec v2 = spectral_initializer(a, RealVec(7.5 * y), opts, r2);
  EXPECT_LE((v1 - v2).norm(), 1e-8);
}

TEST(Spectral, EnergyMatchesMeasurements) {
  RandomStream rng(6);
  const auto a = make_gaussian_matrix<Complex>(50, 5, rng);
  const RealVec y = intensities<Complex>(a.matrix(), rng.standard_vector<Complex>(5));
  const Vec<Complex> v = spectral_initializer(a, y, SpectralOptions{}, rng);
  EXPECT_NEAR((a.matrix() * v).squaredNorm(), y.sum(), 1e-9 * y.sum());
}

TEST(Spectral, NegativeWeightsStillGiveTopEigenvector) {
  RandomStream rng(7);
  const auto a = make_gaussian_matrix<double>(60, 3, rng);
  const RealVec y = intensities<double>(a.matrix(), rng.standard_vector<double>(3));
  const double mean = y.mean();
  SpectralOptions opts;
  opts.preprocessing = [mean](double v) { return v - mean; };
  opts.scale_to_measurements = false;
  const RealVec v = spectral_initializer(a, y, opts, rng);

  const RealVec w = (y.array() - mean).matrix();
  const RealMat d = a.matrix().transpose() * w.asDiagonal() * a.matrix() / 60.0;
  Eigen::SelfAdjointEigenSolver<RealMat> eig(d);
  const RealVec top = eig.eigenvectors().col(2);
  EXPECT_GE(std::abs(top.dot(v)), 1.0 - 1e-8);
}

TEST(Spectral, ReportsNonConvergence) {
  RandomStream rng(8);
  const auto a = make_gaussian_matrix<Complex>(20, 6, rng);
  const RealVec y = intensities<Complex>(a.matrix(), rng.standard_vector<Complex>(6));
  SpectralOptions opts;
  opts.power_iter_max = 1;
  try {
    (void)spectral_initializer(a, y, opts, rng);
    FAIL();
  } catch (const NotConvergedError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotConverged);
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(Spectral, PhaseConventionIsDeterministic) {
  RandomStream rng(10);
  const auto a = make_gaussian_matrix<Complex>(32, 4, rng);
  const RealVec y = intensities<Complex>(a.matrix(), rng.standard_vector<Complex>(4));
  RandomStream r1(1), r2(2);
  const Vec<Complex> v1 = spectral_initializer(a, y, SpectralOptions{}, r1);
  const Vec<Complex> v2 = spectral_initializer(a, y, SpectralOptions{}, r2);
  EXPECT_LE((v1 - v2).norm(), 1e-7 * v1.norm());
  EXPECT_EQ(v1(0).imag(), 0.0);
  EXPECT_GT(v1(0).real(), 0.0);
}
