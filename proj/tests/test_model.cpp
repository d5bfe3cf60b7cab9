#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"

using namespace phaselin;
using phaselin::testing::RunningStat;

TEST(Model, ZeroErrorCovarianceReturnsMean) {
  RandomStream rng(3);
  Vec<Complex> mean(3);
  mean << Complex(1, 2), Complex(-0.5, 0), Complex(0, -3);
  const SignalPrior<Complex> prior{mean, Mat<Complex>::Zero(3, 3)};
  for (int k = 0; k < 5; ++k) EXPECT_EQ(sample_signal(prior, rng), mean);
}

TEST(Model, RealSignalMomentsMatchPrior) {
  const auto prior = SignalPrior<double>::isotropic(RealVec::Zero(3), 1.0);
  const ProblemSampler<double> sampler(MeasurementMatrix<double>(RealMat::Identity(3, 3)), prior,
                                       NoiseSpec<double>::none(3));
  const RandomStream root(11);
  constexpr std::size_t kDraws = 1000000;
  std::vector<RunningStat> stats(3);
  for (std::size_t t = 0; t < kDraws; ++t) {
    RandomStream rng = root.split(t);
    const auto d = sampler.draw(rng);
    for (int i = 0; i < 3; ++i) stats[i].add(d.x(i));
  }
  for (const auto& s : stats) {
    EXPECT_LE(std::abs(s.mean()), 4.0 / std::sqrt(double(kDraws)));
    EXPECT_NEAR(s.variance(), 1.0, 0.02);
  }
}

TEST(Model, ComplexSignalIsCircular) {
  const auto prior = SignalPrior<Complex>::isotropic(Vec<Complex>::Zero(2), 1.0);
  const Mat<Complex> factor = psd_factor<Complex>(prior.error_cov);
  RandomStream rng(5);
  constexpr std::size_t kDraws = 1000000;
  // Pseudo-covariance E[e e^T], real and imaginary parts of each entry.
  std::vector<RunningStat> re(4), im(4);
  for (std::size_t t = 0; t < kDraws; ++t) {
    const Vec<Complex> e = sample_with_factor<Complex>(factor, rng);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const Complex p = e(i) * e(j);
        re[2 * i + j].add(p.real());
        im[2 * i + j].add(p.imag());
      }
  }
  for (int k = 0; k < 4; ++k) {
    EXPECT_LE(std::abs(re[k].mean()), 4.0 * re[k].std_error());
    EXPECT_LE(std::abs(im[k].mean()), 4.0 * im[k].std_error());
  }
}

TEST(Model, MeasureEdgeCases) {
  RandomStream rng(1);
  const auto a = make_gaussian_matrix<Complex>(5, 3, rng);
  EXPECT_TRUE(measure(a, Vec<Complex>(Vec<Complex>::Zero(3)), NoiseSpec<Complex>::none(5), rng).isZero(0.0));

  const MeasurementMatrix<Complex> eye(Mat<Complex>::Identity(3, 3));
  Vec<Complex> x(3);
  x << Complex(1, 1), Complex(0, -2), Complex(3, 0);
  const RealVec y = measure(eye, x, NoiseSpec<Complex>::none(3), rng);
  EXPECT_DOUBLE_EQ(y(0), 2.0);
  EXPECT_DOUBLE_EQ(y(1), 4.0);
  EXPECT_DOUBLE_EQ(y(2), 9.0);
}

TEST(Model, NoiselessMeasurementIgnoresGlobalPhase) {
  RandomStream rng(2);
  const auto a = make_gaussian_matrix<Complex>(12, 4, rng);
  const Vec<Complex> x = rng.standard_vector<Complex>(4);
  const Complex rot = std::polar(1.0, 0.7);
  const RealVec y1 = intensities<Complex>(a.matrix(), x);
  const RealVec y2 = intensities<Complex>(a.matrix(), Vec<Complex>(rot * x));
  EXPECT_LE((y1 - y2).norm(), 1e-12 * y1.norm());
}

TEST(Model, SampledObservationMeanMatchesClosedForm) {
  RandomStream rng(8);
  const auto a = make_gaussian_matrix<Complex>(4, 2, rng);
  const SignalPrior<Complex> prior{rng.standard_vector<Complex>(2),
                                   Mat<Complex>::Identity(2, 2) * 0.5};
  const auto noise = NoiseSpec<Complex>::isotropic(4, 0.1, 0.05);
  const RealVec closed =
      observation_mean(phased_moments(a, prior, noise.signal_cov), noise.meas_mean);
  const ProblemSampler<Complex> sampler(a, prior, noise);
  std::vector<RunningStat> stats(4);
  for (int t = 0; t < 200000; ++t) {
    const RealVec y = sampler.draw(rng).y;
    for (int i = 0; i < 4; ++i) stats[i].add(y(i));
  }
  for (int i = 0; i < 4; ++i) EXPECT_LE(std::abs(stats[i].mean() - closed(i)), 3.0 * stats[i].std_error());
}

TEST(Model, GaussianMatrixShapeAndScale) {
  RandomStream rng(4);
  const auto one = make_gaussian_matrix<double>(1, 1, rng);
  EXPECT_TRUE(std::isfinite(one.matrix()(0, 0)));

  const auto tall = make_gaussian_matrix<Complex>(10000, 1, rng);
  EXPECT_NEAR(tall.matrix().squaredNorm() / 10000.0, 1.0, 0.02);

  RandomStream r1(99), r2(99);
  EXPECT_EQ(make_gaussian_matrix<Complex>(6, 3, r1).matrix(),
            make_gaussian_matrix<Complex>(6, 3, r2).matrix());
}

TEST(Model, RejectsInvalidInputs) {
  EXPECT_THROW(MeasurementMatrix<double>(RealMat(0, 3)), Error);
  RealMat bad(2, 2);
  bad << 1.0, 0.0, 0.0, -1.0;
  SignalPrior<double> prior{RealVec::Zero(2), bad};
  try {
    prior.validate();
    FAIL() << "negative-definite covariance accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
  RandomStream rng(1);
  const auto a = make_gaussian_matrix<double>(3, 2, rng);
  try {
    validate_problem(a, SignalPrior<double>::isotropic(RealVec::Zero(2), 1.0),
                     NoiseSpec<double>::none(4));
    FAIL() << "size mismatch accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(Model, RankDeficientCovarianceStillSamples) {
  RealMat c = RealMat::Zero(2, 2);
  c(0, 0) = 1.0;
  const RealMat l = psd_factor<double>(c);
  EXPECT_LE((l * l.transpose() - c).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Model, FieldMismatchIsReported) {
  std::stringstream ss;
  write_matrix<double>(ss, RealMat::Identity(2, 2));
  const AnyMatrix m = read_matrix(ss);
  EXPECT_EQ(m.field, ScalarField::kReal);
  try {
    (void)m.as<Complex>();
    FAIL() << "field mismatch accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFieldMismatch);
  }
}
