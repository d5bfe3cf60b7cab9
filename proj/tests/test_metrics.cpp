#include <gtest/gtest.h>

#include <cstdlib>

#include "test_support.hpp"

using namespace phaselin;

TEST(NMse, Examples) {
  RealVec x(2);
  x << 1.0, 0.0;
  EXPECT_EQ(n_mse<double>(x, x).nmse, 0.0);
  EXPECT_EQ(n_mse<double>(x, RealVec(-3.0 * x)).nmse, 0.0);
  RealVec orth(2);
  orth << 0.0, 1.0;
  EXPECT_EQ(n_mse<double>(x, orth).nmse, 1.0);
  EXPECT_EQ(n_mse<double>(x, RealVec::Zero(2)).nmse, 1.0);
  try {
    (void)n_mse<double>(RealVec::Zero(2), x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedMetric);
  }
}

TEST(NMse, ClosedFormMatchesGridSearch) {
  RandomStream rng(1);
  const Vec<Complex> x = rng.standard_vector<Complex>(5);
  const Vec<Complex> xh = x * Complex(0.7, -0.2) + 0.3 * rng.standard_vector<Complex>(5);
  EXPECT_NEAR(n_mse<Complex>(x, xh).nmse, phaselin::testing::grid_search_nmse<Complex>(x, xh), 1e-10);
  const RealVec xr = rng.standard_vector<double>(6);
  const RealVec xhr = -0.4 * xr + 0.5 * rng.standard_vector<double>(6);
  EXPECT_NEAR(n_mse<double>(xr, xhr).nmse, phaselin::testing::grid_search_nmse<double>(xr, xhr), 1e-10);
}

TEST(NMse, Invariances) {
  RandomStream rng(2);
  for (int k = 0; k < 20; ++k) {
    const Vec<Complex> x = rng.standard_vector<Complex>(4);
    const Vec<Complex> xh = rng.standard_vector<Complex>(4);
    const double base = n_mse<Complex>(x, xh).nmse;
    const Complex rot = std::polar(1.0, 0.3 * k);
    EXPECT_NEAR(n_mse<Complex>(x, Vec<Complex>(rot * xh)).nmse, base, 1e-12);
    EXPECT_NEAR(n_mse<Complex>(x, Vec<Complex>(4.2 * xh)).nmse, base, 1e-12);
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, 1.0);
  }
}

TEST(EmpiricalMse, PriorOnlyEstimatorHasTraceError) {
  RandomStream rng(3);
  const auto a = make_gaussian_matrix<Complex>(6, 3, rng);
  const SignalPrior<Complex> prior{rng.standard_vector<Complex>(3), random_psd<Complex>(3, 1.0, 0.1, rng)};
  const auto noise = NoiseSpec<Complex>::none(6);
  const auto mean_only = [&](const RealVec&) { return prior.mean; };
  const MseEstimate e = empirical_mse<Complex>(mean_only, a, prior, noise, 100000, 4);
  EXPECT_LE(std::abs(e.mse - real_trace<Complex>(prior.error_cov)), 3.0 * e.std_error);
}

TEST(EmpiricalMse, ScalarPhaseLinMatchesPrediction) {
  const MeasurementMatrix<double> a(RealMat::Ones(1, 1));
  const SignalPrior<double> prior{RealVec::Ones(1), RealMat::Constant(1, 1, 0.5)};
  const auto noise = NoiseSpec<double>::none(1);
  const PhaseLinEstimator<double> est(a, prior, noise);
  const MseEstimate e = empirical_mse<double>(est, a, prior, noise, 100000, 5);
  EXPECT_NEAR(e.mse, 0.1, 0.002);
}

TEST(EmpiricalMse, SmallAndRepeatedRuns) {
  RandomStream rng(6);
  const auto a = make_gaussian_matrix<double>(5, 2, rng);
  const auto prior = SignalPrior<double>::isotropic(rng.standard_vector<double>(2), 0.3);
  const auto noise = NoiseSpec<double>::isotropic(5, 0.01, 0.01);
  const PhaseLinEstimator<double> est(a, prior, noise);
  const MseEstimate two = empirical_mse<double>(est, a, prior, noise, 2, 1);
  EXPECT_TRUE(std::isfinite(two.mse));
  EXPECT_TRUE(std::isfinite(two.std_error));
  EXPECT_THROW(empirical_mse<double>(est, a, prior, noise, 1, 1), Error);

  const MseEstimate r1 = empirical_mse<double>(est, a, prior, noise, 5000, 9);
  const MseEstimate r2 = empirical_mse<double>(est, a, prior, noise, 5000, 9);
  EXPECT_EQ(r1.mse, r2.mse);
  EXPECT_EQ(r1.std_error, r2.std_error);

  const MseEstimate big = empirical_mse<double>(est, a, prior, noise, 200000, 10);
  const MseEstimate small = empirical_mse<double>(est, a, prior, noise, 100000, 11);
  EXPECT_NEAR(small.std_error / big.std_error, std::sqrt(2.0), 0.2 * std::sqrt(2.0));
}

TEST(EmpiricalMse, IndependentOfWorkerCount) {
  RandomStream rng(12);
  const auto a = make_gaussian_matrix<Complex>(8, 3, rng);
  const auto prior = SignalPrior<Complex>::isotropic(rng.standard_vector<Complex>(3), 0.2);
  const auto noise = NoiseSpec<Complex>::isotropic(8, 0.0, 0.01);
  const PhaseLinEstimator<Complex> est(a, prior, noise);
  const ProblemSampler<Complex> sampler(a, prior, noise);
  auto fn = [&](const RealVec& y) { return est.estimate(y); };
  setenv(kThreadsEnvVar, "1", 1);
  const auto e1 = squared_errors<Complex>(fn, sampler, 5000, 3);
  setenv(kThreadsEnvVar, "4", 1);
  const auto e4 = squared_errors<Complex>(fn, sampler, 5000, 3);
  unsetenv(kThreadsEnvVar);
  EXPECT_EQ(e1, e4);
}

TEST(Parallel, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(
                   10,
                   [](std::size_t i) {
                     if (i == 7) throw Error(ErrorCode::kInvalidArgument, "boom");
                   },
                   3),
               Error);
}
