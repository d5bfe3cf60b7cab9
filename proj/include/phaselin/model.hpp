#pragma once

#include <string>
#include <utility>

#include "phaselin/errors.hpp"
#include "phaselin/field.hpp"
#include "phaselin/linalg.hpp"
#include "phaselin/random.hpp"

namespace phaselin {

/// Dense M x N sensing operator over the field of `S`.
template <FieldScalar S>
class MeasurementMatrix {
 public:
  static constexpr ScalarField kField = field_of<S>;

  MeasurementMatrix() = default;

  explicit MeasurementMatrix(Mat<S> entries) : a_(std::move(entries)) {
    detail::require(a_.rows() >= 1 && a_.cols() >= 1, ErrorCode::kInvalidArgument,
                    "measurement matrix must be at least 1x1");
    detail::require(a_.allFinite(), ErrorCode::kInvalidArgument,
                    "measurement matrix has non-finite entries");
  }

  const Mat<S>& matrix() const noexcept { return a_; }
  Eigen::Index rows() const noexcept { return a_.rows(); }
  Eigen::Index cols() const noexcept { return a_.cols(); }
  ScalarField field() const noexcept { return kField; }

 private:
  Mat<S> a_;
};

/// Gaussian error model x = mean + e, e ~ N(0, error_cov) or CN(0, error_cov).
template <FieldScalar S>
struct SignalPrior {
  Vec<S> mean;
  Mat<S> error_cov;

  static SignalPrior isotropic(Vec<S> mean, double variance) {
    const Eigen::Index n = mean.size();
    return {std::move(mean), Mat<S>::Identity(n, n) * variance};
  }

  void validate() const {
    detail::require(mean.allFinite(), ErrorCode::kInvalidArgument, "prior mean is not finite");
    detail::require(error_cov.rows() == mean.size(), ErrorCode::kDimensionMismatch,
                    "error covariance does not match the prior mean");
    require_psd<S>(error_cov, "error covariance");
  }
};

/// Signal noise n^z ~ (C)N(0, signal_cov) added before the modulus, and real
/// measurement noise n^y ~ N(meas_mean, meas_cov) added after it.
template <FieldScalar S>
struct NoiseSpec {
  Mat<S> signal_cov;
  RealVec meas_mean;
  RealMat meas_cov;

  static NoiseSpec none(Eigen::Index m) {
    return {Mat<S>::Zero(m, m), RealVec::Zero(m), RealMat::Zero(m, m)};
  }

  static NoiseSpec isotropic(Eigen::Index m, double signal_var, double meas_var) {
    return {Mat<S>::Identity(m, m) * signal_var, RealVec::Zero(m),
            RealMat::Identity(m, m) * meas_var};
  }

  Eigen::Index size() const noexcept { return meas_mean.size(); }

  bool measurement_noiseless() const { return meas_cov.isZero(0.0) && meas_mean.isZero(0.0); }

  void validate() const {
    const Eigen::Index m = meas_mean.size();
    detail::require(signal_cov.rows() == m && meas_cov.rows() == m, ErrorCode::kDimensionMismatch,
                    "noise covariances do not match the measurement count");
    detail::require(meas_mean.allFinite(), ErrorCode::kInvalidArgument,
                    "measurement noise mean is not finite");
    require_psd<S>(signal_cov, "signal noise covariance");
    require_psd<double>(meas_cov, "measurement noise covariance");
  }
};

template <FieldScalar S>
void validate_problem(const MeasurementMatrix<S>& a, const SignalPrior<S>& prior,
                      const NoiseSpec<S>& noise) {
  prior.validate();
  noise.validate();
  detail::require(prior.mean.size() == a.cols(), ErrorCode::kDimensionMismatch,
                  "prior dimension " + std::to_string(prior.mean.size()) + " vs A columns " +
                      std::to_string(a.cols()));
  detail::require(noise.size() == a.rows(), ErrorCode::kDimensionMismatch,
                  "noise dimension " + std::to_string(noise.size()) + " vs A rows " +
                      std::to_string(a.rows()));
}

/// Draws L g with L L^H = C; g standard (circular, unit variance) in the
/// field of S.
template <FieldScalar S>
Vec<S> sample_with_factor(const Mat<S>& factor, RandomStream& rng) {
  return factor * rng.standard_vector<S>(factor.cols());
}

template <FieldScalar S>
Vec<S> sample_signal(const SignalPrior<S>& prior, RandomStream& rng) {
  prior.validate();
  return prior.mean + sample_with_factor<S>(psd_factor<S>(prior.error_cov), rng);
}

/// Squared modulus of A x, no noise.
template <FieldScalar S>
RealVec intensities(const Mat<S>& a, const Vec<S>& x) {
  return (a * x).cwiseAbs2();
}

/// Samples y = |A x + n^z|^2 + n^y. Factors are computed on every call; use
/// ProblemSampler when drawing repeatedly from one instance.
template <FieldScalar S>
RealVec measure(const MeasurementMatrix<S>& a, const Vec<S>& x, const NoiseSpec<S>& noise,
                RandomStream& rng) {
  detail::require(x.size() == a.cols(), ErrorCode::kDimensionMismatch,
                  "signal length does not match A columns");
  detail::require(noise.size() == a.rows(), ErrorCode::kDimensionMismatch,
                  "noise length does not match A rows");
  const Vec<S> nz = sample_with_factor<S>(psd_factor<S>(noise.signal_cov), rng);
  const RealVec ny = noise.meas_mean + psd_factor<double>(noise.meas_cov) * rng.normal_vector(a.rows());
  return (a.matrix() * x + nz).cwiseAbs2() + ny;
}

template <FieldScalar S>
MeasurementMatrix<S> make_gaussian_matrix(Eigen::Index m, Eigen::Index n, RandomStream& rng) {
  detail::require(m >= 1 && n >= 1, ErrorCode::kInvalidArgument, "matrix dimensions must be >= 1");
  Mat<S> a(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.standard<S>();
  return MeasurementMatrix<S>(std::move(a));
}

/// One draw of the full generative model.
template <FieldScalar S>
struct ProblemDraw {
  Vec<S> x;
  RealVec y;
};

/// Caches the covariance factors of one problem instance so repeated draws
/// cost only matrix-vector products.
template <FieldScalar S>
class ProblemSampler {
 public:
  ProblemSampler(MeasurementMatrix<S> a, SignalPrior<S> prior, NoiseSpec<S> noise)
      : a_(std::move(a)), prior_(std::move(prior)), noise_(std::move(noise)) {
    validate_problem(a_, prior_, noise_);
    error_factor_ = psd_factor<S>(prior_.error_cov);
    signal_noise_factor_ = psd_factor<S>(noise_.signal_cov);
    meas_noise_factor_ = psd_factor<double>(noise_.meas_cov);
    meas_noise_zero_ = noise_.meas_cov.isZero(0.0);
    signal_noise_zero_ = noise_.signal_cov.isZero(0.0);
  }

  ProblemDraw<S> draw(RandomStream& rng) const {
    ProblemDraw<S> out;
    out.x = prior_.mean + sample_with_factor<S>(error_factor_, rng);
    Vec<S> z = a_.matrix() * out.x;
    if (!signal_noise_zero_) z += sample_with_factor<S>(signal_noise_factor_, rng);
    out.y = z.cwiseAbs2() + noise_.meas_mean;
    if (!meas_noise_zero_) out.y += meas_noise_factor_ * rng.normal_vector(a_.rows());
    return out;
  }

  const MeasurementMatrix<S>& matrix() const noexcept { return a_; }
  const SignalPrior<S>& prior() const noexcept { return prior_; }
  const NoiseSpec<S>& noise() const noexcept { return noise_; }

 private:
  MeasurementMatrix<S> a_;
  SignalPrior<S> prior_;
  NoiseSpec<S> noise_;
  Mat<S> error_factor_;
  Mat<S> signal_noise_factor_;
  RealMat meas_noise_factor_;
  bool meas_noise_zero_ = true;
  bool signal_noise_zero_ = true;
};

}  // namespace phaselin
