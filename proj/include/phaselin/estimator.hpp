#pragma once

#include <cmath>
#include <string>

#include "phaselin/errors.hpp"
#include "phaselin/field.hpp"
#include "phaselin/linalg.hpp"
#include "phaselin/model.hpp"

namespace phaselin {

/// Mean and covariance of the phased measurements z = A x + n^z.
template <FieldScalar S>
struct PhasedMoments {
  Vec<S> z_mean;
  Mat<S> z_cov;
};

/// Moments of (u1^2, u2^2) for a jointly Gaussian real pair (u1, u2).
struct FoldedNormalMoments {
  double mean1 = 0.0;
  double mean2 = 0.0;
  double var1 = 0.0;
  double var2 = 0.0;
  double cov12 = 0.0;
};

/// Closed-form moments of the bivariate folded normal (squared) pair:
///   E[u_i^2]      = s_i^2 + mu_i^2
///   Var[u_i^2]    = 2 s_i^4 + 4 mu_i^2 s_i^2
///   Cov[u1^2,u2^2] = 4 mu_1 mu_2 s_12 + 2 s_12^2
inline FoldedNormalMoments folded_normal_moments(double mu1, double mu2, double var1, double var2,
                                                 double cov12) {
  detail::require(var1 >= 0.0 && var2 >= 0.0, ErrorCode::kInvalidArgument,
                  "folded normal variances must be nonnegative");
  detail::require(std::abs(cov12) <= std::sqrt(var1 * var2) * (1.0 + 1e-12) + 1e-300,
                  ErrorCode::kInvalidArgument, "folded normal covariance exceeds Cauchy-Schwarz bound");
  FoldedNormalMoments out;
  out.mean1 = var1 + mu1 * mu1;
  out.mean2 = var2 + mu2 * mu2;
  out.var1 = 2.0 * var1 * var1 + 4.0 * mu1 * mu1 * var1;
  out.var2 = 2.0 * var2 * var2 + 4.0 * mu2 * mu2 * var2;
  out.cov12 = 4.0 * mu1 * mu2 * cov12 + 2.0 * cov12 * cov12;
  return out;
}

/// z_mean = A x_mean, z_cov = A C_e A^H + C_nz.
template <FieldScalar S>
PhasedMoments<S> phased_moments(const MeasurementMatrix<S>& a, const SignalPrior<S>& prior,
                                const Mat<S>& signal_noise_cov) {
  detail::require(prior.mean.size() == a.cols() && prior.error_cov.rows() == a.cols(),
                  ErrorCode::kDimensionMismatch, "prior does not match A columns");
  detail::require(signal_noise_cov.rows() == a.rows() && signal_noise_cov.cols() == a.rows(),
                  ErrorCode::kDimensionMismatch, "signal noise covariance does not match A rows");
  const Mat<S>& am = a.matrix();
  PhasedMoments<S> out;
  out.z_mean = am * prior.mean;
  out.z_cov = am * prior.error_cov * am.adjoint() + signal_noise_cov;
  return out;
}

/// y_mean = diag(C_z) + |z_mean|^2 + n^y mean.
template <FieldScalar S>
RealVec observation_mean(const PhasedMoments<S>& moments, const RealVec& meas_noise_mean) {
  const Eigen::Index m = moments.z_mean.size();
  detail::require(moments.z_cov.rows() == m && meas_noise_mean.size() == m,
                  ErrorCode::kDimensionMismatch, "observation mean inputs disagree in size");
  RealVec diag(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const S d = moments.z_cov(i, i);
    if constexpr (is_complex_v<S>) {
      const double scale = std::max(std::abs(d.real()), 1.0);
      if (std::abs(d.imag()) > 1e-10 * scale) {
        throw Error(ErrorCode::kInconsistentMoments,
                    "C_z diagonal entry " + std::to_string(i) + " has imaginary part " +
                        std::to_string(d.imag()));
      }
      diag(i) = d.real();
    } else {
      diag(i) = d;
    }
  }
  return diag + moments.z_mean.cwiseAbs2() + meas_noise_mean;
}

/// C_xy = 2 C_e A^T diag(z_mean) for real fields, C_e A^H diag(z_mean) for
/// complex ones.
template <FieldScalar S>
Mat<S> cross_covariance(const MeasurementMatrix<S>& a, const SignalPrior<S>& prior,
                        const PhasedMoments<S>& moments) {
  detail::require(moments.z_mean.size() == a.rows(), ErrorCode::kDimensionMismatch,
                  "moments do not match A rows");
  detail::require(prior.error_cov.rows() == a.cols(), ErrorCode::kDimensionMismatch,
                  "error covariance does not match A columns");
  Mat<S> c = prior.error_cov * a.matrix().adjoint() * moments.z_mean.asDiagonal();
  if constexpr (!is_complex_v<S>) c *= 2.0;
  return c;
}

namespace detail {

/// Phase-induced part of C_y before symmetrization.
template <FieldScalar S>
RealMat raw_observation_covariance(const PhasedMoments<S>& moments) {
  const Vec<S>& zm = moments.z_mean;
  const Mat<S>& cz = moments.z_cov;
  require(cz.rows() == zm.size() && cz.cols() == zm.size(), ErrorCode::kDimensionMismatch,
          "C_z does not match z_mean");
  if constexpr (is_complex_v<S>) {
    const Mat<S> outer = zm * zm.adjoint();
    return 2.0 * outer.cwiseProduct(cz.conjugate()).real() + cz.cwiseAbs2();
  } else {
    return (4.0 * zm * zm.transpose() + 2.0 * cz).cwiseProduct(cz);
  }
}

}  // namespace detail

/// Real:    C_y = (4 zz^T + 2 C_z) .* C_z + C_ny
/// Complex: C_y = 2 Re{(z z^H) .* conj(C_z)} + C_z .* conj(C_z) + C_ny
/// The phase-induced part is symmetrized by averaging with its transpose
/// before the noise covariance is added.
template <FieldScalar S>
RealMat observation_covariance(const PhasedMoments<S>& moments, const RealMat& meas_noise_cov) {
  const Eigen::Index m = moments.z_mean.size();
  detail::require(meas_noise_cov.rows() == m && meas_noise_cov.cols() == m,
                  ErrorCode::kDimensionMismatch, "observation covariance inputs disagree in size");
  const RealMat cy = detail::raw_observation_covariance(moments);
  RealMat out = (cy + cy.transpose()) / 2.0;
  out += meas_noise_cov;
  return out;
}

/// Result of predicted_mse with the ridge that was needed to factor C_y.
struct MseReport {
  double mse = 0.0;
  double regularization = 0.0;
};

namespace detail {

template <FieldScalar S>
double mse_from_solve(const Mat<S>& error_cov, const Mat<S>& cross_cov, const Mat<S>& solved) {
  const double prior_trace = real_trace<S>(error_cov);
  // tr(C_xy C_y^{-1} C_xy^H) = sum_{n,m} C_xy(n,m) * S(m,n) with C_y S = C_xy^H
  const double explained = std::real(cross_cov.cwiseProduct(solved.transpose()).sum());
  double mse = prior_trace - explained;
  if (mse < 0.0) {
    if (mse < -1e-9 * prior_trace) {
      throw Error(ErrorCode::kInconsistentMoments,
                  "predicted MSE " + std::to_string(mse) + " is negative beyond round-off");
    }
    mse = 0.0;
  }
  return mse;
}

}  // namespace detail

/// tr(C_e - C_xy C_y^{-1} C_xy^H), using a solve against C_y rather than an
/// inverse. Small negative round-off is clamped to zero.
template <FieldScalar S>
MseReport predicted_mse(const Mat<S>& error_cov, const Mat<S>& cross_cov, const RealMat& obs_cov) {
  detail::require(cross_cov.rows() == error_cov.rows() && cross_cov.cols() == obs_cov.rows(),
                  ErrorCode::kDimensionMismatch, "predicted_mse inputs disagree in size");
  const RegularizedCholesky chol(obs_cov);
  const Mat<S> solved = chol.solve_field<S>(Mat<S>(cross_cov.adjoint()));
  return {detail::mse_from_solve<S>(error_cov, cross_cov, solved), chol.lambda()};
}

/// Affine MSE-optimal estimator x_hat = W y + b assembled from the phased
/// moments. Immutable after construction.
template <FieldScalar S>
class PhaseLinEstimator {
 public:
  static constexpr ScalarField kField = field_of<S>;

  PhaseLinEstimator(const MeasurementMatrix<S>& a, const SignalPrior<S>& prior,
                    const NoiseSpec<S>& noise) {
    validate_problem(a, prior, noise);
    prior_mean_ = prior.mean;
    const PhasedMoments<S> moments = phased_moments(a, prior, noise.signal_cov);
    y_mean_ = observation_mean(moments, noise.meas_mean);
    cross_cov_ = cross_covariance(a, prior, moments);
    obs_cov_ = observation_covariance(moments, noise.meas_cov);
    chol_ = RegularizedCholesky(obs_cov_);
    // C_y S = C_xy^H, W = S^H since C_y is real symmetric.
    const Mat<S> solved = chol_.solve_field<S>(Mat<S>(cross_cov_.adjoint()));
    weights_ = solved.adjoint();
    offset_ = prior_mean_ - weights_ * y_mean_.template cast<S>();
    predicted_mse_ = detail::mse_from_solve<S>(prior.error_cov, cross_cov_, solved);
  }

  ScalarField field() const noexcept { return kField; }
  const Mat<S>& weights() const noexcept { return weights_; }
  const Vec<S>& offset() const noexcept { return offset_; }
  const Vec<S>& prior_mean() const noexcept { return prior_mean_; }
  const RealVec& y_mean() const noexcept { return y_mean_; }
  const Mat<S>& cross_cov() const noexcept { return cross_cov_; }
  const RealMat& obs_cov() const noexcept { return obs_cov_; }
  double predicted_mse() const noexcept { return predicted_mse_; }
  double regularization_used() const noexcept { return chol_.lambda(); }

  /// x_hat = C_xy v + x_mean with C_y v = y - y_mean.
  Vec<S> estimate(const RealVec& y) const {
    detail::require(y.size() == y_mean_.size(), ErrorCode::kDimensionMismatch,
                    "observation length does not match the estimator");
    const RealVec v = chol_.solve(y - y_mean_);
    return cross_cov_ * v.template cast<S>() + prior_mean_;
  }

  /// Same map through the assembled affine form W y + b.
  Vec<S> apply_affine(const RealVec& y) const { return weights_ * y.template cast<S>() + offset_; }

 private:
  Vec<S> prior_mean_;
  RealVec y_mean_;
  Mat<S> cross_cov_;
  RealMat obs_cov_;
  RegularizedCholesky chol_;
  Mat<S> weights_;
  Vec<S> offset_;
  double predicted_mse_ = 0.0;
};

template <FieldScalar S>
PhaseLinEstimator<S> build_estimator(const MeasurementMatrix<S>& a, const SignalPrior<S>& prior,
                                     const NoiseSpec<S>& noise) {
  return PhaseLinEstimator<S>(a, prior, noise);
}

template <FieldScalar S>
Vec<S> estimate(const PhaseLinEstimator<S>& est, const RealVec& y) {
  return est.estimate(y);
}

}  // namespace phaselin
