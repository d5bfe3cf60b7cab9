#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "phaselin/errors.hpp"
#include "phaselin/field.hpp"
#include "phaselin/model.hpp"
#include "phaselin/random.hpp"

namespace phaselin {

struct SpectralOptions {
  /// T applied to each measurement before weighting; identity by default.
  std::function<double(double)> preprocessing = [](double y) { return y; };
  double power_iter_tol = 1e-10;
  int power_iter_max = 1000;
  bool scale_to_measurements = true;
  /// Mean of the measurement noise, subtracted before energy matching.
  /// Empty means zero.
  RealVec meas_noise_mean;

  void validate() const {
    detail::require(power_iter_max >= 1, ErrorCode::kInvalidArgument, "power_iter_max must be >= 1");
    detail::require(power_iter_tol > 0.0, ErrorCode::kInvalidArgument, "power_iter_tol must be > 0");
    detail::require(static_cast<bool>(preprocessing), ErrorCode::kInvalidArgument,
                    "preprocessing function is empty");
  }
};

/// Rotates v so its first entry that is non-negligible relative to the
/// largest one is real and positive.
template <FieldScalar S>
void fix_phase(Vec<S>& v) {
  const double peak = v.cwiseAbs().maxCoeff();
  if (peak == 0.0) return;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i));
    if (mag > 1e-8 * peak) {
      if constexpr (is_complex_v<S>) {
        v *= std::conj(v(i)) / mag;
        v(i) = Complex(mag, 0.0);
      } else if (v(i) < 0.0) {
        v = -v;
      }
      return;
    }
  }
}

/// Leading eigenvector of D = (1/M) sum_m T(y_m) a_m^H a_m (a_m the rows of
/// A) by power iteration from a random start. Negative weights are handled
/// by shifting D with a bound on its negative part, which keeps the
/// eigenvectors and makes the algebraically largest eigenvalue dominant.
template <FieldScalar S>
Vec<S> spectral_initializer(const MeasurementMatrix<S>& a, const RealVec& y,
                            const SpectralOptions& opts, RandomStream& rng) {
  opts.validate();
  const Mat<S>& am = a.matrix();
  const Eigen::Index m = am.rows();
  const Eigen::Index n = am.cols();
  detail::require(y.size() == m, ErrorCode::kDimensionMismatch, "y length does not match A rows");
  detail::require(y.allFinite(), ErrorCode::kInvalidArgument, "measurements are not finite");
  detail::require(opts.meas_noise_mean.size() == 0 || opts.meas_noise_mean.size() == m,
                  ErrorCode::kDimensionMismatch, "noise mean length does not match A rows");

  RealVec weights(m);
  for (Eigen::Index i = 0; i < m; ++i) weights(i) = opts.preprocessing(y(i));
  detail::require(weights.allFinite(), ErrorCode::kInvalidArgument,
                  "preprocessing produced non-finite weights");

  const double inv_m = 1.0 / static_cast<double>(m);
  Mat<S> d = am.adjoint() * weights.template cast<S>().asDiagonal() * am * inv_m;
  d = (d + d.adjoint()).eval() / 2.0;

  const double d_scale = d.cwiseAbs().maxCoeff();
  if (!(d_scale > 0.0) || d_scale <= 1e-300) {
    throw Error(ErrorCode::kDegenerateInitializer, "spectral matrix is numerically zero");
  }
  double shift = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (weights(i) < 0.0) shift -= weights(i) * am.row(i).squaredNorm() * inv_m;
  }
  if (shift > 0.0) d.diagonal().array() += shift;

  Vec<S> v = rng.standard_vector<S>(n);
  v.normalize();
  double residual = 0.0;
  bool converged = false;
  for (int it = 0; it < opts.power_iter_max; ++it) {
    Vec<S> dv = d * v;
    const double lambda = std::real(v.dot(dv));
    residual = (dv - lambda * v).norm();
    if (residual <= opts.power_iter_tol * std::max(std::abs(lambda), d_scale)) {
      converged = true;
      break;
    }
    const double len = dv.norm();
    if (!(len > 0.0)) {
      throw Error(ErrorCode::kDegenerateInitializer, "power iteration collapsed to zero");
    }
    v = dv / len;
  }
  if (!converged) {
    throw NotConvergedError("power iteration did not converge in " +
                                std::to_string(opts.power_iter_max) + " iterations (residual " +
                                std::to_string(residual) + ")",
                            residual);
  }
  fix_phase<S>(v);

  if (opts.scale_to_measurements) {
    double target = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double noise_mean = opts.meas_noise_mean.size() ? opts.meas_noise_mean(i) : 0.0;
      target += std::max(y(i) - noise_mean, 0.0);
    }
    const double current = (am * v).squaredNorm();
    if (current > 0.0) v *= std::sqrt(target / current);
  }
  return v;
}

}  // namespace phaselin
