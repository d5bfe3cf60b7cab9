#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include <Eigen/QR>

#include "phaselin/errors.hpp"
#include "phaselin/field.hpp"
#include "phaselin/model.hpp"

namespace phaselin {

struct BaselineOptions {
  int max_iters = 1000;
  /// Wirtinger-flow step; unset selects 0.1 over a curvature estimate
  /// (mean intensity times mean squared entry of A).
  std::optional<double> step_size;
  double tol = 1e-8;
  double fienup_beta = 0.9;

  void validate() const {
    detail::require(max_iters >= 1, ErrorCode::kInvalidArgument, "max_iters must be >= 1");
    detail::require(!step_size || *step_size > 0.0, ErrorCode::kInvalidArgument,
                    "step_size must be > 0");
    detail::require(tol >= 0.0, ErrorCode::kInvalidArgument, "tol must be >= 0");
  }
};

template <FieldScalar S>
struct BaselineResult {
  Vec<S> estimate;
  int iterations = 0;
  bool converged = false;
  /// Measurements that were negative and clamped to zero.
  std::size_t clamped = 0;
};

namespace detail {

/// phase(0) is taken to be 1.
template <FieldScalar S>
S unit_phase(S v) {
  const double mag = std::abs(v);
  if (mag == 0.0) return S(1);
  return v / mag;
}

inline RealVec clamped_amplitudes(const RealVec& y, std::size_t& clamped) {
  RealVec amp(y.size());
  clamped = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) < 0.0) ++clamped;
    amp(i) = std::sqrt(std::max(y(i), 0.0));
  }
  return amp;
}

/// Cached least-squares solver for A. Uses a Householder QR when A has full
/// column rank and a complete orthogonal decomposition (minimum-norm
/// pseudo-inverse) otherwise.
template <FieldScalar S>
class LeastSquares {
 public:
  explicit LeastSquares(const Mat<S>& a) : cod_(a) {
    full_rank_ = cod_.rank() == a.cols();
    if (full_rank_) qr_.compute(a);
  }

  bool full_column_rank() const noexcept { return full_rank_; }

  Vec<S> solve(const Vec<S>& rhs) const {
    if (full_rank_) return qr_.solve(rhs);
    return cod_.solve(rhs);
  }

 private:
  Eigen::CompleteOrthogonalDecomposition<Mat<S>> cod_;
  Eigen::HouseholderQR<Mat<S>> qr_;
  bool full_rank_ = false;
};

template <FieldScalar S>
Vec<S> project_to_magnitudes(const Vec<S>& z, const RealVec& amp) {
  Vec<S> out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out(i) = amp(i) * unit_phase<S>(z(i));
  return out;
}

template <FieldScalar S>
double amplitude_residual(const Vec<S>& z, const RealVec& amp) {
  return (z.cwiseAbs() - amp).norm();
}

template <FieldScalar S>
void check_inputs(const MeasurementMatrix<S>& a, const RealVec& y, const Vec<S>& start) {
  require(y.size() == a.rows(), ErrorCode::kDimensionMismatch, "y does not match A rows");
  require(start.size() == a.cols(), ErrorCode::kDimensionMismatch, "start does not match A columns");
  require(y.allFinite() && start.allFinite(), ErrorCode::kInvalidArgument,
          "baseline inputs are not finite");
}

}  // namespace detail

/// Alternating projections: z = A x, z <- sqrt(y) .* phase(z), x <- A^+ z.
/// Stops once | |Ax| - sqrt(y) | / |sqrt(y)| <= tol.
template <FieldScalar S>
BaselineResult<S> gerchberg_saxton(const MeasurementMatrix<S>& a, const RealVec& y,
                                   const Vec<S>& start, const BaselineOptions& opts = {}) {
  opts.validate();
  detail::check_inputs(a, y, start);
  BaselineResult<S> out;
  const RealVec amp = detail::clamped_amplitudes(y, out.clamped);
  const double amp_norm = amp.norm();
  if (amp_norm == 0.0) {
    out.estimate = Vec<S>::Zero(a.cols());
    out.converged = true;
    return out;
  }
  const detail::LeastSquares<S> ls(a.matrix());
  Vec<S> x = start;
  for (int it = 0; it < opts.max_iters; ++it) {
    const Vec<S> z = a.matrix() * x;
    if (detail::amplitude_residual<S>(z, amp) <= opts.tol * amp_norm) {
      out.converged = true;
      break;
    }
    x = ls.solve(detail::project_to_magnitudes<S>(z, amp));
    out.iterations = it + 1;
  }
  out.estimate = std::move(x);
  return out;
}

/// Relaxed projections x <- x - beta A^+ (A x - sqrt(y) .* phase(A x)).
/// For full-column-rank A, A^+ A = I and the update is evaluated as
/// (1 - beta) x + beta A^+ p, which is exactly the Gerchberg-Saxton update
/// at beta = 1.
template <FieldScalar S>
BaselineResult<S> fienup(const MeasurementMatrix<S>& a, const RealVec& y, const Vec<S>& start,
                         const BaselineOptions& opts = {}) {
  opts.validate();
  detail::check_inputs(a, y, start);
  BaselineResult<S> out;
  const RealVec amp = detail::clamped_amplitudes(y, out.clamped);
  const double amp_norm = amp.norm();
  if (amp_norm == 0.0) {
    out.estimate = Vec<S>::Zero(a.cols());
    out.converged = true;
    return out;
  }
  const double beta = opts.fienup_beta;
  const detail::LeastSquares<S> ls(a.matrix());
  Vec<S> x = start;
  for (int it = 0; it < opts.max_iters; ++it) {
    const Vec<S> z = a.matrix() * x;
    if (detail::amplitude_residual<S>(z, amp) <= opts.tol * amp_norm) {
      out.converged = true;
      break;
    }
    const Vec<S> back = ls.solve(detail::project_to_magnitudes<S>(z, amp));
    if (ls.full_column_rank()) {
      x = (1.0 - beta) * x + beta * back;
    } else {
      x = x - beta * (ls.solve(z) - back);
    }
    out.iterations = it + 1;
  }
  out.estimate = std::move(x);
  return out;
}

/// f(x) = (1/4M) sum_m (|a_m x|^2 - y_m)^2.
template <FieldScalar S>
double intensity_loss(const Mat<S>& a, const RealVec& y, const Vec<S>& x) {
  return ((a * x).cwiseAbs2() - y).squaredNorm() / (4.0 * static_cast<double>(a.rows()));
}

/// (1/M) sum_m (|a_m x|^2 - y_m) a_m^H a_m x: the gradient of
/// intensity_loss in the real coordinates of x (packed as re + i im for
/// complex fields, i.e. twice the Wirtinger derivative in conj(x)).
template <FieldScalar S>
Vec<S> intensity_gradient(const Mat<S>& a, const RealVec& y, const Vec<S>& x) {
  const Vec<S> z = a * x;
  const RealVec r = z.cwiseAbs2() - y;
  const Vec<S> weighted = r.template cast<S>().cwiseProduct(z);
  return a.adjoint() * weighted / static_cast<double>(a.rows());
}

template <FieldScalar S>
double default_wf_step(const Mat<S>& a, const Vec<S>& start) {
  const double m = static_cast<double>(a.rows());
  const double mean_intensity = (a * start).squaredNorm() / m;
  const double mean_entry = a.squaredNorm() / (m * static_cast<double>(a.cols()));
  const double curvature = mean_intensity * mean_entry;
  return curvature > 0.0 ? 0.1 / curvature : 0.1;
}

/// Gradient descent on intensity_loss. Stops when the relative step drops
/// below tol; a loss exceeding 10x its starting value raises kStepSize.
template <FieldScalar S>
BaselineResult<S> wirtinger_flow(const MeasurementMatrix<S>& a, const RealVec& y,
                                 const Vec<S>& start, const BaselineOptions& opts = {}) {
  opts.validate();
  detail::check_inputs(a, y, start);
  const Mat<S>& am = a.matrix();
  BaselineResult<S> out;
  const double step = opts.step_size ? *opts.step_size : default_wf_step<S>(am, start);
  Vec<S> x = start;
  const double initial_loss = intensity_loss<S>(am, y, x);
  for (int it = 0; it < opts.max_iters; ++it) {
    const Vec<S> grad = intensity_gradient<S>(am, y, x);
    const Vec<S> delta = step * grad;
    const double x_norm = x.norm();
    if (delta.norm() <= opts.tol * x_norm || grad.isZero(0.0)) {
      out.converged = true;
      break;
    }
    x -= delta;
    out.iterations = it + 1;
    const double loss = intensity_loss<S>(am, y, x);
    if (!std::isfinite(loss) || (initial_loss > 0.0 && loss > 10.0 * initial_loss)) {
      throw Error(ErrorCode::kStepSize, "Wirtinger flow diverged at iteration " +
                                            std::to_string(it + 1) + " (step " +
                                            std::to_string(step) + ")");
    }
  }
  out.estimate = std::move(x);
  return out;
}

}  // namespace phaselin
