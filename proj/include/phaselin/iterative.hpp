#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <variant>
#include <vector>

#include "phaselin/errors.hpp"
#include "phaselin/estimator.hpp"
#include "phaselin/metrics.hpp"
#include "phaselin/model.hpp"

namespace phaselin {

/// C_e is the given matrix at every iteration.
template <FieldScalar S>
struct FixedMatrix {
  Mat<S> error_cov;
};

/// C_e = (beta^2 |x0|^2 / N) I, computed once from the starting point.
struct FixedScaledIdentity {
  double beta = 1.0;
};

template <FieldScalar S>
struct IterativeOptions {
  std::size_t t_max = 15;
  std::variant<FixedScaledIdentity, FixedMatrix<S>> error_cov_policy = FixedScaledIdentity{};
  /// Early stop when |x_t - x_{t-1}| <= stop_tol |x_{t-1}|; 0 disables.
  double stop_tol = 0.0;
  /// C_e is multiplied by this factor after every iteration. 1 keeps it
  /// fixed, which is the default protocol.
  double error_cov_decay = 1.0;

  void validate() const {
    if (const auto* scaled = std::get_if<FixedScaledIdentity>(&error_cov_policy)) {
      detail::require(scaled->beta > 0.0, ErrorCode::kInvalidArgument, "beta must be > 0");
    }
    detail::require(stop_tol >= 0.0, ErrorCode::kInvalidArgument, "stop_tol must be >= 0");
    detail::require(error_cov_decay > 0.0 && error_cov_decay <= 1.0, ErrorCode::kInvalidArgument,
                    "error_cov_decay must lie in (0, 1]");
  }
};

struct IterationRecord {
  std::size_t t = 0;
  double predicted_mse = 0.0;
  std::optional<double> nmse;
  double regularization = 0.0;
};

using IterationTrace = std::vector<IterationRecord>;

template <FieldScalar S>
struct IterativeResult {
  Vec<S> estimate;
  IterationTrace trace;
};

inline void write_trace_csv(std::ostream& out, const IterationTrace& trace) {
  out << "t,predicted_mse,nmse,regularization\n";
  const auto old_precision = out.precision(17);
  for (const auto& r : trace) {
    out << r.t << ',' << r.predicted_mse << ',';
    if (r.nmse) out << *r.nmse;
    out << ',' << r.regularization << '\n';
  }
  out.precision(old_precision);
}

/// Re-centers the prior at the previous estimate and reapplies PhaseLin,
/// t_max + 1 times in total. All moments are rebuilt each iteration; the
/// noise model is held fixed. `truth`, when given, fills the N-MSE column
/// of the trace.
template <FieldScalar S>
IterativeResult<S> iterative_phaselin(const MeasurementMatrix<S>& a, const RealVec& y,
                                      const NoiseSpec<S>& noise, const Vec<S>& start,
                                      const IterativeOptions<S>& opts,
                                      const Vec<S>* truth = nullptr) {
  opts.validate();
  const Eigen::Index n = a.cols();
  detail::require(start.size() == n, ErrorCode::kDimensionMismatch, "start does not match A columns");
  detail::require(y.size() == a.rows(), ErrorCode::kDimensionMismatch, "y does not match A rows");
  if (start.isZero(0.0)) {
    throw Error(ErrorCode::kZeroInitialGuess,
                "a zero initial guess is a fixed point of PhaseLin (C_xy = 0)");
  }

  Mat<S> error_cov;
  if (const auto* fixed = std::get_if<FixedMatrix<S>>(&opts.error_cov_policy)) {
    error_cov = fixed->error_cov;
  } else {
    const double beta = std::get<FixedScaledIdentity>(opts.error_cov_policy).beta;
    const double var = beta * beta * start.squaredNorm() / static_cast<double>(n);
    error_cov = Mat<S>::Identity(n, n) * var;
  }

  IterativeResult<S> result;
  result.trace.reserve(opts.t_max + 1);
  Vec<S> center = start;
  for (std::size_t t = 0; t <= opts.t_max; ++t) {
    Vec<S> next;
    IterationRecord record;
    record.t = t;
    try {
      const SignalPrior<S> prior{center, error_cov};
      const PhaseLinEstimator<S> est(a, prior, noise);
      next = est.estimate(y);
      record.predicted_mse = est.predicted_mse();
      record.regularization = est.regularization_used();
      if (truth) record.nmse = n_mse<S>(*truth, next).nmse;
    } catch (const Error& e) {
      throw IterationError(e, t);
    }
    result.trace.push_back(record);
    const double step = (next - center).norm();
    const double ref = center.norm();
    center = std::move(next);
    if (opts.stop_tol > 0.0 && step <= opts.stop_tol * ref) break;
    error_cov *= opts.error_cov_decay;
  }
  result.estimate = std::move(center);
  return result;
}

}  // namespace phaselin
