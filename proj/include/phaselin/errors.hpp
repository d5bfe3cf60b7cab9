#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace phaselin {

enum class ErrorCode {
  kDimensionMismatch,
  kFieldMismatch,
  kInvalidArgument,
  kDegenerateCovariance,
  kSingularObservationCovariance,
  kInconsistentMoments,
  kDegenerateInitializer,
  kNotConverged,
  kStepSize,
  kUndefinedMetric,
  kZeroInitialGuess,
  kIo,
  kConfig,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kFieldMismatch: return "field mismatch";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kDegenerateCovariance: return "degenerate covariance";
    case ErrorCode::kSingularObservationCovariance: return "singular observation covariance";
    case ErrorCode::kInconsistentMoments: return "inconsistent moments";
    case ErrorCode::kDegenerateInitializer: return "degenerate initializer";
    case ErrorCode::kNotConverged: return "not converged";
    case ErrorCode::kStepSize: return "step size";
    case ErrorCode::kUndefinedMetric: return "undefined metric";
    case ErrorCode::kZeroInitialGuess: return "zero initial guess";
    case ErrorCode::kIo: return "i/o";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

/// Base exception for every failure raised by the library. The code is
/// stable and meant for programmatic dispatch; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when C_y cannot be factored even after the regularization ladder.
class SingularCovarianceError : public Error {
 public:
  SingularCovarianceError(const std::string& what, double min_eigenvalue)
      : Error(ErrorCode::kSingularObservationCovariance, what), min_eigenvalue_(min_eigenvalue) {}

  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

/// Power iteration ran out of iterations.
class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& what, double residual)
      : Error(ErrorCode::kNotConverged, what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Wraps an error raised inside an iterative loop with the iteration index.
class IterationError : public Error {
 public:
  IterationError(const Error& inner, std::size_t iteration)
      : Error(inner.code(), "iteration " + std::to_string(iteration) + ": " + inner.what()),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

namespace detail {

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace detail
}  // namespace phaselin
