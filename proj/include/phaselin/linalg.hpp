#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "phaselin/errors.hpp"
#include "phaselin/field.hpp"

namespace phaselin {

inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kSamplingJitter = 1e-12;
inline constexpr double kRegularizationStart = 1e-10;
inline constexpr double kRegularizationStop = 1e-4;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

template <FieldScalar S>
double real_trace(const Mat<S>& m) {
  return std::real(m.trace());
}

/// Checks that `c` is square, Hermitian and positive semidefinite, both
/// within `kPsdTolerance` relative to its trace.
template <FieldScalar S>
void require_psd(const Mat<S>& c, const std::string& name) {
  detail::require(c.rows() == c.cols(), ErrorCode::kDimensionMismatch, name + " is not square");
  detail::require(c.allFinite(), ErrorCode::kInvalidArgument, name + " has non-finite entries");
  if (c.size() == 0) return;
  const double scale = std::max(std::abs(real_trace(c)), c.cwiseAbs().maxCoeff());
  const double tol = kPsdTolerance * std::max(scale, 1e-300);
  const double asym = (c - c.adjoint()).cwiseAbs().maxCoeff();
  detail::require(asym <= tol, ErrorCode::kInvalidArgument, name + " is not Hermitian");
  if (scale == 0.0) return;
  const Mat<S> sym = (c + c.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Mat<S>> eig(sym, Eigen::EigenvaluesOnly);
  detail::require(eig.eigenvalues().minCoeff() >= -tol, ErrorCode::kInvalidArgument,
                  name + " is not positive semidefinite");
}

/// Lower factor L with L L^H = C. Rank-deficient covariances get one retry
/// with jitter eps * tr(C)/n * I; the zero matrix factors to zero.
template <FieldScalar S>
Mat<S> psd_factor(const Mat<S>& c) {
  const Eigen::Index n = c.rows();
  if (n == 0 || c.isZero(0.0)) return Mat<S>::Zero(n, n);
  Eigen::LLT<Mat<S>> llt(c);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double jitter = kSamplingJitter * real_trace(c) / static_cast<double>(n);
  if (jitter > 0.0) {
    Mat<S> shifted = c;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw Error(ErrorCode::kDegenerateCovariance,
              "covariance of size " + std::to_string(n) + " has no PSD factor after jitter");
}

/// Cholesky factorization of a real symmetric matrix with the escalating
/// ridge lambda = 1e-10 * tr/M, x10 each step, up to 1e-4 * tr/M.
class RegularizedCholesky {
 public:
  RegularizedCholesky() = default;

  explicit RegularizedCholesky(const RealMat& c) {
    detail::require(c.rows() == c.cols(), ErrorCode::kDimensionMismatch, "C_y is not square");
    const Eigen::Index m = c.rows();
    if (try_factor(c)) return;
    const double base = std::abs(c.trace()) / static_cast<double>(std::max<Eigen::Index>(m, 1));
    for (double factor = kRegularizationStart; factor <= kRegularizationStop * (1.0 + 1e-9);
         factor *= 10.0) {
      lambda_ = factor * base;
      if (lambda_ <= 0.0) break;
      RealMat shifted = c;
      shifted.diagonal().array() += lambda_;
      if (try_factor(shifted)) return;
    }
    Eigen::SelfAdjointEigenSolver<RealMat> eig(c, Eigen::EigenvaluesOnly);
    const double min_eig = m > 0 ? eig.eigenvalues().minCoeff() : 0.0;
    throw SingularCovarianceError(
        "observation covariance not factorable after regularization (smallest eigenvalue " +
            std::to_string(min_eig) + ")",
        min_eig);
  }

  double lambda() const noexcept { return lambda_; }

  template <typename Rhs>
  auto solve(const Eigen::MatrixBase<Rhs>& rhs) const {
    return llt_.solve(rhs);
  }

  /// Solves against a complex right-hand side by splitting it into real and
  /// imaginary parts; the factor itself stays real.
  Mat<Complex> solve_complex(const Mat<Complex>& rhs) const {
    const RealMat re = llt_.solve(rhs.real());
    const RealMat im = llt_.solve(rhs.imag());
    Mat<Complex> out(rhs.rows(), rhs.cols());
    out.real() = re;
    out.imag() = im;
    return out;
  }

  template <FieldScalar S>
  Mat<S> solve_field(const Mat<S>& rhs) const {
    if constexpr (is_complex_v<S>) {
      return solve_complex(rhs);
    } else {
      return llt_.solve(rhs);
    }
  }

 private:
  // A pivot at round-off level means the matrix is singular in working
  // precision even when LLT itself reports success.
  bool try_factor(const RealMat& c) {
    llt_.compute(c);
    if (llt_.info() != Eigen::Success) return false;
    if (c.rows() == 0) return true;
    const double floor = static_cast<double>(c.rows()) * std::numeric_limits<double>::epsilon() *
                         c.diagonal().cwiseAbs().maxCoeff();
    const RealVec pivots = RealMat(llt_.matrixL()).diagonal().cwiseAbs2();
    return pivots.minCoeff() > floor;
  }

  Eigen::LLT<RealMat> llt_;
  double lambda_ = 0.0;
};

}  // namespace phaselin
