#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "phaselin/errors.hpp"
#include "phaselin/estimator.hpp"
#include "phaselin/field.hpp"
#include "phaselin/model.hpp"
#include "phaselin/parallel.hpp"
#include "phaselin/random.hpp"

namespace phaselin {

template <FieldScalar S>
struct NmseResult {
  double nmse = 1.0;
  S alpha{};
};

/// min over alpha of |x - alpha x_hat|^2 / |x|^2 with the closed-form
/// minimizer alpha = x_hat^H x / |x_hat|^2. Alpha is real for real fields.
template <FieldScalar S>
NmseResult<S> n_mse(const Vec<S>& truth, const Vec<S>& estimate) {
  detail::require(truth.size() == estimate.size(), ErrorCode::kDimensionMismatch,
                  "n_mse vectors differ in length");
  const double truth_energy = truth.squaredNorm();
  detail::require(truth_energy > 0.0, ErrorCode::kUndefinedMetric, "ground truth is zero");
  NmseResult<S> out;
  const double est_energy = estimate.squaredNorm();
  if (est_energy == 0.0 || !estimate.allFinite()) {
    out.alpha = S(0);
    out.nmse = 1.0;
    return out;
  }
  out.alpha = estimate.dot(truth) / est_energy;  // dot conjugates its left operand
  out.nmse = (truth - out.alpha * estimate).squaredNorm() / truth_energy;
  out.nmse = std::min(out.nmse, 1.0);
  return out;
}

struct MseEstimate {
  double mse = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
};

/// Per-trial squared errors |x_hat - x|^2 for trial streams split from
/// `seed`. Trial t always consumes stream t, so the vector is independent of
/// the worker count.
template <FieldScalar S, typename Estimator>
std::vector<double> squared_errors(const Estimator& estimator, const ProblemSampler<S>& sampler,
                                   std::size_t trials, std::uint64_t seed) {
  std::vector<double> errors(trials, 0.0);
  const RandomStream root(seed);
  constexpr std::size_t kChunk = 1024;
  const std::size_t chunks = (trials + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t end = std::min(trials, (c + 1) * kChunk);
    for (std::size_t t = c * kChunk; t < end; ++t) {
      RandomStream rng = root.split(t);
      const ProblemDraw<S> draw = sampler.draw(rng);
      const Vec<S> xhat = estimator(draw.y);
      errors[t] = (xhat - draw.x).squaredNorm();
    }
  });
  return errors;
}

inline MseEstimate summarize_errors(const std::vector<double>& errors) {
  MseEstimate out;
  out.trials = errors.size();
  if (errors.empty()) return out;
  double sum = 0.0;
  for (double e : errors) sum += e;
  const double n = static_cast<double>(errors.size());
  out.mse = sum / n;
  if (errors.size() < 2) return out;
  double ss = 0.0;
  for (double e : errors) ss += (e - out.mse) * (e - out.mse);
  out.std_error = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

/// Monte-Carlo estimate of E|x_hat - x|^2 under the instance's Gaussian
/// model together with the standard error of the mean.
template <FieldScalar S, typename Estimator>
MseEstimate empirical_mse(const Estimator& estimator, const MeasurementMatrix<S>& a,
                          const SignalPrior<S>& prior, const NoiseSpec<S>& noise,
                          std::size_t trials, std::uint64_t seed) {
  detail::require(trials >= 2, ErrorCode::kInvalidArgument, "empirical_mse needs at least 2 trials");
  const ProblemSampler<S> sampler(a, prior, noise);
  return summarize_errors(squared_errors<S>(estimator, sampler, trials, seed));
}

template <FieldScalar S>
MseEstimate empirical_mse(const PhaseLinEstimator<S>& est, const MeasurementMatrix<S>& a,
                          const SignalPrior<S>& prior, const NoiseSpec<S>& noise,
                          std::size_t trials, std::uint64_t seed) {
  return empirical_mse<S>([&](const RealVec& y) { return est.estimate(y); }, a, prior, noise,
                          trials, seed);
}

}  // namespace phaselin
