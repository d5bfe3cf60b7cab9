#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "phaselin/baselines.hpp"
#include "phaselin/errors.hpp"
#include "phaselin/estimator.hpp"
#include "phaselin/field.hpp"
#include "phaselin/io.hpp"
#include "phaselin/iterative.hpp"
#include "phaselin/metrics.hpp"
#include "phaselin/model.hpp"
#include "phaselin/parallel.hpp"
#include "phaselin/random.hpp"
#include "phaselin/spectral.hpp"

namespace phaselin {

// ---------------------------------------------------------------------------
// Methods

enum class Method { kSpectral, kPhaseLin, kPhaseLinIterative, kGs, kFienup, kWf };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::kSpectral: return "spectral";
    case Method::kPhaseLin: return "phaselin";
    case Method::kPhaseLinIterative: return "phaselin-iterative";
    case Method::kGs: return "gs";
    case Method::kFienup: return "fienup";
    case Method::kWf: return "wf";
  }
  return "unknown";
}

inline Method parse_method(std::string_view name) {
  for (Method m : {Method::kSpectral, Method::kPhaseLin, Method::kPhaseLinIterative, Method::kGs,
                   Method::kFienup, Method::kWf}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown method '" + std::string(name) + "'");
}

/// Knobs shared by every method run from the harness.
struct MethodSettings {
  std::size_t t_max = 15;
  double beta = 1.0;
  BaselineOptions baseline;
  /// Power-iteration budget of the spectral start. Gaussian spectral
  /// matrices at low oversampling often have a leading eigenvalue gap under
  /// 2%, which needs several thousand iterations.
  int power_iter_max = 20000;
};

template <FieldScalar S>
struct MethodOutcome {
  Vec<S> estimate;
  std::optional<double> predicted_mse;
  int iterations = 0;
  bool regularized = false;
};

/// Runs one method from a common starting point. The spectral "method"
/// returns the starting point itself.
template <FieldScalar S>
MethodOutcome<S> run_method(Method method, const MeasurementMatrix<S>& a, const RealVec& y,
                            const NoiseSpec<S>& noise, const Vec<S>& start,
                            const MethodSettings& settings) {
  MethodOutcome<S> out;
  switch (method) {
    case Method::kSpectral:
      out.estimate = start;
      break;
    case Method::kPhaseLin:
    case Method::kPhaseLinIterative: {
      IterativeOptions<S> opts;
      opts.t_max = method == Method::kPhaseLin ? 0 : settings.t_max;
      opts.error_cov_policy = FixedScaledIdentity{settings.beta};
      auto res = iterative_phaselin<S>(a, y, noise, start, opts);
      out.estimate = std::move(res.estimate);
      out.predicted_mse = res.trace.back().predicted_mse;
      out.iterations = static_cast<int>(res.trace.size());
      out.regularized = std::any_of(res.trace.begin(), res.trace.end(),
                                    [](const IterationRecord& r) { return r.regularization > 0.0; });
      break;
    }
    case Method::kGs:
    case Method::kFienup:
    case Method::kWf: {
      BaselineResult<S> res;
      if (method == Method::kGs) {
        res = gerchberg_saxton<S>(a, y, start, settings.baseline);
      } else if (method == Method::kFienup) {
        res = fienup<S>(a, y, start, settings.baseline);
      } else {
        res = wirtinger_flow<S>(a, y, start, settings.baseline);
      }
      out.estimate = std::move(res.estimate);
      out.iterations = res.iterations;
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

struct ExperimentConfig {
  ScalarField field = ScalarField::kComplex;
  int n = 64;
  std::vector<double> ratios{2, 3, 4, 6};
  std::vector<Method> methods{Method::kSpectral, Method::kPhaseLinIterative, Method::kGs,
                              Method::kFienup, Method::kWf};
  int trials = 10;
  MethodSettings settings;
  /// C_nz = signal_noise_var I, C_ny = meas_noise_var I, n^y mean = meas_noise_mean 1.
  double signal_noise_var = 0.0;
  double meas_noise_var = 1e-6;
  double meas_noise_mean = 0.0;
  /// x ~ (C)N(0, gamma I).
  double gamma = 2.0;
  std::uint64_t seed = 1;
  std::string output;
  /// Off by default so that result files are byte-reproducible.
  bool record_wall_time = false;

  int m_for(double ratio) const { return static_cast<int>(std::lround(ratio * n)); }

  void validate() const {
    detail::require(n >= 1, ErrorCode::kConfig, "n must be >= 1");
    detail::require(trials >= 1, ErrorCode::kConfig, "trials must be >= 1");
    detail::require(!ratios.empty(), ErrorCode::kConfig, "ratios must not be empty");
    detail::require(!methods.empty(), ErrorCode::kConfig, "methods must not be empty");
    for (double r : ratios) {
      detail::require(std::isfinite(r) && m_for(r) >= 1, ErrorCode::kConfig,
                      "ratio " + format_double(r) + " gives fewer than one measurement");
    }
    detail::require(gamma > 0.0, ErrorCode::kConfig, "gamma must be > 0");
    detail::require(signal_noise_var >= 0.0 && meas_noise_var >= 0.0, ErrorCode::kConfig,
                    "noise variances must be >= 0");
    settings.baseline.validate();
    detail::require(settings.beta > 0.0, ErrorCode::kConfig, "beta must be > 0");
    detail::require(settings.power_iter_max >= 1, ErrorCode::kConfig, "power_iter_max must be >= 1");
  }

  /// Keys: field, n, ratios, methods, trials, t_max, beta, signal_noise_var,
  /// meas_noise_var, meas_noise_mean, gamma, seed, output, record_wall_time,
  /// max_iters, tol, fienup_beta, wf_step, power_iter_max.
  static ExperimentConfig from_config(const KeyValueConfig& kv) {
    static const std::vector<std::string> kKnown{
        "field", "n", "ratios", "methods", "trials", "t_max", "beta", "signal_noise_var",
        "meas_noise_var", "meas_noise_mean", "gamma", "seed", "output", "record_wall_time",
        "max_iters", "tol", "fienup_beta", "wf_step", "power_iter_max"};
    for (const auto& [key, entry] : kv.entries()) {
      if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end()) {
        throw kv.error(entry.line, "unknown key '" + key + "'");
      }
    }
    ExperimentConfig c;
    try {
      c.field = parse_field(kv.get_string("field", "complex"));
    } catch (const Error&) {
      throw kv.error_for("field", "expected real or complex");
    }
    c.n = static_cast<int>(kv.get_int("n", c.n));
    c.ratios = kv.get_double_list("ratios", c.ratios);
    if (kv.has("methods")) {
      c.methods.clear();
      for (const auto& name : kv.get_list("methods", {})) {
        try {
          c.methods.push_back(parse_method(name));
        } catch (const Error&) {
          throw kv.error_for("methods", "unknown method '" + name + "'");
        }
      }
    }
    c.trials = static_cast<int>(kv.get_int("trials", c.trials));
    const long t_max = kv.get_int("t_max", static_cast<long>(c.settings.t_max));
    if (t_max < 0) throw kv.error_for("t_max", "must be >= 0");
    c.settings.t_max = static_cast<std::size_t>(t_max);
    c.settings.beta = kv.get_double("beta", c.settings.beta);
    c.signal_noise_var = kv.get_double("signal_noise_var", c.signal_noise_var);
    c.meas_noise_var = kv.get_double("meas_noise_var", c.meas_noise_var);
    c.meas_noise_mean = kv.get_double("meas_noise_mean", c.meas_noise_mean);
    c.gamma = kv.get_double("gamma", c.gamma);
    const long seed = kv.get_int("seed", static_cast<long>(c.seed));
    if (seed < 0) throw kv.error_for("seed", "must be >= 0");
    c.seed = static_cast<std::uint64_t>(seed);
    c.output = kv.get_string("output", c.output);
    c.record_wall_time = kv.get_bool("record_wall_time", c.record_wall_time);
    c.settings.baseline.max_iters = static_cast<int>(kv.get_int("max_iters", c.settings.baseline.max_iters));
    c.settings.baseline.tol = kv.get_double("tol", c.settings.baseline.tol);
    c.settings.baseline.fienup_beta = kv.get_double("fienup_beta", c.settings.baseline.fienup_beta);
    if (kv.has("wf_step")) c.settings.baseline.step_size = kv.get_double("wf_step", 0.0);
    c.settings.power_iter_max =
        static_cast<int>(kv.get_int("power_iter_max", c.settings.power_iter_max));
    auto check = [&](bool ok, const char* key, const char* msg) {
      if (!ok) throw kv.error_for(key, msg);
    };
    check(c.n >= 1, "n", "must be >= 1");
    check(c.trials >= 1, "trials", "must be >= 1");
    check(!c.ratios.empty(), "ratios", "must not be empty");
    for (double r : c.ratios) check(std::isfinite(r) && c.m_for(r) >= 1, "ratios", "every ratio must give M >= 1");
    check(c.gamma > 0.0, "gamma", "must be > 0");
    check(c.settings.beta > 0.0, "beta", "must be > 0");
    check(c.signal_noise_var >= 0.0, "signal_noise_var", "must be >= 0");
    check(c.meas_noise_var >= 0.0, "meas_noise_var", "must be >= 0");
    check(c.settings.baseline.max_iters >= 1, "max_iters", "must be >= 1");
    check(c.settings.baseline.tol >= 0.0, "tol", "must be >= 0");
    check(!c.settings.baseline.step_size || *c.settings.baseline.step_size > 0.0, "wf_step", "must be > 0");
    check(c.settings.power_iter_max >= 1, "power_iter_max", "must be >= 1");
    try {
      c.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, std::string("invalid sweep config: ") + e.what());
    }
    return c;
  }
};

struct ResultRecord {
  std::string method;
  ScalarField field = ScalarField::kComplex;
  int n = 0;
  int m = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double nmse = 1.0;
  std::optional<double> predicted_mse;
  int iterations = 0;
  double wall_ms = 0.0;
  bool regularized = false;
  bool error = false;
  double signal_noise_var = 0.0;
  double meas_noise_var = 0.0;
  double meas_noise_mean = 0.0;
};

struct SummaryRow {
  std::string method;
  double ratio = 0.0;
  int m = 0;
  double median_nmse = 1.0;
  int trials = 0;
  int failures = 0;
};

struct SweepResult {
  std::vector<ResultRecord> records;
  std::vector<SummaryRow> summary;

  /// Median N-MSE for (method, ratio); throws if the cell was not run.
  double median(std::string_view method, double ratio) const {
    for (const auto& row : summary) {
      if (row.method == method && row.ratio == ratio) return row.median_nmse;
    }
    throw Error(ErrorCode::kInvalidArgument, "no summary row for " + std::string(method));
  }
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

inline constexpr const char* kRecordCsvHeader =
    "method,field,N,M,trial,seed,nmse,predicted_mse,iterations,wall_ms,regularized,error,"
    "signal_noise_var,meas_noise_var,meas_noise_mean";

inline void write_records_csv(std::ostream& out, const std::vector<ResultRecord>& records) {
  out << kRecordCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.method << ',' << to_string(r.field) << ',' << r.n << ',' << r.m << ',' << r.trial << ','
        << r.seed << ',' << format_double(r.nmse) << ','
        << (r.predicted_mse ? format_double(*r.predicted_mse) : std::string()) << ','
        << r.iterations << ',' << format_double(r.wall_ms) << ',' << (r.regularized ? 1 : 0) << ','
        << (r.error ? 1 : 0) << ',' << format_double(r.signal_noise_var) << ','
        << format_double(r.meas_noise_var) << ',' << format_double(r.meas_noise_mean) << '\n';
  }
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "method,ratio,M,median_nmse,trials,failures\n";
  for (const auto& r : rows) {
    out << r.method << ',' << format_double(r.ratio) << ',' << r.m << ','
        << format_double(r.median_nmse) << ',' << r.trials << ',' << r.failures << '\n';
  }
}

namespace detail {

template <FieldScalar S>
std::vector<ResultRecord> run_sweep_trial(const ExperimentConfig& cfg, std::size_t cell,
                                          int trial) {
  using Clock = std::chrono::steady_clock;
  const double ratio = cfg.ratios[cell];
  const int m = cfg.m_for(ratio);
  const RandomStream trial_rng = RandomStream(cfg.seed).split(cell).split(static_cast<std::uint64_t>(trial));

  std::vector<ResultRecord> out;
  out.reserve(cfg.methods.size());
  for (Method method : cfg.methods) {
    ResultRecord r;
    r.method = std::string(to_string(method));
    r.field = field_of<S>;
    r.n = cfg.n;
    r.m = m;
    r.trial = trial;
    r.seed = trial_rng.seed();
    r.signal_noise_var = cfg.signal_noise_var;
    r.meas_noise_var = cfg.meas_noise_var;
    r.meas_noise_mean = cfg.meas_noise_mean;
    out.push_back(r);
  }

  RandomStream a_rng = trial_rng.split(0);
  RandomStream x_rng = trial_rng.split(1);
  RandomStream y_rng = trial_rng.split(2);
  RandomStream init_rng = trial_rng.split(3);
  const MeasurementMatrix<S> a = make_gaussian_matrix<S>(m, cfg.n, a_rng);
  const Vec<S> x = x_rng.standard_vector<S>(cfg.n) * std::sqrt(cfg.gamma);
  NoiseSpec<S> noise = NoiseSpec<S>::isotropic(m, cfg.signal_noise_var, cfg.meas_noise_var);
  noise.meas_mean.setConstant(cfg.meas_noise_mean);
  const RealVec y = measure<S>(a, x, noise, y_rng);

  Vec<S> start;
  try {
    SpectralOptions sopts;
    sopts.meas_noise_mean = noise.meas_mean;
    sopts.power_iter_max = cfg.settings.power_iter_max;
    start = spectral_initializer<S>(a, y, sopts, init_rng);
  } catch (const Error&) {
    for (auto& r : out) r.error = true;
    return out;
  }

  for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
    ResultRecord& r = out[k];
    const auto t0 = Clock::now();
    try {
      const MethodOutcome<S> res = run_method<S>(cfg.methods[k], a, y, noise, start, cfg.settings);
      r.nmse = n_mse<S>(x, res.estimate).nmse;
      r.predicted_mse = res.predicted_mse;
      r.iterations = res.iterations;
      r.regularized = res.regularized;
    } catch (const Error&) {
      r.nmse = 1.0;
      r.error = true;
    }
    if (cfg.record_wall_time) {
      r.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    }
  }
  return out;
}

}  // namespace detail

/// Oversampling sweep: for every ratio and trial, draws a fresh Gaussian A
/// and signal, measures, computes one spectral start, and runs every method
/// from that start. Per-trial failures are recorded with nmse = 1.
inline SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t cells = cfg.ratios.size();
  const std::size_t trials = static_cast<std::size_t>(cfg.trials);
  std::vector<std::vector<ResultRecord>> slots(cells * trials);
  parallel_for(slots.size(), [&](std::size_t idx) {
    const std::size_t cell = idx / trials;
    const int trial = static_cast<int>(idx % trials);
    slots[idx] = cfg.field == ScalarField::kReal
                     ? detail::run_sweep_trial<double>(cfg, cell, trial)
                     : detail::run_sweep_trial<Complex>(cfg, cell, trial);
  });

  SweepResult result;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
      SummaryRow row;
      row.method = std::string(to_string(cfg.methods[k]));
      row.ratio = cfg.ratios[cell];
      row.m = cfg.m_for(row.ratio);
      std::vector<double> values;
      for (std::size_t t = 0; t < trials; ++t) {
        const ResultRecord& r = slots[cell * trials + t][k];
        values.push_back(r.nmse);
        row.failures += r.error ? 1 : 0;
      }
      row.trials = static_cast<int>(values.size());
      row.median_nmse = median_of(std::move(values));
      result.summary.push_back(row);
    }
  }
  for (auto& slot : slots)
    for (auto& r : slot) result.records.push_back(std::move(r));
  return result;
}

// ---------------------------------------------------------------------------
// Random instances shared by the validation commands

struct InstanceOptions {
  bool zero_prior_mean = false;
  bool signal_noise = true;
  bool meas_noise = true;
  double error_scale = 0.3;
};

template <FieldScalar S>
struct Instance {
  MeasurementMatrix<S> a;
  SignalPrior<S> prior;
  NoiseSpec<S> noise;
};

/// Random PSD matrix scale * (G G^H / n + floor I).
template <FieldScalar S>
Mat<S> random_psd(Eigen::Index n, double scale, double floor, RandomStream& rng) {
  Mat<S> g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.standard<S>();
  Mat<S> c = g * g.adjoint() / static_cast<double>(n);
  c.diagonal().array() += floor;
  c = (c + c.adjoint()).eval() / 2.0;
  return c * scale;
}

template <FieldScalar S>
Instance<S> random_instance(Eigen::Index n, Eigen::Index m, RandomStream& rng,
                            const InstanceOptions& opts = {}) {
  MeasurementMatrix<S> a = make_gaussian_matrix<S>(m, n, rng);
  Vec<S> mean = opts.zero_prior_mean ? Vec<S>::Zero(n) : rng.standard_vector<S>(n);
  Mat<S> error_cov = random_psd<S>(n, opts.error_scale, 0.1, rng);
  NoiseSpec<S> noise = NoiseSpec<S>::none(m);
  if (opts.signal_noise) noise.signal_cov = random_psd<S>(m, 0.05, 0.1, rng);
  if (opts.meas_noise) {
    noise.meas_mean = rng.normal_vector(m) * 0.1;
    noise.meas_cov = random_psd<double>(m, 0.05, 0.1, rng);
  }
  return {std::move(a), {std::move(mean), std::move(error_cov)}, std::move(noise)};
}

// ---------------------------------------------------------------------------
// Moment validation

enum class Mutation { kNone, kDropRealCrossCovFactor };

struct ValidationConfig {
  std::uint64_t seed = 1;
  int instances_per_field = 10;
  std::size_t samples = 1000000;
  int max_n = 4;
  int max_m = 8;
  bool zero_prior = false;
  double threshold = 3.0;
  std::vector<ScalarField> fields{ScalarField::kReal, ScalarField::kComplex};
  Mutation mutation = Mutation::kNone;
};

struct ValidationEntry {
  ScalarField field = ScalarField::kReal;
  int instance = 0;
  int n = 0;
  int m = 0;
  std::string quantity;
  double max_z = 0.0;
  std::size_t checked = 0;
  bool passed = true;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;

  bool passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
  }

  double max_z(std::string_view quantity) const {
    double worst = 0.0;
    for (const auto& e : entries)
      if (e.quantity == quantity) worst = std::max(worst, e.max_z);
    return worst;
  }
};

inline void write_validation_csv(std::ostream& out, const ValidationReport& report) {
  out << "field,instance,N,M,quantity,max_abs_z,checked,passed\n";
  for (const auto& e : report.entries) {
    out << to_string(e.field) << ',' << e.instance << ',' << e.n << ',' << e.m << ',' << e.quantity
        << ',' << format_double(e.max_z) << ',' << e.checked << ',' << (e.passed ? 1 : 0) << '\n';
  }
}

/// Sample moments of (x, y) with per-entry standard errors.
template <FieldScalar S>
struct SampleMoments {
  RealVec y_mean, y_mean_se;
  Mat<S> cross_cov;
  RealMat cross_cov_se_re, cross_cov_se_im;
  RealMat obs_cov, obs_cov_se;
};

namespace detail {

template <FieldScalar S>
struct MomentAccumulator {
  RealVec sy, sy2;
  Vec<S> sx;
  RealMat syy, qyy;
  Mat<S> sxy;
  RealMat qxy_re, qxy_im;
  std::size_t count = 0;

  MomentAccumulator(Eigen::Index n, Eigen::Index m)
      : sy(RealVec::Zero(m)), sy2(RealVec::Zero(m)), sx(Vec<S>::Zero(n)), syy(RealMat::Zero(m, m)),
        qyy(RealMat::Zero(m, m)), sxy(Mat<S>::Zero(n, m)), qxy_re(RealMat::Zero(n, m)),
        qxy_im(RealMat::Zero(n, m)) {}

  void add(const Vec<S>& dx, const RealVec& dy) {
    sy += dy;
    sy2 += dy.cwiseAbs2();
    sx += dx;
    const RealMat pyy = dy * dy.transpose();
    syy += pyy;
    qyy += pyy.cwiseAbs2();
    const Mat<S> pxy = dx * dy.transpose().template cast<S>();
    sxy += pxy;
    if constexpr (is_complex_v<S>) {
      qxy_re += pxy.real().cwiseAbs2();
      qxy_im += pxy.imag().cwiseAbs2();
    } else {
      qxy_re += pxy.cwiseAbs2();
    }
    ++count;
  }

  void merge(const MomentAccumulator& o) {
    sy += o.sy;
    sy2 += o.sy2;
    sx += o.sx;
    syy += o.syy;
    qyy += o.qyy;
    sxy += o.sxy;
    qxy_re += o.qxy_re;
    qxy_im += o.qxy_im;
    count += o.count;
  }
};

}  // namespace detail

/// Brute-force sample moments of (x, y) from `samples` draws. Products are
/// accumulated about a pilot shift; standard errors come from the sample
/// variance of each product.
template <FieldScalar S>
SampleMoments<S> sample_moments(const ProblemSampler<S>& sampler, std::size_t samples,
                                std::uint64_t seed) {
  const Eigen::Index n = sampler.prior().mean.size();
  const Eigen::Index m = sampler.noise().size();
  const RandomStream root(seed);

  RealVec shift_y = RealVec::Zero(m);
  {
    RandomStream pilot = root.split(~0ULL);
    constexpr int kPilot = 2000;
    for (int i = 0; i < kPilot; ++i) shift_y += sampler.draw(pilot).y;
    shift_y /= kPilot;
  }
  const Vec<S>& shift_x = sampler.prior().mean;

  constexpr std::size_t kChunk = 1 << 14;
  const std::size_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<detail::MomentAccumulator<S>> parts(chunks, detail::MomentAccumulator<S>(n, m));
  parallel_for(chunks, [&](std::size_t c) {
    RandomStream rng = root.split(c);
    const std::size_t count = std::min(kChunk, samples - c * kChunk);
    for (std::size_t i = 0; i < count; ++i) {
      const ProblemDraw<S> d = sampler.draw(rng);
      parts[c].add(d.x - shift_x, d.y - shift_y);
    }
  });
  detail::MomentAccumulator<S> acc(n, m);
  for (const auto& p : parts) acc.merge(p);

  const double cnt = static_cast<double>(acc.count);
  auto se = [cnt](const auto& sum_sq, const auto& sum) {
    return ((sum_sq / cnt - (sum / cnt).cwiseAbs2()).cwiseMax(0.0) / cnt).cwiseSqrt().eval();
  };
  SampleMoments<S> out;
  const RealVec my = acc.sy / cnt;
  const Vec<S> mx = acc.sx / cnt;
  out.y_mean = shift_y + my;
  out.y_mean_se = se(acc.sy2, acc.sy);
  out.obs_cov = acc.syy / cnt - my * my.transpose();
  out.obs_cov_se = se(acc.qyy, acc.syy);
  out.cross_cov = acc.sxy / cnt - mx * my.transpose().template cast<S>();
  if constexpr (is_complex_v<S>) {
    out.cross_cov_se_re = se(acc.qxy_re, RealMat(acc.sxy.real()));
    out.cross_cov_se_im = se(acc.qxy_im, RealMat(acc.sxy.imag()));
  } else {
    out.cross_cov_se_re = se(acc.qxy_re, acc.sxy);
    out.cross_cov_se_im = RealMat::Zero(n, m);
  }
  return out;
}

namespace detail {

inline double z_score(double closed, double sample, double se) {
  const double diff = std::abs(closed - sample);
  const double floor = 1e-12 * std::max({std::abs(closed), std::abs(sample), 1.0});
  if (diff <= floor) return 0.0;
  return diff / std::max(se, floor);
}

template <FieldScalar S>
void validate_instance(const ValidationConfig& cfg, int index, RandomStream rng,
                       std::vector<ValidationEntry>& out) {
  const int n = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(cfg.max_n));
  const int m = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(cfg.max_m));
  InstanceOptions iopts;
  iopts.zero_prior_mean = cfg.zero_prior;
  const Instance<S> inst = random_instance<S>(n, m, rng, iopts);

  const PhasedMoments<S> moments = phased_moments(inst.a, inst.prior, inst.noise.signal_cov);
  const RealVec y_mean = observation_mean(moments, inst.noise.meas_mean);
  Mat<S> cross = cross_covariance(inst.a, inst.prior, moments);
  if (cfg.mutation == Mutation::kDropRealCrossCovFactor && !is_complex_v<S>) cross /= 2.0;
  const RealMat obs = observation_covariance(moments, inst.noise.meas_cov);

  const ProblemSampler<S> sampler(inst.a, inst.prior, inst.noise);
  const SampleMoments<S> sm = sample_moments<S>(sampler, cfg.samples, rng.next_u64());

  auto entry = [&](const char* quantity) {
    ValidationEntry e;
    e.field = field_of<S>;
    e.instance = index;
    e.n = n;
    e.m = m;
    e.quantity = quantity;
    return e;
  };

  ValidationEntry ey = entry("y_mean");
  for (int i = 0; i < m; ++i) {
    ey.max_z = std::max(ey.max_z, z_score(y_mean(i), sm.y_mean(i), sm.y_mean_se(i)));
    ++ey.checked;
  }
  ValidationEntry exy = entry("cross_cov");
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      exy.max_z = std::max(exy.max_z, z_score(std::real(cross(i, j)), std::real(sm.cross_cov(i, j)),
                                              sm.cross_cov_se_re(i, j)));
      ++exy.checked;
      if constexpr (is_complex_v<S>) {
        exy.max_z = std::max(exy.max_z, z_score(cross(i, j).imag(), sm.cross_cov(i, j).imag(),
                                                sm.cross_cov_se_im(i, j)));
        ++exy.checked;
      }
    }
  }
  ValidationEntry ecy = entry("obs_cov");
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) {
      ecy.max_z = std::max(ecy.max_z, z_score(obs(i, j), sm.obs_cov(i, j), sm.obs_cov_se(i, j)));
      ++ecy.checked;
    }
  }
  for (ValidationEntry* e : {&ey, &exy, &ecy}) {
    e->passed = e->max_z <= cfg.threshold;
    out.push_back(*e);
  }
}

}  // namespace detail

/// Compares the closed-form y_mean, C_xy and C_y with brute-force sample
/// moments on random small instances and reports the worst deviation of each
/// quantity in standard-error units.
inline ValidationReport validate_moments(const ValidationConfig& cfg) {
  detail::require(cfg.max_n >= 1 && cfg.max_m >= 1 && cfg.samples >= 2 && cfg.instances_per_field >= 1,
                  ErrorCode::kInvalidArgument, "invalid validation config");
  ValidationReport report;
  const RandomStream root(cfg.seed);
  for (std::size_t f = 0; f < cfg.fields.size(); ++f) {
    const ScalarField field = cfg.fields[f];
    const RandomStream field_rng = root.split(field == ScalarField::kReal ? 0 : 1);
    for (int i = 0; i < cfg.instances_per_field; ++i) {
      const RandomStream rng = field_rng.split(static_cast<std::uint64_t>(i));
      if (field == ScalarField::kReal) {
        detail::validate_instance<double>(cfg, i, rng, report.entries);
      } else {
        detail::validate_instance<Complex>(cfg, i, rng, report.entries);
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Predicted vs empirical MSE

struct MseCheckConfig {
  ScalarField field = ScalarField::kComplex;
  int n = 4;
  int m = 16;
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
  bool meas_noise = false;
  bool signal_noise = false;
  double tolerance = 0.02;
};

struct MseCheckResult {
  double predicted = 0.0;
  double empirical = 0.0;
  double std_error = 0.0;
  double relative_gap = 0.0;
  double regularization = 0.0;
  bool passed = false;
};

template <FieldScalar S>
MseCheckResult mse_check_typed(const MseCheckConfig& cfg) {
  RandomStream rng = RandomStream(cfg.seed).split(field_of<S> == ScalarField::kReal ? 0 : 1);
  InstanceOptions iopts;
  iopts.meas_noise = cfg.meas_noise;
  iopts.signal_noise = cfg.signal_noise;
  const Instance<S> inst = random_instance<S>(cfg.n, cfg.m, rng, iopts);
  const PhaseLinEstimator<S> est(inst.a, inst.prior, inst.noise);
  const MseEstimate emp = empirical_mse<S>(est, inst.a, inst.prior, inst.noise, cfg.trials, rng.next_u64());
  MseCheckResult out;
  out.predicted = est.predicted_mse();
  out.empirical = emp.mse;
  out.std_error = emp.std_error;
  out.regularization = est.regularization_used();
  out.relative_gap = std::abs(emp.mse - out.predicted) / std::max(out.predicted, 1e-300);
  out.passed = out.relative_gap <= cfg.tolerance;
  return out;
}

inline MseCheckResult mse_check(const MseCheckConfig& cfg) {
  detail::require(cfg.n >= 1 && cfg.m >= 1 && cfg.trials >= 2, ErrorCode::kInvalidArgument,
                  "invalid mse-check config");
  return cfg.field == ScalarField::kReal ? mse_check_typed<double>(cfg) : mse_check_typed<Complex>(cfg);
}

}  // namespace phaselin
