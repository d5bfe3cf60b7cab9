#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phaselin/harness.hpp"
#include "phaselin/io.hpp"

namespace phaselin {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

namespace cli_detail {

struct GenArgs {
  std::string field = "complex";
  int n = 16;
  int m = 64;
  std::uint64_t seed = 1;
  double gamma = 2.0;
  double signal_noise_var = 0.0;
  double meas_noise_var = 0.0;
  std::string out_dir = ".";
};

struct SolveArgs {
  std::string method = "phaselin-iterative";
  std::string a_path;
  std::string y_path;
  std::string x0_path;
  std::string truth_path;
  std::string out_path;
  std::size_t t_max = 15;
  double beta = 1.0;
  double signal_noise_var = 0.0;
  double meas_noise_var = 1e-6;
  std::uint64_t seed = 1;
  int max_iters = 1000;
};

struct SweepArgs {
  std::string config;
  std::string output;
};

struct ValidateArgs {
  std::uint64_t seed = 1;
  int instances = 10;
  std::size_t samples = 1000000;
  int max_n = 4;
  int max_m = 8;
  bool zero_prior = false;
  std::string mutation = "none";
  std::string out_path;
};

struct MseArgs {
  std::string field = "complex";
  int n = 4;
  int m = 16;
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
  bool meas_noise = false;
  bool signal_noise = false;
  double tolerance = 0.02;
};

template <FieldScalar S>
void write_vector_file(const std::string& path, const Vec<S>& v) {
  write_matrix_file<S>(path, Mat<S>(v));
}

inline RealVec read_real_vector(const std::string& path) {
  const AnyMatrix m = read_matrix_file(path);
  require_same_field(ScalarField::kReal, m.field, "observation file " + path);
  detail::require(m.cols() == 1, ErrorCode::kDimensionMismatch, path + " is not a column vector");
  return m.real.col(0);
}

template <FieldScalar S>
Vec<S> read_vector(const std::string& path, const char* what) {
  const AnyMatrix m = read_matrix_file(path);
  require_same_field(field_of<S>, m.field, std::string(what) + " file " + path);
  detail::require(m.cols() == 1, ErrorCode::kDimensionMismatch, path + " is not a column vector");
  return m.as<S>().col(0);
}

template <FieldScalar S>
int run_gen(const GenArgs& args, std::ostream& out) {
  const RandomStream root(args.seed);
  RandomStream a_rng = root.split(0);
  RandomStream x_rng = root.split(1);
  RandomStream y_rng = root.split(2);
  const MeasurementMatrix<S> a = make_gaussian_matrix<S>(args.m, args.n, a_rng);
  const Vec<S> x = x_rng.standard_vector<S>(args.n) * std::sqrt(args.gamma);
  const NoiseSpec<S> noise = NoiseSpec<S>::isotropic(args.m, args.signal_noise_var, args.meas_noise_var);
  const RealVec y = measure<S>(a, x, noise, y_rng);
  std::filesystem::create_directories(args.out_dir);
  const std::filesystem::path dir(args.out_dir);
  write_matrix_file<S>((dir / "A.csv").string(), a.matrix());
  write_vector_file<S>((dir / "x.csv").string(), x);
  write_vector_file<double>((dir / "y.csv").string(), y);
  out << "wrote " << (dir / "A.csv").string() << ", x.csv, y.csv (" << to_string(field_of<S>)
      << ", M=" << args.m << ", N=" << args.n << ")\n";
  return kExitOk;
}

template <FieldScalar S>
int run_solve(const SolveArgs& args, const AnyMatrix& a_file, std::ostream& out) {
  const MeasurementMatrix<S> a(a_file.as<S>());
  const RealVec y = read_real_vector(args.y_path);
  detail::require(y.size() == a.rows(), ErrorCode::kDimensionMismatch,
                  "y has " + std::to_string(y.size()) + " entries, A has " + std::to_string(a.rows()) + " rows");
  const Method method = parse_method(args.method);
  NoiseSpec<S> noise = NoiseSpec<S>::isotropic(a.rows(), args.signal_noise_var, args.meas_noise_var);

  Vec<S> start;
  if (!args.x0_path.empty()) {
    start = read_vector<S>(args.x0_path, "initial guess");
  } else {
    RandomStream rng(args.seed);
    SpectralOptions sopts;
    sopts.power_iter_max = MethodSettings{}.power_iter_max;
    start = spectral_initializer<S>(a, y, sopts, rng);
  }
  MethodSettings settings;
  settings.t_max = args.t_max;
  settings.beta = args.beta;
  settings.baseline.max_iters = args.max_iters;
  const MethodOutcome<S> res = run_method<S>(method, a, y, noise, start, settings);

  if (!args.out_path.empty()) write_vector_file<S>(args.out_path, res.estimate);
  out << "method " << args.method << " iterations " << res.iterations;
  if (res.predicted_mse) out << " predicted_mse " << format_double(*res.predicted_mse);
  if (!args.truth_path.empty()) {
    const Vec<S> truth = read_vector<S>(args.truth_path, "ground truth");
    out << " nmse " << format_double(n_mse<S>(truth, res.estimate).nmse);
  }
  out << '\n';
  if (args.out_path.empty()) write_matrix<S>(out, Mat<S>(res.estimate));
  return kExitOk;
}

inline std::string summary_path_for(const std::string& output) {
  std::filesystem::path p(output);
  const std::string stem = p.stem().string();
  return (p.parent_path() / (stem + "_summary.csv")).string();
}

inline int run_sweep_cmd(const SweepArgs& args, std::ostream& out) {
  if (!std::filesystem::exists(args.config)) {
    throw Error(ErrorCode::kConfig, "config file '" + args.config + "' does not exist");
  }
  ExperimentConfig cfg = ExperimentConfig::from_config(KeyValueConfig::parse_file(args.config));
  if (!args.output.empty()) cfg.output = args.output;
  const SweepResult result = run_sweep(cfg);
  if (cfg.output.empty()) {
    write_records_csv(out, result.records);
  } else {
    std::ofstream f(cfg.output);
    if (!f) throw Error(ErrorCode::kIo, "cannot write '" + cfg.output + "'");
    write_records_csv(f, result.records);
    std::ofstream s(summary_path_for(cfg.output));
    if (!s) throw Error(ErrorCode::kIo, "cannot write summary for '" + cfg.output + "'");
    write_summary_csv(s, result.summary);
  }
  write_summary_csv(out, result.summary);
  return kExitOk;
}

inline int run_validate_cmd(const ValidateArgs& args, std::ostream& out) {
  ValidationConfig cfg;
  cfg.seed = args.seed;
  cfg.instances_per_field = args.instances;
  cfg.samples = args.samples;
  cfg.max_n = args.max_n;
  cfg.max_m = args.max_m;
  cfg.zero_prior = args.zero_prior;
  if (args.mutation == "drop-real-factor") {
    cfg.mutation = Mutation::kDropRealCrossCovFactor;
  } else if (args.mutation != "none") {
    throw Error(ErrorCode::kInvalidArgument, "unknown mutation '" + args.mutation + "'");
  }
  const ValidationReport report = validate_moments(cfg);
  if (!args.out_path.empty()) {
    std::ofstream f(args.out_path);
    if (!f) throw Error(ErrorCode::kIo, "cannot write '" + args.out_path + "'");
    write_validation_csv(f, report);
  }
  write_validation_csv(out, report);
  for (const char* q : {"y_mean", "cross_cov", "obs_cov"}) {
    out << "max |z| " << q << " = " << format_double(report.max_z(q)) << '\n';
  }
  out << (report.passed() ? "PASS" : "FAIL") << " (threshold " << format_double(cfg.threshold)
      << " standard errors)\n";
  return report.passed() ? kExitOk : kExitFailure;
}

inline int run_mse_cmd(const MseArgs& args, std::ostream& out) {
  MseCheckConfig cfg;
  cfg.field = parse_field(args.field);
  cfg.n = args.n;
  cfg.m = args.m;
  cfg.trials = args.trials;
  cfg.seed = args.seed;
  cfg.meas_noise = args.meas_noise;
  cfg.signal_noise = args.signal_noise;
  cfg.tolerance = args.tolerance;
  const MseCheckResult r = mse_check(cfg);
  out << "predicted_mse " << format_double(r.predicted) << '\n'
      << "empirical_mse " << format_double(r.empirical) << " +- " << format_double(r.std_error) << '\n'
      << "relative_gap " << format_double(r.relative_gap) << " (tolerance " << format_double(cfg.tolerance)
      << ")\n"
      << "regularization " << format_double(r.regularization) << '\n'
      << (r.passed ? "PASS" : "FAIL") << '\n';
  return r.passed ? kExitOk : kExitFailure;
}

inline bool is_usage_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kIo:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kFieldMismatch:
    case ErrorCode::kDimensionMismatch:
      return true;
    default:
      return false;
  }
}

}  // namespace cli_detail

/// Entry point of the `phaselin` command. Returns 0 on success, 1 when a
/// check fails or a solver errors, 2 on usage errors.
inline int cli_entry(int argc, const char* const* argv, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"PhaseLin phase retrieval toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic problem (A.csv, x.csv, y.csv)");
  gen_cmd->add_option("--field", gen.field, "real or complex")->check(CLI::IsMember({"real", "complex"}));
  gen_cmd->add_option("--n", gen.n, "Signal dimension")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--m", gen.m, "Number of measurements")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Master seed");
  gen_cmd->add_option("--gamma", gen.gamma, "Signal variance")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--signal-noise-var", gen.signal_noise_var)->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--meas-noise-var", gen.meas_noise_var)->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--out-dir", gen.out_dir, "Output directory");

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Run one method on problem files");
  solve_cmd->add_option("--method", solve.method, "spectral, phaselin, phaselin-iterative, gs, fienup, wf");
  solve_cmd->add_option("--A", solve.a_path, "Measurement matrix file")->required();
  solve_cmd->add_option("--y", solve.y_path, "Observation file")->required();
  solve_cmd->add_option("--x0", solve.x0_path, "Initial guess file (default: spectral)");
  solve_cmd->add_option("--truth", solve.truth_path, "Ground truth for N-MSE reporting");
  solve_cmd->add_option("--out", solve.out_path, "Estimate output file (default: stdout)");
  solve_cmd->add_option("--t-max", solve.t_max, "Iterative PhaseLin iterations");
  solve_cmd->add_option("--beta", solve.beta, "Error covariance scale")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--signal-noise-var", solve.signal_noise_var)->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--meas-noise-var", solve.meas_noise_var)->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--seed", solve.seed, "Seed of the spectral start");
  solve_cmd->add_option("--max-iters", solve.max_iters, "Baseline iteration cap")->check(CLI::PositiveNumber);

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run an oversampling sweep from a config file");
  sweep_cmd->add_option("--config", sweep.config, "key = value config file")->required();
  sweep_cmd->add_option("--output", sweep.output, "Override the config's output path");

  ValidateArgs validate;
  auto* validate_cmd = app.add_subcommand("validate", "Monte-Carlo check of the moment formulas");
  validate_cmd->add_option("--seed", validate.seed);
  validate_cmd->add_option("--instances", validate.instances, "Instances per field")->check(CLI::PositiveNumber);
  validate_cmd->add_option("--samples", validate.samples)->check(CLI::Range(2ul, 1000000000ul));
  validate_cmd->add_option("--max-n", validate.max_n)->check(CLI::PositiveNumber);
  validate_cmd->add_option("--max-m", validate.max_m)->check(CLI::PositiveNumber);
  validate_cmd->add_flag("--zero-prior", validate.zero_prior, "Use a zero prior mean");
  validate_cmd->add_option("--mutation", validate.mutation, "none or drop-real-factor");
  validate_cmd->add_option("--out", validate.out_path, "Report CSV path");

  MseArgs mse;
  auto* mse_cmd = app.add_subcommand("mse-check", "Compare predicted and empirical PhaseLin MSE");
  mse_cmd->add_option("--field", mse.field)->check(CLI::IsMember({"real", "complex"}));
  mse_cmd->add_option("--n", mse.n)->check(CLI::PositiveNumber);
  mse_cmd->add_option("--m", mse.m)->check(CLI::PositiveNumber);
  mse_cmd->add_option("--trials", mse.trials)->check(CLI::Range(2ul, 1000000000ul));
  mse_cmd->add_option("--seed", mse.seed);
  mse_cmd->add_flag("--meas-noise", mse.meas_noise, "Add measurement noise");
  mse_cmd->add_flag("--signal-noise", mse.signal_noise, "Add signal noise");
  mse_cmd->add_option("--tolerance", mse.tolerance)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) {
      return parse_field(gen.field) == ScalarField::kReal ? run_gen<double>(gen, out)
                                                          : run_gen<Complex>(gen, out);
    }
    if (*solve_cmd) {
      const AnyMatrix a = read_matrix_file(solve.a_path);
      return a.field == ScalarField::kReal ? run_solve<double>(solve, a, out)
                                           : run_solve<Complex>(solve, a, out);
    }
    if (*sweep_cmd) return run_sweep_cmd(sweep, out);
    if (*validate_cmd) return run_validate_cmd(validate, out);
    if (*mse_cmd) return run_mse_cmd(mse, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_usage_error(e.code()) ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace phaselin
