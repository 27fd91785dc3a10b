#pragma once

// Command-line front end: `estimate`, `regress` and `simulate`.
// run_cli is kept separate from main() so tests can drive it in-process.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "slasso/csv.hpp"
#include "slasso/error.hpp"
#include "slasso/estimator.hpp"
#include "slasso/lasso.hpp"
#include "slasso/linalg.hpp"
#include "slasso/simulation.hpp"

namespace slasso::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitDegraded = 2;

namespace detail {

/// "auto" or a positive number.
inline std::optional<double> parse_lambda0(const std::string& text) {
  if (text == "auto") return std::nullopt;
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw DomainError("--lambda0 must be 'auto' or a positive number, got '" + text + "'");
  }
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("--lambda0 must be positive, got '" + text + "'");
  return v;
}

inline Symmetrization parse_sym(const std::string& s) {
  if (s == "lp") return Symmetrization::lp;
  if (s == "entrywise") return Symmetrization::entrywise;
  return Symmetrization::automatic;
}

/// Accepts covariance input that is symmetric up to rounding in the file.
inline SymMatrix to_symmetric(const Matrix& m) {
  if (!m.square()) {
    slasso::detail::throw_dims("covariance input is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                       ", expected a square matrix");
  }
  const std::size_t p = m.rows();
  const double tol = 1e-10 * std::max(1.0, max_abs(m));
  Matrix s(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    s(i, i) = m(i, i);
    for (std::size_t j = i + 1; j < p; ++j) {
      if (std::abs(m(i, j) - m(j, i)) > tol) {
        throw NotSymmetric("covariance input is not symmetric at (" + std::to_string(i + 1) + ", " +
                           std::to_string(j + 1) + ")");
      }
      s(i, j) = s(j, i) = 0.5 * (m(i, j) + m(j, i));
    }
  }
  return SymMatrix(std::move(s));
}

inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    csv::write_file(path, content);
  }
}

inline std::string fmt(double v) { return csv::format(v); }

}  // namespace detail

struct EstimateArgs {
  std::string input;
  std::string input_kind = "samples";
  bool correlation = false;
  std::string lambda0 = "auto";
  bool lambda0_theory = false;
  double a_const = 1.1;
  double eps = 0.05;
  std::size_t n = 0;
  std::string sym = "auto";
  bool center = false;
  std::string output;
  std::string diagnostics;
  unsigned threads = 0;
};

inline int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  EstimatorConfig cfg;
  cfg.symmetrization = detail::parse_sym(a.sym);
  cfg.target = a.correlation ? Target::inverse_correlation : Target::precision;
  cfg.center = a.center;
  cfg.threads = a.threads;
  const auto fixed = detail::parse_lambda0(a.lambda0);
  if (a.lambda0_theory) {
    if (fixed) throw DomainError("--lambda0-theory cannot be combined with a numeric --lambda0");
    if (!(a.a_const > 1.0)) throw DomainError("--A must be greater than 1");
    if (!(a.eps > 0.0 && a.eps < 1.0)) throw DomainError("--eps must lie in (0, 1)");
    cfg.lambda0 = Lambda0Choice::theory(a.a_const, a.eps);
  } else if (fixed) {
    cfg.lambda0 = Lambda0Choice::fixed(*fixed);
  }

  const Matrix raw = csv::read_matrix_file(a.input);
  PrecisionEstimate est;
  if (a.input_kind == "samples") {
    if (a.n != 0) throw DomainError("--n applies to covariance input only; samples give n directly");
    if (raw.rows() < 2) throw DomainError("samples input needs at least two rows");
    cfg.sample_size = raw.rows();
    est = estimate(sample_covariance(raw, cfg.center), cfg);
  } else {
    if (a.center) throw DomainError("--center applies to samples input only");
    if (!fixed && a.n == 0) {
      throw DomainError("covariance input with a data-driven lambda0 needs the sample size via --n");
    }
    cfg.sample_size = a.n;
    est = estimate(detail::to_symmetric(raw), cfg);
  }

  detail::emit(a.output, csv::to_string(est.theta_hat.matrix()), out);

  if (!a.diagnostics.empty()) {
    std::ostringstream os;
    csv::write_row(os, {"column", "sigma_hat", "lambda_final", "iterations", "kkt_residual", "converged"});
    for (std::size_t j = 0; j < est.column_fits.size(); ++j) {
      const auto& f = est.column_fits[j];
      csv::write_row(os, {std::to_string(j + 1), detail::fmt(f.sigma_hat), detail::fmt(f.lambda_final),
                          std::to_string(f.outer_iterations), detail::fmt(f.kkt_residual),
                          f.converged() ? "1" : "0"});
    }
    csv::write_file(a.diagnostics, os.str());
  }

  if (est.min_eigenvalue < 0.0) {
    err << "note: estimate is not positive definite (smallest eigenvalue " << detail::fmt(est.min_eigenvalue)
        << ")\n";
  }
  if (est.degraded()) {
    for (std::size_t j = 0; j < est.column_fits.size(); ++j) {
      const auto& f = est.column_fits[j];
      if (!f.converged()) err << "warning: column " << j + 1 << ": " << to_string(f.status) << '\n';
    }
    if (est.lp_fallback) err << "warning: LP symmetrization broke down; used the entrywise rule\n";
    return kExitDegraded;
  }
  return kExitOk;
}

struct RegressArgs {
  std::string y;
  std::string x;
  std::string lambda0 = "auto";
  std::string output;
};

inline int cmd_regress(const RegressArgs& a, std::ostream& out, std::ostream& err) {
  const std::vector<double> y = csv::read_vector_file(a.y);
  const Matrix x = csv::read_matrix_file(a.x);
  if (y.size() != x.rows()) {
    slasso::detail::throw_dims("y has " + std::to_string(y.size()) + " rows but X has " + std::to_string(x.rows()));
  }
  const auto fixed = detail::parse_lambda0(a.lambda0);
  // The augmented Gram matrix [X, y] has dimension q + 1, matching the
  // estimator's per-column problem.
  const double lambda0 = fixed ? *fixed
                               : default_lambda0(static_cast<double>(x.cols() + 1),
                                                 static_cast<double>(x.rows()), Lambda0Mode::simulation);
  const RegressionFit fit = scaled_lasso_regression(y, x, lambda0);

  std::ostringstream os;
  std::vector<std::string> beta{"beta"}, alpha{"alpha"};
  for (double b : fit.beta) beta.push_back(detail::fmt(b));
  for (double v : fit.alpha) alpha.push_back(detail::fmt(v));
  csv::write_row(os, beta);
  csv::write_row(os, alpha);
  csv::write_row(os, {"sigma_hat", detail::fmt(fit.sigma_hat)});
  csv::write_row(os, {"lambda_final", detail::fmt(fit.lambda_final)});
  csv::write_row(os, {"status", to_string(fit.status)});
  detail::emit(a.output, os.str(), out);

  for (std::size_t k : fit.zero_columns) err << "note: predictor " << k + 1 << " is all zero\n";
  if (!fit.converged()) {
    err << "warning: " << to_string(fit.status) << '\n';
    return kExitDegraded;
  }
  return kExitOk;
}

struct SimulateArgs {
  int model = 1;
  std::size_t p = 30;
  std::size_t n = 100;
  std::size_t reps = 100;
  std::uint64_t seed = 1;
  std::string sym = "auto";
  std::string lambda0 = "auto";
  bool freeze_b = false;
  bool center = false;
  bool population = false;
  std::string output;
  std::string raw;
  std::string truth;
  unsigned threads = 0;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  ModelSpec spec;
  spec.kind = a.model;
  spec.p = a.p;
  spec.validate();

  SimConfig cfg;
  cfg.n = a.n;
  cfg.reps = a.reps;
  cfg.seed = a.seed;
  cfg.freeze_b = a.freeze_b;
  cfg.population_input = a.population;
  cfg.threads = a.threads;
  cfg.estimator.symmetrization = detail::parse_sym(a.sym);
  cfg.estimator.center = a.center;
  cfg.estimator.eigen_diagnostic = false;
  if (const auto fixed = detail::parse_lambda0(a.lambda0)) cfg.estimator.lambda0 = Lambda0Choice::fixed(*fixed);
  cfg.validate();

  if (!a.truth.empty()) {
    CounterRng rng(a.seed, kModelStreamOffset);
    const TrueModel m = build_model(spec, rng);
    csv::write_file(a.truth, csv::to_string(m.theta_star.matrix()));
    if (spec.kind == 2) {
      err << "model 2 (replicate 0): delta " << detail::fmt(m.delta) << ", condition before rescaling "
          << detail::fmt(m.pre_rescale_condition) << ", draws " << m.draws << '\n';
    }
  }

  const SimReport rep = run_simulation(spec, cfg);

  std::ostringstream os;
  csv::write_row(os, {"model", "p", "n", "reps", "norm", "mean", "sd", "failures"});
  const std::pair<const char*, const NormSummary*> rows[] = {
      {"spectrum", &rep.spectrum}, {"l1", &rep.l1}, {"frobenius", &rep.frobenius}};
  for (const auto& [name, s] : rows) {
    csv::write_row(os, {std::to_string(a.model), std::to_string(a.p), std::to_string(a.n),
                        std::to_string(a.reps), name, detail::fmt(s->mean), detail::fmt(s->sd),
                        std::to_string(rep.failures)});
  }
  detail::emit(a.output, os.str(), out);

  if (!a.raw.empty()) {
    std::ostringstream rs;
    csv::write_row(rs, {"rep", "spectrum", "l1", "frobenius"});
    for (const auto& r : rep.replicates) {
      if (!r.ok) {
        csv::write_row(rs, {std::to_string(r.rep), "", "", ""});
        continue;
      }
      csv::write_row(rs, {std::to_string(r.rep), detail::fmt(r.errors.spectrum), detail::fmt(r.errors.l1),
                          detail::fmt(r.errors.frobenius)});
    }
    csv::write_file(a.raw, rs.str());
  }

  for (const auto& r : rep.replicates)
    if (!r.ok) err << "warning: replicate " << r.rep << " failed: " << r.failure << '\n';
  if (rep.degraded > 0) err << "note: " << rep.degraded << " replicate(s) had non-converged columns\n";
  err << "wall time " << rep.wall_seconds << " s\n";
  return kExitOk;
}

/// Parses argv and runs one subcommand. Exit codes: 0 success, 2 degraded
/// result, 1 error (message on `err`).
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse precision matrix estimation by the scaled Lasso", "slasso"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "slasso 1.0.0");

  auto threads_opt = [](CLI::App* sub, unsigned& target) {
    sub->add_option("--threads", target, "Worker threads (0 = all cores)")
        ->envname("SLASSO_THREADS")
        ->check(CLI::NonNegativeNumber);
  };
  const std::vector<std::string> sym_choices{"auto", "lp", "entrywise"};

  EstimateArgs ea;
  auto* est = app.add_subcommand("estimate", "Estimate a precision (or inverse correlation) matrix");
  est->add_option("--input", ea.input, "CSV of samples (rows) or a covariance matrix")->required()
      ->check(CLI::ExistingFile);
  est->add_option("--input-kind", ea.input_kind, "samples | covariance")
      ->check(CLI::IsMember({"samples", "covariance"}))->capture_default_str();
  est->add_flag("--correlation", ea.correlation, "Estimate the inverse correlation matrix");
  est->add_option("--lambda0", ea.lambda0, "Penalty level: auto = sqrt(log(p)/n), or a number")
      ->capture_default_str();
  est->add_flag("--lambda0-theory", ea.lambda0_theory, "Use A*sqrt(2 log(p^2/eps)/n)");
  est->add_option("--A", ea.a_const, "Constant A > 1 for --lambda0-theory")->capture_default_str();
  est->add_option("--eps", ea.eps, "eps in (0, 1) for --lambda0-theory")->capture_default_str();
  est->add_option("--n", ea.n, "Sample size behind a covariance input");
  est->add_option("--sym", ea.sym, "Symmetrization: auto | lp | entrywise")
      ->check(CLI::IsMember(sym_choices))->capture_default_str();
  est->add_flag("--center", ea.center, "Center the samples before forming the covariance");
  est->add_option("--output", ea.output, "Output CSV (default: standard output)");
  est->add_option("--diagnostics", ea.diagnostics, "Per-column diagnostics CSV");
  threads_opt(est, ea.threads);

  RegressArgs ra;
  auto* reg = app.add_subcommand("regress", "Scaled Lasso linear regression");
  reg->add_option("--y", ra.y, "Response CSV (one column)")->required()->check(CLI::ExistingFile);
  reg->add_option("--x", ra.x, "Design CSV (n rows)")->required()->check(CLI::ExistingFile);
  reg->add_option("--lambda0", ra.lambda0, "Penalty level: auto or a number")->capture_default_str();
  reg->add_option("--output", ra.output, "Output CSV (default: standard output)");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Replicated estimation on a synthetic model");
  sim->add_option("--model", sa.model, "Model 1, 2 or 3")->required()->check(CLI::Range(1, 3));
  sim->add_option("--p", sa.p, "Dimension")->required()->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
  sim->add_option("--n", sa.n, "Sample size")->capture_default_str()->check(CLI::Range(std::size_t{2}, std::size_t{100000000}));
  sim->add_option("--reps", sa.reps, "Replicates")->capture_default_str()->check(CLI::PositiveNumber);
  sim->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
  sim->add_option("--sym", sa.sym, "Symmetrization: auto | lp | entrywise")
      ->check(CLI::IsMember(sym_choices))->capture_default_str();
  sim->add_option("--lambda0", sa.lambda0, "Penalty level: auto or a number")->capture_default_str();
  sim->add_flag("--freeze-b", sa.freeze_b, "Model 2: draw B once and reuse it for every replicate");
  sim->add_flag("--center", sa.center, "Center each sample before forming the covariance");
  sim->add_flag("--population-input", sa.population, "Feed the true covariance instead of a sample");
  sim->add_option("--output", sa.output, "Report CSV (default: standard output)");
  sim->add_option("--raw", sa.raw, "Per-replicate error CSV");
  sim->add_option("--truth", sa.truth, "Write the replicate-0 target matrix to this CSV");
  threads_opt(sim, sa.threads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*est) return cmd_estimate(ea, out, err);
    if (*reg) return cmd_regress(ra, out, err);
    return cmd_simulate(sa, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace slasso::cli
