#pragma once

// Ground-truth models, Gaussian sampling and the replicated error study.
//
//   Model 1: Theta_ij = 0.6^|i-j|.
//   Model 2: Theta = B + delta I, B symmetric with zero diagonal and each
//            upper-triangle entry 0.5 with probability 0.1; delta makes the
//            condition number exactly p; then rescaled to unit diagonal.
//   Model 3: Theta = D^{1/2} Omega D^{1/2}, Omega_ij = 0.6^|i-j|,
//            d_ii = (4i + p - 5) / (5(p - 1)) for i = 1..p.
//
// Random streams: replicate r samples from stream r; model draws for
// replicate r use stream 2^32 + r, so freezing B never shifts the data.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "slasso/error.hpp"
#include "slasso/estimator.hpp"
#include "slasso/linalg.hpp"
#include "slasso/parallel.hpp"
#include "slasso/random.hpp"

namespace slasso {

struct ModelSpec {
  int kind = 1;  ///< 1, 2 or 3
  std::size_t p = 30;
  double off_diag_value = 0.5;  ///< model 2
  double off_diag_prob = 0.1;   ///< model 2

  void validate() const {
    if (kind < 1 || kind > 3) throw DomainError("model kind must be 1, 2 or 3");
    if (p < 2) throw DomainError("model dimension p must be at least 2");
  }
};

struct TrueModel {
  SymMatrix theta_star;
  SymMatrix sigma_star;
  Matrix chol_sigma;  ///< lower factor of sigma_star
  std::size_t degree = 0;
  std::vector<std::vector<std::size_t>> supports;
  /// Model 2 only: the diagonal shift and cond(B + delta I) before rescaling.
  double delta = std::numeric_limits<double>::quiet_NaN();
  double pre_rescale_condition = std::numeric_limits<double>::quiet_NaN();
  int draws = 0;  ///< model 2 only: number of B draws used
};

inline constexpr std::uint64_t kModelStreamOffset = std::uint64_t{1} << 32;
inline constexpr int kModel2MaxDraws = 10;

/// Completes a model from its target matrix: PD check, Sigma*, its factor,
/// degree and supports.
inline TrueModel finish_model(SymMatrix theta) {
  TrueModel m;
  (void)cholesky(theta);
  m.sigma_star = invert_spd(theta);
  m.chol_sigma = cholesky(m.sigma_star);
  auto info = degree_and_support(theta, 0.0);
  m.degree = info.degree;
  m.supports = std::move(info.supports);
  m.theta_star = std::move(theta);
  return m;
}

inline SymMatrix toeplitz_06(std::size_t p) {
  Matrix t(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      t(i, j) = std::pow(0.6, static_cast<double>(i > j ? i - j : j - i));
  return SymMatrix(std::move(t));
}

/// Model 3 diagonal weights d_ii = (4i + p - 5) / (5(p - 1)), i = 1..p.
inline std::vector<double> model3_diagonal(std::size_t p) {
  std::vector<double> d(p);
  const double pd = static_cast<double>(p);
  for (std::size_t k = 0; k < p; ++k) {
    const double i = static_cast<double>(k + 1);
    d[k] = (4.0 * i + pd - 5.0) / (5.0 * (pd - 1.0));
  }
  return d;
}

/// Model 2 from a given B (symmetric, zero diagonal). Throws ModelDegenerate
/// when the shifted matrix is not positive definite.
inline TrueModel model2_from_b(const SymMatrix& b) {
  const std::size_t p = b.dim();
  const auto eig = sym_eigen(b);
  const double lmin = eig.values.front();
  const double lmax = eig.values.back();
  const double pd = static_cast<double>(p);
  // Unique solution of (lmax + delta) / (lmin + delta) = p.
  const double delta = (lmax - pd * lmin) / (pd - 1.0);
  if (!(lmax - lmin > 1e-12 * (1.0 + std::abs(lmax))) || !(lmin + delta > 0.0)) {
    throw ModelDegenerate("model 2: B + delta I is not positive definite (B has a flat spectrum)");
  }
  Matrix shifted = b.matrix();
  for (std::size_t i = 0; i < p; ++i) shifted(i, i) += delta;
  const auto shifted_eig = sym_eigen(SymMatrix(shifted));

  // D' = delta I, so the unit-diagonal rescaling divides by delta.
  Matrix theta(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    theta(i, i) = 1.0;
    for (std::size_t j = 0; j < p; ++j)
      if (i != j) theta(i, j) = b(i, j) / delta;
  }
  TrueModel m;
  try {
    m = finish_model(SymMatrix(std::move(theta)));
  } catch (const NotPositiveDefinite& e) {
    throw ModelDegenerate(std::string("model 2: ") + e.what());
  }
  m.delta = delta;
  m.pre_rescale_condition = shifted_eig.values.back() / shifted_eig.values.front();
  return m;
}

/// Draws the model-2 off-diagonal pattern: each upper-triangle entry
/// independently equals `value` with probability `prob`, mirrored below.
inline SymMatrix draw_model2_b(std::size_t p, double value, double prob, CounterRng& rng) {
  Matrix b(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      const double v = rng.uniform() < prob ? value : 0.0;
      b(i, j) = v;
      b(j, i) = v;
    }
  }
  return SymMatrix(std::move(b));
}

/// Builds the ground truth for `spec`. Only model 2 consumes `rng`.
inline TrueModel build_model(const ModelSpec& spec, CounterRng& rng) {
  spec.validate();
  const std::size_t p = spec.p;
  switch (spec.kind) {
    case 1:
      return finish_model(toeplitz_06(p));
    case 3: {
      const auto d = model3_diagonal(p);
      const SymMatrix omega = toeplitz_06(p);
      Matrix theta(p, p);
      for (std::size_t i = 0; i < p; ++i) {
        theta(i, i) = d[i];
        for (std::size_t j = 0; j < p; ++j)
          if (i != j) theta(i, j) = std::sqrt(d[i]) * omega(i, j) * std::sqrt(d[j]);
      }
      return finish_model(SymMatrix::from_upper(theta));
    }
    default: {
      for (int draw = 1; draw <= kModel2MaxDraws; ++draw) {
        const SymMatrix b = draw_model2_b(p, spec.off_diag_value, spec.off_diag_prob, rng);
        try {
          TrueModel m = model2_from_b(b);
          m.draws = draw;
          return m;
        } catch (const ModelDegenerate&) {
        }
      }
      throw ModelDegenerate("model 2: no positive definite draw in " + std::to_string(kModel2MaxDraws) +
                            " attempts");
    }
  }
}

/// n rows of N(0, Sigma*): X = Z L' with Z filled row by row from `rng`.
inline Matrix sample_gaussian(const TrueModel& model, std::size_t n, CounterRng& rng) {
  const std::size_t p = model.chol_sigma.rows();
  const Matrix& l = model.chol_sigma;
  Matrix x(n, p);
  std::vector<double> z(p);
  for (std::size_t r = 0; r < n; ++r) {
    for (double& v : z) v = rng.normal();
    for (std::size_t i = 0; i < p; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k <= i; ++k) s += l(i, k) * z[k];
      x(r, i) = s;
    }
  }
  return x;
}

struct ErrorNorms {
  double spectrum = 0.0;
  double l1 = 0.0;
  double frobenius = 0.0;
};

inline ErrorNorms error_norms(const SymMatrix& theta_hat, const SymMatrix& theta_star) {
  if (theta_hat.dim() != theta_star.dim()) detail::throw_dims("error_norms: dimensions differ");
  const Matrix diff = theta_hat.matrix() - theta_star.matrix();
  return {spectrum_norm(diff), matrix_l1_norm(diff), frobenius_norm(diff)};
}

struct SimConfig {
  std::size_t n = 100;
  std::size_t reps = 100;
  std::uint64_t seed = 1;
  EstimatorConfig estimator;
  bool freeze_b = false;          ///< model 2: one B for all replicates
  bool population_input = false;  ///< feed Sigma* itself instead of a sample covariance
  unsigned threads = 1;           ///< replicate-level workers, 0 = all cores

  void validate() const {
    if (n < 2) throw DomainError("simulation: n must be at least 2");
    if (reps < 1) throw DomainError("simulation: reps must be at least 1");
  }
};

struct ReplicateResult {
  std::size_t rep = 0;
  bool ok = false;
  bool degraded = false;  ///< some column did not converge, or LP fell back
  ErrorNorms errors;
  std::string failure;
};

struct NormSummary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();  ///< n-1 denominator; NaN for one value
};

struct SimReport {
  ModelSpec spec;
  SimConfig config;
  std::vector<ReplicateResult> replicates;  ///< ordered by replicate index
  std::size_t failures = 0;
  std::size_t degraded = 0;
  NormSummary spectrum;
  NormSummary l1;
  NormSummary frobenius;
  double wall_seconds = 0.0;
};

inline NormSummary summarize(const std::vector<double>& v) {
  NormSummary s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

/// Runs `config.reps` independent replicates and aggregates the error norms
/// in replicate order. Failed replicates are excluded and counted; more than
/// 10% failures aborts the run.
inline SimReport run_simulation(const ModelSpec& spec, const SimConfig& config) {
  spec.validate();
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  SimReport report;
  report.spec = spec;
  report.config = config;
  report.replicates.resize(config.reps);

  const bool per_rep_model = spec.kind == 2 && !config.freeze_b;
  TrueModel shared;
  if (!per_rep_model) {
    CounterRng rng(config.seed, kModelStreamOffset);
    shared = build_model(spec, rng);
  }

  EstimatorConfig est_config = config.estimator;
  est_config.sample_size = config.n;
  est_config.threads = 1;

  parallel_for(config.reps, config.threads, [&](std::size_t r) {
    ReplicateResult& out = report.replicates[r];
    out.rep = r;
    try {
      TrueModel local;
      if (per_rep_model) {
        CounterRng model_rng(config.seed, kModelStreamOffset + r);
        local = build_model(spec, model_rng);
      }
      const TrueModel& model = per_rep_model ? local : shared;
      SymMatrix sigma_bar;
      if (config.population_input) {
        sigma_bar = model.sigma_star;
      } else {
        CounterRng data_rng(config.seed, r);
        sigma_bar = sample_covariance(sample_gaussian(model, config.n, data_rng), est_config.center);
      }
      const PrecisionEstimate est = estimate_precision(sigma_bar, est_config);
      out.errors = error_norms(est.theta_hat, model.theta_star);
      out.degraded = est.degraded();
      out.ok = true;
    } catch (const Error& e) {
      out.ok = false;
      out.failure = e.what();
    }
  });

  std::vector<double> spec_v, l1_v, fro_v;
  for (const auto& r : report.replicates) {
    if (!r.ok) {
      ++report.failures;
      continue;
    }
    if (r.degraded) ++report.degraded;
    spec_v.push_back(r.errors.spectrum);
    l1_v.push_back(r.errors.l1);
    fro_v.push_back(r.errors.frobenius);
  }
  if (report.failures * 10 > config.reps) {
    throw Error("simulation: " + std::to_string(report.failures) + " of " + std::to_string(config.reps) +
                " replicates failed (limit 10%); first failure: " +
                [&] {
                  for (const auto& r : report.replicates)
                    if (!r.ok) return r.failure;
                  return std::string();
                }());
  }
  report.spectrum = summarize(spec_v);
  report.l1 = summarize(l1_v);
  report.frobenius = summarize(fro_v);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace slasso
