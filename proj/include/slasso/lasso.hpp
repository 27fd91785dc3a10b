#pragma once

// Covariance-form Lasso and the scaled Lasso built on top of it.
//
// For a Gram matrix S and a target column j, the Lasso at penalty `lambda`
// minimizes
//
//     b'Sb/2 + lambda * sum_k S_kk^{1/2} |b_k|    subject to b_j = -1,
//
// and the scaled Lasso jointly minimizes over (b, sigma)
//
//     L(b, sigma) = b'Sb/(2 sigma) + sigma/2 + lambda0 * sum_k S_kk^{1/2} |b_k|
//
// by alternating sigma^2 <- b'Sb, lambda <- sigma*lambda0, b <- b(lambda).
// Only Gram entries are needed, never a design matrix.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slasso/error.hpp"
#include "slasso/linalg.hpp"

namespace slasso {

struct SolverTolerances {
  int outer_max = 100;          ///< scaled-Lasso fixed-point iterations
  int sweep_max = 10000;        ///< coordinate-descent sweeps per Lasso solve
  double fp_tol = 1e-8;         ///< relative change in lambda that ends the fixed point
  double kkt_rel = 1e-8;        ///< KKT tolerance is kkt_rel * (1 + lambda)
  double sigma_floor_rel = 1e-12;  ///< sigma floor relative to sqrt(S_jj)
  bool warm_start = true;
};

/// One column's Lasso problem. Holds a non-owning reference to the Gram
/// matrix, which must outlive the problem.
class GramProblem {
 public:
  GramProblem(const SymMatrix& gram, std::size_t target) : gram_(&gram), target_(target) {
    const std::size_t p = gram.dim();
    if (target >= p) detail::throw_dims("GramProblem: target index out of range");
    weights_.resize(p);
    for (std::size_t k = 0; k < p; ++k) {
      const double skk = gram(k, k);
      if (skk < 0.0) throw DomainError("GramProblem: negative diagonal entry");
      weights_[k] = std::sqrt(skk);
    }
    if (!(gram(target, target) > 0.0)) {
      throw DegenerateInput("GramProblem: target column " + std::to_string(target) +
                            " has zero variance");
    }
  }

  GramProblem(SymMatrix&&, std::size_t) = delete;

  const SymMatrix& gram() const noexcept { return *gram_; }
  std::size_t target() const noexcept { return target_; }
  std::size_t dim() const noexcept { return gram_->dim(); }
  std::span<const double> weights() const noexcept { return weights_; }

 private:
  const SymMatrix* gram_;
  std::size_t target_;
  std::vector<double> weights_;
};

struct LassoSolution {
  std::vector<double> coefficients;  ///< coefficients[target] == -1
  double lambda = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;  ///< coordinate-descent sweeps
};

class LassoNonConvergence : public NonConvergence {
 public:
  explicit LassoNonConvergence(LassoSolution last)
      : NonConvergence("lasso_at_lambda: sweep cap reached with KKT residual " +
                       std::to_string(last.kkt_residual)),
        last_(std::move(last)) {}

  const LassoSolution& last() const noexcept { return last_; }

 private:
  LassoSolution last_;
};

inline double soft_threshold(double z, double t) noexcept {
  if (std::abs(z) <= t) return 0.0;
  return z > 0.0 ? z - t : z + t;
}

/// Largest violation of the Lasso stationarity conditions over k != target:
/// distance of S_k.b / S_kk^{1/2} from -lambda*sgn(b_k) for active k, excess
/// of |S_k.b| / S_kk^{1/2} over lambda for inactive k. Zero-variance
/// coordinates must be zero; a nonzero one yields infinity.
inline double kkt_residual(const GramProblem& problem, std::span<const double> b, double lambda) {
  const std::size_t p = problem.dim();
  if (b.size() != p) detail::throw_dims("kkt_residual: coefficient length differs from dimension");
  const auto& s = problem.gram();
  const auto w = problem.weights();
  double worst = 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    if (k == problem.target()) continue;
    if (w[k] == 0.0) {
      if (b[k] != 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    const double r = dot(s.row(k), b) / w[k];
    double v;
    if (b[k] > 0.0) {
      v = std::abs(r + lambda);
    } else if (b[k] < 0.0) {
      v = std::abs(r - lambda);
    } else {
      v = std::max(std::abs(r) - lambda, 0.0);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

/// Cyclic coordinate descent with an active-set inner loop. Every successful
/// return is certified against the KKT conditions with a freshly computed
/// gradient. Throws LassoNonConvergence when the sweep cap is hit first.
inline LassoSolution lasso_at_lambda(const GramProblem& problem, double lambda,
                                     std::span<const double> warm = {},
                                     const SolverTolerances& tol = {}) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError("lasso_at_lambda: lambda must be positive and finite");
  }
  const std::size_t p = problem.dim();
  const std::size_t j = problem.target();
  const auto& s = problem.gram();
  const auto w = problem.weights();

  std::vector<double> b(p, 0.0);
  if (!warm.empty()) {
    if (warm.size() != p) detail::throw_dims("lasso_at_lambda: warm start has wrong length");
    for (std::size_t k = 0; k < p; ++k) b[k] = w[k] > 0.0 ? warm[k] : 0.0;
  }
  b[j] = -1.0;

  std::vector<double> grad(p, 0.0);
  auto recompute_gradient = [&] {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t k = 0; k < p; ++k) {
      if (b[k] == 0.0) continue;
      const auto col = s.row(k);
      for (std::size_t i = 0; i < p; ++i) grad[i] += b[k] * col[i];
    }
  };

  // Returns the scaled size of the move, w_k |delta|, which equals the
  // stationarity violation at k just before the update.
  auto update = [&](std::size_t k) -> double {
    const double skk = s(k, k);
    const double z = skk * b[k] - grad[k];
    const double next = soft_threshold(z, lambda * w[k]) / skk;
    const double delta = next - b[k];
    if (delta == 0.0) return 0.0;
    b[k] = next;
    const auto col = s.row(k);
    for (std::size_t i = 0; i < p; ++i) grad[i] += delta * col[i];
    return std::abs(delta) * w[k];
  };

  std::vector<std::size_t> free_coords;
  for (std::size_t k = 0; k < p; ++k)
    if (k != j && w[k] > 0.0) free_coords.push_back(k);

  const double kkt_tol = tol.kkt_rel * (1.0 + lambda);
  const double active_tol = 1e-4 * kkt_tol;

  recompute_gradient();
  LassoSolution out;
  out.lambda = lambda;
  int sweeps = 0;
  std::vector<std::size_t> active;
  while (true) {
    for (std::size_t k : free_coords) update(k);
    ++sweeps;

    active.clear();
    for (std::size_t k : free_coords)
      if (b[k] != 0.0) active.push_back(k);
    while (!active.empty() && sweeps < tol.sweep_max) {
      double biggest = 0.0;
      for (std::size_t k : active) biggest = std::max(biggest, update(k));
      ++sweeps;
      if (biggest <= active_tol) break;
    }

    recompute_gradient();
    const double r = kkt_residual(problem, b, lambda);
    out.kkt_residual = r;
    out.iterations = sweeps;
    if (r <= kkt_tol) break;
    if (sweeps >= tol.sweep_max) {
      out.coefficients = std::move(b);
      throw LassoNonConvergence(std::move(out));
    }
  }
  out.coefficients = std::move(b);
  return out;
}

/// The jointly convex scaled-Lasso objective L(b, sigma).
inline double scaled_objective(const GramProblem& problem, std::span<const double> b,
                               double sigma, double lambda0) {
  const auto w = problem.weights();
  double pen = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) pen += w[k] * std::abs(b[k]);
  return quadratic_form(problem.gram(), b) / (2.0 * sigma) + sigma / 2.0 + lambda0 * pen;
}

enum class FitStatus { converged, non_convergence, degenerate_column };

inline const char* to_string(FitStatus s) noexcept {
  switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::non_convergence: return "non_convergence";
    case FitStatus::degenerate_column: return "degenerate_column";
  }
  return "unknown";
}

struct ScaledFit {
  std::vector<double> beta;  ///< beta[target] == -1
  double sigma_hat = 0.0;
  double lambda_final = 0.0;
  int outer_iterations = 0;
  int inner_sweeps = 0;  ///< summed over all Lasso solves
  double kkt_residual = 0.0;
  FitStatus status = FitStatus::non_convergence;
  /// L(b, sigma) after every half-step of the alternating minimization.
  std::vector<double> objective_trace;

  bool converged() const noexcept { return status == FitStatus::converged; }
};

/// Scaled Lasso for one column. The iteration starts from the null-model
/// noise level sigma = S_jj^{1/2} and stops once lambda moves by at most
/// fp_tol relative. Failures are reported through `status`, never thrown.
inline ScaledFit scaled_lasso_column(const GramProblem& problem, double lambda0,
                                     const SolverTolerances& tol = {}) {
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0)) {
    throw DomainError("scaled_lasso_column: lambda0 must be positive and finite");
  }
  const std::size_t j = problem.target();
  double sigma = std::sqrt(problem.gram()(j, j));
  const double sigma_floor = tol.sigma_floor_rel * sigma;
  double lambda = sigma * lambda0;

  ScaledFit fit;
  LassoSolution sol;
  auto solve = [&](double lam, std::span<const double> warm) -> bool {
    try {
      sol = lasso_at_lambda(problem, lam, warm, tol);
      fit.inner_sweeps += sol.iterations;
      return true;
    } catch (const LassoNonConvergence& e) {
      sol = e.last();
      fit.inner_sweeps += sol.iterations;
      return false;
    }
  };
  auto finish = [&](FitStatus status, double sigma_hat) {
    fit.beta = sol.coefficients;
    fit.sigma_hat = sigma_hat;
    fit.lambda_final = sigma_hat * lambda0;
    fit.kkt_residual = sol.kkt_residual;
    fit.status = status;
    return fit;
  };

  if (!solve(lambda, {})) return finish(FitStatus::non_convergence, sigma);
  fit.objective_trace.push_back(scaled_objective(problem, sol.coefficients, sigma, lambda0));

  for (int it = 1; it <= tol.outer_max; ++it) {
    fit.outer_iterations = it;
    const double next_sigma = std::sqrt(std::max(quadratic_form(problem.gram(), sol.coefficients), 0.0));
    if (next_sigma < sigma_floor || next_sigma == 0.0) {
      return finish(FitStatus::degenerate_column, sigma_floor);
    }
    sigma = next_sigma;
    fit.objective_trace.push_back(scaled_objective(problem, sol.coefficients, sigma, lambda0));

    const double next_lambda = sigma * lambda0;
    if (std::abs(next_lambda - lambda) <= tol.fp_tol * lambda) {
      return finish(FitStatus::converged, sigma);
    }
    lambda = next_lambda;
    const std::vector<double> prev = sol.coefficients;
    if (!solve(lambda, tol.warm_start ? std::span<const double>(prev) : std::span<const double>{})) {
      return finish(FitStatus::non_convergence, sigma);
    }
    fit.objective_trace.push_back(scaled_objective(problem, sol.coefficients, sigma, lambda0));
  }
  return finish(FitStatus::non_convergence, sigma);
}

//---------------------------------------------------------------------------//
// Scaled Lasso for a linear model y = X beta + noise
//---------------------------------------------------------------------------//

struct RegressionFit {
  std::vector<double> beta;   ///< coefficients on the original predictor scale
  std::vector<double> alpha;  ///< alpha_k = D_kk^{1/2} beta_k, D = diag(X'X/n)
  double sigma_hat = 0.0;
  double lambda_final = 0.0;
  int outer_iterations = 0;
  double kkt_residual = 0.0;
  FitStatus status = FitStatus::non_convergence;
  std::vector<std::size_t> zero_columns;  ///< all-zero predictors, coefficient pinned to 0

  bool converged() const noexcept { return status == FitStatus::converged; }
};

/// Minimizes |y - Xb|^2/(2n sigma) + sigma/2 + lambda0 |D^{1/2} b|_1 by
/// running the column solver on the Gram matrix of [X, y]/sqrt(n) with y as
/// the target column.
inline RegressionFit scaled_lasso_regression(std::span<const double> y, const Matrix& x,
                                             double lambda0, const SolverTolerances& tol = {}) {
  const std::size_t n = x.rows();
  const std::size_t q = x.cols();
  if (y.size() != n) detail::throw_dims("scaled_lasso_regression: y and X row counts differ");
  if (n < 2 || q < 1) detail::throw_dims("scaled_lasso_regression: need n >= 2 and q >= 1");
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0)) {
    throw DomainError("scaled_lasso_regression: lambda0 must be positive and finite");
  }

  Matrix aug(n, q + 1);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < q; ++k) aug(r, k) = x(r, k);
    if (!std::isfinite(y[r])) throw NonFinite("scaled_lasso_regression: non-finite response");
    aug(r, q) = y[r];
  }
  const SymMatrix gram = sample_covariance(aug, false);

  RegressionFit out;
  out.beta.assign(q, 0.0);
  out.alpha.assign(q, 0.0);
  for (std::size_t k = 0; k < q; ++k)
    if (gram(k, k) == 0.0) out.zero_columns.push_back(k);

  if (gram(q, q) == 0.0) {
    // Zero response: the null fit is exact and sigma collapses to its floor.
    out.sigma_hat = tol.sigma_floor_rel;
    out.lambda_final = out.sigma_hat * lambda0;
    out.status = FitStatus::degenerate_column;
    return out;
  }

  const GramProblem problem(gram, q);
  const ScaledFit fit = scaled_lasso_column(problem, lambda0, tol);
  for (std::size_t k = 0; k < q; ++k) {
    out.beta[k] = fit.beta[k];
    out.alpha[k] = problem.weights()[k] * fit.beta[k];
  }
  out.sigma_hat = fit.sigma_hat;
  out.lambda_final = fit.lambda_final;
  out.outer_iterations = fit.outer_iterations;
  out.kkt_residual = fit.kkt_residual;
  out.status = fit.status;
  return out;
}

//---------------------------------------------------------------------------//
// Penalty level
//---------------------------------------------------------------------------//

enum class Lambda0Mode { simulation, theory };

/// simulation: sqrt(log(p)/n). theory: A * sqrt(2 log(p^2/eps) / n), A > 1,
/// 0 < eps < 1. Natural logarithms. `p` is real so non-integer dimensions
/// can be probed directly.
inline double default_lambda0(double p, double n, Lambda0Mode mode, double a_const = 1.1,
                              double eps = 0.05) {
  if (!(p >= 2.0) || !(n >= 1.0)) throw DomainError("default_lambda0: need p >= 2 and n >= 1");
  if (mode == Lambda0Mode::simulation) return std::sqrt(std::log(p) / n);
  if (!(a_const > 1.0)) throw DomainError("default_lambda0: theory mode needs A > 1");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("default_lambda0: theory mode needs 0 < eps < 1");
  return a_const * std::sqrt(2.0 * std::log(p * p / eps) / n);
}

}  // namespace slasso
