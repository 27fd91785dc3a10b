#pragma once

// Sparse precision / inverse-correlation estimation by column-wise scaled
// Lasso followed by symmetrization.
//
// Column j of the Gram matrix yields (beta_j, sigma_j); the raw estimate is
//
//     Theta~_jj = sigma_j^{-2},   Theta~_kj = -beta_kj * sigma_j^{-2},
//
// and the reported estimate is the symmetric matrix closest to Theta~ in the
// matrix l1 operator norm (maximum absolute column sum).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slasso/error.hpp"
#include "slasso/lasso.hpp"
#include "slasso/linalg.hpp"
#include "slasso/lp.hpp"
#include "slasso/parallel.hpp"

namespace slasso {

enum class Target { precision, inverse_correlation };
enum class Symmetrization { automatic, lp, entrywise };

inline const char* to_string(Symmetrization s) noexcept {
  switch (s) {
    case Symmetrization::automatic: return "auto";
    case Symmetrization::lp: return "lp";
    case Symmetrization::entrywise: return "entrywise";
  }
  return "unknown";
}

/// Largest dimension for which `automatic` symmetrization uses the LP.
inline constexpr std::size_t kLpSymmetrizationMaxDim = 200;

struct Lambda0Choice {
  enum class Kind { simulation, theory, fixed };
  Kind kind = Kind::simulation;
  double a_const = 1.1;  ///< theory mode
  double eps = 0.05;     ///< theory mode
  double value = 0.0;    ///< fixed mode

  static Lambda0Choice simulation() { return {}; }
  static Lambda0Choice theory(double a, double e) { return {Kind::theory, a, e, 0.0}; }
  static Lambda0Choice fixed(double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("lambda0 must be positive and finite");
    return {Kind::fixed, 1.1, 0.05, v};
  }

  /// Penalty level for dimension p and sample size n (n unused when fixed).
  double resolve(std::size_t p, std::size_t n) const {
    switch (kind) {
      case Kind::fixed: return value;
      case Kind::simulation:
      case Kind::theory:
        if (n == 0) throw DomainError("lambda0: sample size is required unless lambda0 is fixed");
        return default_lambda0(static_cast<double>(p), static_cast<double>(n),
                               kind == Kind::simulation ? Lambda0Mode::simulation : Lambda0Mode::theory,
                               a_const, eps);
    }
    return value;
  }
};

struct EstimatorConfig {
  Lambda0Choice lambda0;
  Symmetrization symmetrization = Symmetrization::automatic;
  Target target = Target::precision;
  SolverTolerances tolerances;
  bool center = false;           ///< only used when estimating from raw samples
  std::size_t sample_size = 0;   ///< n, needed by the simulation/theory penalty
  unsigned threads = 1;          ///< column-level workers, 0 = all cores
  bool eigen_diagnostic = true;  ///< report the smallest eigenvalue of the estimate
};

struct PrecisionEstimate {
  Target target = Target::precision;
  Matrix theta_tilde;  ///< column-wise estimate, not symmetric in general
  SymMatrix theta_hat;
  std::vector<double> sigma_hats;
  std::vector<ScaledFit> column_fits;
  EstimatorConfig config;
  double lambda0 = 0.0;
  Symmetrization symmetrization_used = Symmetrization::lp;
  bool lp_fallback = false;  ///< LP broke down; entrywise rule used instead
  /// Smallest eigenvalue of theta_hat (NaN when not computed). Negative
  /// values mean the estimate is indefinite; nothing here repairs that.
  double min_eigenvalue = std::numeric_limits<double>::quiet_NaN();

  std::size_t non_converged_columns() const noexcept {
    return static_cast<std::size_t>(std::count_if(column_fits.begin(), column_fits.end(),
                                                  [](const ScaledFit& f) { return !f.converged(); }));
  }
  bool degraded() const noexcept { return non_converged_columns() > 0 || lp_fallback; }
};

//---------------------------------------------------------------------------//
// Symmetrization
//---------------------------------------------------------------------------//

/// M_ij = M_ji = the smaller-magnitude of Theta~_ij and Theta~_ji; ties take
/// the upper-triangle entry.
inline SymMatrix symmetrize_entrywise(const Matrix& theta_tilde) {
  if (!theta_tilde.square()) detail::throw_dims("symmetrize_entrywise: matrix is not square");
  const std::size_t p = theta_tilde.rows();
  Matrix m(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    m(i, i) = theta_tilde(i, i);
    for (std::size_t j = i + 1; j < p; ++j) {
      const double up = theta_tilde(i, j);
      const double lo = theta_tilde(j, i);
      const double v = std::abs(lo) < std::abs(up) ? lo : up;
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return SymMatrix(std::move(m));
}

namespace detail {

// A pair {i < j} whose two column estimates disagree. The symmetric entry is
// m = base + dir * x with x in [0, width]; `base` is the entrywise choice.
struct DisagreeingPair {
  std::size_t i;
  std::size_t j;
  double base;
  double dir;
  double width;
  std::size_t base_column;  // column whose own entry equals base
};

}  // namespace detail

/// argmin over symmetric M of |M - Theta~|_1 with |.|_1 the maximum absolute
/// column sum, solved as a linear program.
///
/// Only pairs where Theta~_ij != Theta~_ji carry decisions: the symmetric
/// entry lies between the two values (anything outside is dominated), so a
/// pair with disagreement D assigns x in [0, D] of it to one column and
/// D - x to the other, and the diagonal is copied. The LP minimizes the
/// largest column load t. Among the optimal matrices, a second LP picks the
/// one that moves least from the entrywise (smaller-magnitude) choice.
inline SymMatrix symmetrize_lp(const Matrix& theta_tilde) {
  if (!theta_tilde.square()) detail::throw_dims("symmetrize_lp: matrix is not square");
  const std::size_t p = theta_tilde.rows();
  Matrix m(p, p);
  std::vector<detail::DisagreeingPair> pairs;
  for (std::size_t i = 0; i < p; ++i) {
    m(i, i) = theta_tilde(i, i);
    for (std::size_t j = i + 1; j < p; ++j) {
      const double up = theta_tilde(i, j);  // column j's entry
      const double lo = theta_tilde(j, i);  // column i's entry
      if (up == lo) {
        m(i, j) = up;
        m(j, i) = up;
        continue;
      }
      const bool take_lo = std::abs(lo) < std::abs(up);
      const double base = take_lo ? lo : up;
      const double other = take_lo ? up : lo;
      pairs.push_back({i, j, base, other > base ? 1.0 : -1.0, std::abs(other - base),
                       take_lo ? i : j});
    }
  }
  if (pairs.empty()) return SymMatrix(std::move(m));

  // Column v's load from pair e: x_e if v == base_column, else width_e - x_e.
  const std::size_t ne = pairs.size();
  auto load_rows = [&](LpProblem& lp, std::size_t t_index, double t_bound) {
    std::vector<std::vector<double>> rows(p, std::vector<double>(lp.num_variables(), 0.0));
    std::vector<double> rhs(p, 0.0);
    std::vector<bool> touched(p, false);
    for (std::size_t e = 0; e < ne; ++e) {
      const auto& pr = pairs[e];
      const std::size_t other_col = pr.base_column == pr.i ? pr.j : pr.i;
      rows[pr.base_column][e] += 1.0;
      rows[other_col][e] -= 1.0;
      rhs[other_col] -= pr.width;
      touched[pr.i] = true;
      touched[pr.j] = true;
    }
    for (std::size_t v = 0; v < p; ++v) {
      if (!touched[v]) continue;
      if (t_index < lp.num_variables()) {
        rows[v][t_index] = -1.0;
        lp.add_constraint(std::move(rows[v]), Sense::less_equal, rhs[v]);
      } else {
        lp.add_constraint(std::move(rows[v]), Sense::less_equal, rhs[v] + t_bound);
      }
    }
  };

  LpProblem stage1;
  for (const auto& pr : pairs) stage1.add_variable(0.0, 0.0, pr.width);
  const std::size_t t_index = stage1.add_variable(1.0, 0.0, kInf);
  load_rows(stage1, t_index, 0.0);
  const LpSolution s1 = solve_lp(stage1);
  if (s1.status != LpStatus::optimal) {
    throw NumericalBreakdown(std::string("symmetrize_lp: LP returned ") + to_string(s1.status));
  }
  const double t_star = s1.objective;

  LpProblem stage2;
  for (const auto& pr : pairs) stage2.add_variable(1.0, 0.0, pr.width);
  load_rows(stage2, std::numeric_limits<std::size_t>::max(), t_star * (1.0 + 1e-12) + 1e-13);
  std::vector<double> x;
  try {
    const LpSolution s2 = solve_lp(stage2);
    x = s2.status == LpStatus::optimal ? s2.x : s1.x;
  } catch (const NumericalBreakdown&) {
    x = s1.x;
  }

  for (std::size_t e = 0; e < ne; ++e) {
    const auto& pr = pairs[e];
    const double xe = std::clamp(x[e], 0.0, pr.width);
    const double v = pr.base + pr.dir * xe;
    m(pr.i, pr.j) = v;
    m(pr.j, pr.i) = v;
  }
  return SymMatrix(std::move(m));
}

//---------------------------------------------------------------------------//
// Estimation
//---------------------------------------------------------------------------//

namespace detail {

inline void check_estimator_input(const SymMatrix& sigma_bar) {
  if (sigma_bar.dim() == 0) throw_dims("estimate_precision: empty matrix");
  for (std::size_t j = 0; j < sigma_bar.dim(); ++j) {
    if (!(sigma_bar(j, j) > 0.0)) {
      throw DegenerateInput("column " + std::to_string(j + 1) +
                            " has zero (or negative) variance; the estimator needs a positive diagonal");
    }
  }
}

inline Symmetrization resolve_symmetrization(Symmetrization s, std::size_t p) {
  if (s != Symmetrization::automatic) return s;
  return p <= kLpSymmetrizationMaxDim ? Symmetrization::lp : Symmetrization::entrywise;
}

inline PrecisionEstimate estimate(const SymMatrix& sigma_bar, const EstimatorConfig& config,
                                  Target target) {
  check_estimator_input(sigma_bar);
  const std::size_t p = sigma_bar.dim();

  PrecisionEstimate est;
  est.target = target;
  est.config = config;
  est.config.target = target;
  est.lambda0 = config.lambda0.resolve(p, config.sample_size);

  est.column_fits.resize(p);
  parallel_for(p, config.threads, [&](std::size_t j) {
    const GramProblem problem(sigma_bar, j);
    est.column_fits[j] = scaled_lasso_column(problem, est.lambda0, config.tolerances);
  });

  est.sigma_hats.resize(p);
  est.theta_tilde = Matrix(p, p);
  for (std::size_t j = 0; j < p; ++j) {
    const ScaledFit& fit = est.column_fits[j];
    est.sigma_hats[j] = fit.sigma_hat;
    const double inv_var = 1.0 / (fit.sigma_hat * fit.sigma_hat);
    if (target == Target::precision) {
      for (std::size_t k = 0; k < p; ++k) est.theta_tilde(k, j) = -fit.beta[k] * inv_var;
      est.theta_tilde(j, j) = inv_var;
    } else {
      // Normalized coefficients alpha_kj = S_kk^{1/2} beta_kj, column scale
      // sigma_j^{-2} S_jj^{1/2}.
      const double sjj = std::sqrt(sigma_bar(j, j));
      for (std::size_t k = 0; k < p; ++k) {
        const double alpha = std::sqrt(sigma_bar(k, k)) * fit.beta[k];
        est.theta_tilde(k, j) = -alpha * inv_var * sjj;
      }
      est.theta_tilde(j, j) = sigma_bar(j, j) * inv_var;
    }
  }
  if (!est.theta_tilde.all_finite()) {
    throw NonFinite("estimate_precision: column assembly produced non-finite entries");
  }

  est.symmetrization_used = resolve_symmetrization(config.symmetrization, p);
  if (est.symmetrization_used == Symmetrization::lp) {
    try {
      est.theta_hat = symmetrize_lp(est.theta_tilde);
    } catch (const NumericalBreakdown&) {
      est.lp_fallback = true;
      est.symmetrization_used = Symmetrization::entrywise;
      est.theta_hat = symmetrize_entrywise(est.theta_tilde);
    }
  } else {
    est.theta_hat = symmetrize_entrywise(est.theta_tilde);
  }

  if (config.eigen_diagnostic) {
    try {
      est.min_eigenvalue = sym_eigen(est.theta_hat).values.front();
    } catch (const NonConvergence&) {
      // Diagnostic only.
    }
  }
  return est;
}

}  // namespace detail

/// Precision matrix estimate from a covariance (Gram) matrix. Every diagonal
/// entry must be positive. Columns that fail to converge are kept with their
/// last iterate and flagged in `column_fits`.
inline PrecisionEstimate estimate_precision(const SymMatrix& sigma_bar, const EstimatorConfig& config) {
  return detail::estimate(sigma_bar, config, Target::precision);
}

/// Inverse correlation matrix estimate, built from the same column fits with
/// normalized coefficients.
inline PrecisionEstimate estimate_inverse_correlation(const SymMatrix& sigma_bar,
                                                      const EstimatorConfig& config) {
  return detail::estimate(sigma_bar, config, Target::inverse_correlation);
}

/// Dispatches on config.target.
inline PrecisionEstimate estimate(const SymMatrix& sigma_bar, const EstimatorConfig& config) {
  return detail::estimate(sigma_bar, config, config.target);
}

/// Samples in, estimate out: forms the sample covariance (centered if
/// config.center) and takes n from the data.
inline PrecisionEstimate estimate_from_samples(const Matrix& data, EstimatorConfig config) {
  config.sample_size = data.rows();
  return estimate(sample_covariance(data, config.center), config);
}

//---------------------------------------------------------------------------//
// Diagnostics
//---------------------------------------------------------------------------//

struct SupportInfo {
  std::size_t degree = 0;  ///< 1 + max_j |S_j|
  std::vector<std::vector<std::size_t>> supports;  ///< S_j = {i != j : |theta_ij| > tol}
};

inline SupportInfo degree_and_support(const SymMatrix& theta, double tol) {
  const std::size_t p = theta.dim();
  SupportInfo info;
  info.supports.resize(p);
  std::size_t widest = 0;
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < p; ++i)
      if (i != j && std::abs(theta(i, j)) > tol) info.supports[j].push_back(i);
    widest = std::max(widest, info.supports[j].size());
  }
  info.degree = widest + 1;
  return info;
}

/// Extreme eigenvalues of the correlation matrix D^{-1/2} S D^{-1/2}.
inline std::pair<double, double> correlation_eigen_range(const SymMatrix& sigma) {
  const std::size_t p = sigma.dim();
  std::vector<double> scale(p);
  for (std::size_t i = 0; i < p; ++i) {
    if (!(sigma(i, i) > 0.0)) throw DegenerateInput("correlation_eigen_range: non-positive diagonal");
    scale[i] = 1.0 / std::sqrt(sigma(i, i));
  }
  Matrix c(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    c(i, i) = 1.0;
    for (std::size_t j = i + 1; j < p; ++j) c(i, j) = sigma(i, j) * scale[i] * scale[j];
  }
  const auto eig = sym_eigen(SymMatrix::from_upper(c));
  return {eig.values.front(), eig.values.back()};
}

}  // namespace slasso
