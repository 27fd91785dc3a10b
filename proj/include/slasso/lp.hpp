#pragma once

// Dense two-phase primal simplex with Bland's rule.
//
// Small and deterministic rather than fast: the tableau is dense and the
// entering variable is always the lowest-index improving column, so equal
// inputs give bitwise-equal outputs. Sized for the symmetrization LPs of the
// precision estimator (a few hundred rows at most).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "slasso/error.hpp"

namespace slasso {

enum class Sense { less_equal, equal, greater_equal };

struct LpConstraint {
  std::vector<double> coefficients;
  Sense sense = Sense::less_equal;
  double rhs = 0.0;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// minimize c'x subject to the constraints and lower <= x <= upper.
/// Empty bound vectors mean x >= 0.
struct LpProblem {
  std::vector<double> objective;
  std::vector<LpConstraint> constraints;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t num_variables() const noexcept { return objective.size(); }

  std::size_t add_variable(double cost, double lo = 0.0, double hi = kInf) {
    if (lower.size() < objective.size()) lower.resize(objective.size(), 0.0);
    if (upper.size() < objective.size()) upper.resize(objective.size(), kInf);
    objective.push_back(cost);
    lower.push_back(lo);
    upper.push_back(hi);
    for (auto& c : constraints) c.coefficients.resize(objective.size(), 0.0);
    return objective.size() - 1;
  }

  void add_constraint(std::vector<double> coefficients, Sense sense, double rhs) {
    coefficients.resize(objective.size(), 0.0);
    constraints.push_back({std::move(coefficients), sense, rhs});
  }
};

enum class LpStatus { optimal, infeasible, unbounded };

inline const char* to_string(LpStatus s) noexcept {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
  }
  return "unknown";
}

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> x;  ///< valid only when optimal
  double objective = 0.0;
  /// One multiplier per user constraint; the dual objective is b'y. For a
  /// minimization, <= rows carry y <= 0 and >= rows y >= 0.
  std::vector<double> duals;
  int pivots = 0;
};

namespace detail {

struct Tableau {
  std::size_t m = 0;     // rows
  std::size_t ncol = 0;  // structural + slack + artificial columns
  std::vector<double> a;  // m x (ncol + 1), last column is the right-hand side
  std::vector<double> d1;  // phase-1 reduced costs, last entry is -objective
  std::vector<double> d2;  // phase-2 reduced costs
  std::vector<std::size_t> basis;
  std::vector<bool> row_active;

  double& at(std::size_t r, std::size_t c) { return a[r * (ncol + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return a[r * (ncol + 1) + c]; }
  double rhs(std::size_t r) const { return at(r, ncol); }

  void pivot(std::size_t pr, std::size_t pc) {
    const std::size_t w = ncol + 1;
    double* prow = &a[pr * w];
    const double inv = 1.0 / prow[pc];
    for (std::size_t c = 0; c < w; ++c) prow[c] *= inv;
    prow[pc] = 1.0;
    for (std::size_t r = 0; r < m; ++r) {
      if (r == pr) continue;
      double* row = &a[r * w];
      const double f = row[pc];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < w; ++c) row[c] -= f * prow[c];
      row[pc] = 0.0;
    }
    for (auto* obj : {&d1, &d2}) {
      const double f = (*obj)[pc];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < w; ++c) (*obj)[c] -= f * prow[c];
      (*obj)[pc] = 0.0;
    }
    basis[pr] = pc;
  }
};

inline constexpr double kPivotTol = 1e-9;
inline constexpr double kBreakdownTol = 1e-12;
inline constexpr double kCostTol = 1e-11;

enum class StepResult { optimal, unbounded };

// Bland's rule: lowest-index improving column enters; ratio ties leave by
// lowest basic index.
inline StepResult run_simplex(Tableau& t, const std::vector<double>& cost,
                              std::size_t allowed_cols, int& pivots, int max_pivots) {
  while (true) {
    std::size_t enter = allowed_cols;
    for (std::size_t c = 0; c < allowed_cols; ++c) {
      if (cost[c] < -kCostTol) {
        enter = c;
        break;
      }
    }
    if (enter == allowed_cols) return StepResult::optimal;

    std::size_t leave = t.m;
    double best = 0.0;
    bool tiny_seen = false;
    for (std::size_t r = 0; r < t.m; ++r) {
      if (!t.row_active[r]) continue;
      const double v = t.at(r, enter);
      if (v <= kPivotTol) {
        if (v > kBreakdownTol) tiny_seen = true;
        continue;
      }
      const double ratio = std::max(t.rhs(r), 0.0) / v;
      if (leave == t.m || ratio < best - 1e-12 * (1.0 + best)) {
        leave = r;
        best = ratio;
      } else if (ratio <= best + 1e-12 * (1.0 + best) && t.basis[r] < t.basis[leave]) {
        leave = r;
        best = std::min(best, ratio);
      }
    }
    if (leave == t.m) {
      if (tiny_seen) throw NumericalBreakdown("solve_lp: only tiny pivots available");
      return StepResult::unbounded;
    }
    if (++pivots > max_pivots) throw NumericalBreakdown("solve_lp: pivot limit exceeded");
    t.pivot(leave, enter);
  }
}

}  // namespace detail

inline LpSolution solve_lp(const LpProblem& problem) {
  const std::size_t nvar = problem.num_variables();
  if (nvar == 0) throw DomainError("solve_lp: problem has no variables");
  std::vector<double> lower = problem.lower;
  std::vector<double> upper = problem.upper;
  if (lower.empty()) lower.assign(nvar, 0.0);
  if (upper.empty()) upper.assign(nvar, kInf);
  if (lower.size() != nvar || upper.size() != nvar) {
    detail::throw_dims("solve_lp: bound vectors do not match variable count");
  }
  for (double c : problem.objective)
    if (!std::isfinite(c)) throw NonFinite("solve_lp: non-finite objective");
  for (const auto& con : problem.constraints) {
    if (con.coefficients.size() != nvar) detail::throw_dims("solve_lp: constraint row has wrong length");
    if (!std::isfinite(con.rhs)) throw NonFinite("solve_lp: non-finite right-hand side");
    for (double v : con.coefficients)
      if (!std::isfinite(v)) throw NonFinite("solve_lp: non-finite constraint coefficient");
  }

  LpSolution out;
  for (std::size_t i = 0; i < nvar; ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i] ||
        lower[i] == kInf || upper[i] == -kInf) {
      out.status = LpStatus::infeasible;
      return out;
    }
  }

  // x_i = offset_i + sum (sign * y_col) with every y >= 0.
  struct Map {
    double offset = 0.0;
    std::size_t col = 0;
    double sign = 1.0;
    std::size_t neg_col = 0;  // free variables only
    bool free = false;
  };
  std::vector<Map> map(nvar);
  std::size_t ny = 0;
  struct BoundRow {
    std::size_t col;
    double width;
  };
  std::vector<BoundRow> bound_rows;
  for (std::size_t i = 0; i < nvar; ++i) {
    const bool lo = std::isfinite(lower[i]);
    const bool hi = std::isfinite(upper[i]);
    Map& mp = map[i];
    if (lo) {
      mp = {lower[i], ny++, 1.0, 0, false};
      if (hi) bound_rows.push_back({mp.col, upper[i] - lower[i]});
    } else if (hi) {
      mp = {upper[i], ny++, -1.0, 0, false};
    } else {
      mp.col = ny++;
      mp.neg_col = ny++;
      mp.free = true;
    }
  }

  // Standard-form rows: coefficients over y, sense, rhs.
  struct Row {
    std::vector<double> coef;
    Sense sense;
    double rhs;
    double flip = 1.0;
  };
  std::vector<Row> rows;
  rows.reserve(problem.constraints.size() + bound_rows.size());
  for (const auto& con : problem.constraints) {
    Row r{std::vector<double>(ny, 0.0), con.sense, con.rhs};
    for (std::size_t i = 0; i < nvar; ++i) {
      const double a = con.coefficients[i];
      if (a == 0.0) continue;
      r.rhs -= a * map[i].offset;
      r.coef[map[i].col] += a * map[i].sign;
      if (map[i].free) r.coef[map[i].neg_col] -= a;
    }
    rows.push_back(std::move(r));
  }
  for (const auto& br : bound_rows) {
    Row r{std::vector<double>(ny, 0.0), Sense::less_equal, br.width};
    r.coef[br.col] = 1.0;
    rows.push_back(std::move(r));
  }
  for (auto& r : rows) {
    if (r.rhs < 0.0) {
      for (double& v : r.coef) v = -v;
      r.rhs = -r.rhs;
      r.flip = -1.0;
      if (r.sense == Sense::less_equal) {
        r.sense = Sense::greater_equal;
      } else if (r.sense == Sense::greater_equal) {
        r.sense = Sense::less_equal;
      }
    }
  }

  const std::size_t m = rows.size();
  std::size_t nslack = 0;
  std::size_t nart = 0;
  for (const auto& r : rows) {
    if (r.sense != Sense::equal) ++nslack;
    if (r.sense != Sense::less_equal) ++nart;
  }
  detail::Tableau t;
  t.m = m;
  t.ncol = ny + nslack + nart;
  const std::size_t w = t.ncol + 1;
  t.a.assign(m * w, 0.0);
  t.d1.assign(w, 0.0);
  t.d2.assign(w, 0.0);
  t.basis.assign(m, 0);
  t.row_active.assign(m, true);

  std::vector<std::size_t> identity_col(m);  // column holding B^{-1} e_r
  std::size_t slack_at = ny;
  std::size_t art_at = ny + nslack;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < ny; ++c) t.at(r, c) = rows[r].coef[c];
    t.at(r, t.ncol) = rows[r].rhs;
    switch (rows[r].sense) {
      case Sense::less_equal:
        t.at(r, slack_at) = 1.0;
        t.basis[r] = slack_at;
        identity_col[r] = slack_at++;
        break;
      case Sense::greater_equal:
        t.at(r, slack_at++) = -1.0;
        t.at(r, art_at) = 1.0;
        t.basis[r] = art_at;
        identity_col[r] = art_at++;
        break;
      case Sense::equal:
        t.at(r, art_at) = 1.0;
        t.basis[r] = art_at;
        identity_col[r] = art_at++;
        break;
    }
  }
  const std::size_t first_art = ny + nslack;

  for (std::size_t i = 0; i < nvar; ++i) {
    const double c = problem.objective[i];
    t.d2[map[i].col] += c * map[i].sign;
    if (map[i].free) t.d2[map[i].neg_col] -= c;
  }
  for (std::size_t c = first_art; c < t.ncol; ++c) t.d1[c] = 1.0;
  for (std::size_t r = 0; r < m; ++r) {
    if (t.basis[r] < first_art) continue;
    for (std::size_t c = 0; c < w; ++c) t.d1[c] -= t.at(r, c);
  }

  double bscale = 1.0;
  for (const auto& r : rows) bscale = std::max(bscale, std::abs(r.rhs));
  const int max_pivots = 50 * static_cast<int>(m + t.ncol) + 1000;

  if (nart > 0) {
    detail::run_simplex(t, t.d1, t.ncol, out.pivots, max_pivots);
    if (-t.d1[t.ncol] > 1e-9 * bscale) {
      out.status = LpStatus::infeasible;
      return out;
    }
    // Drive zero-level artificials out of the basis; rows where that is
    // impossible are linearly dependent and dropped.
    for (std::size_t r = 0; r < m; ++r) {
      if (t.basis[r] < first_art) continue;
      std::size_t best = first_art;
      double mag = detail::kPivotTol;
      for (std::size_t c = 0; c < first_art; ++c) {
        if (std::abs(t.at(r, c)) > mag) {
          mag = std::abs(t.at(r, c));
          best = c;
        }
      }
      if (best < first_art) {
        ++out.pivots;
        t.pivot(r, best);
      } else {
        t.row_active[r] = false;
      }
    }
  }

  if (detail::run_simplex(t, t.d2, first_art, out.pivots, max_pivots) ==
      detail::StepResult::unbounded) {
    out.status = LpStatus::unbounded;
    return out;
  }

  std::vector<double> y(t.ncol, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    if (t.row_active[r]) y[t.basis[r]] = std::max(t.rhs(r), 0.0);
  }
  out.x.assign(nvar, 0.0);
  for (std::size_t i = 0; i < nvar; ++i) {
    const Map& mp = map[i];
    out.x[i] = mp.free ? y[mp.col] - y[mp.neg_col] : mp.offset + mp.sign * y[mp.col];
  }
  out.objective = 0.0;
  for (std::size_t i = 0; i < nvar; ++i) out.objective += problem.objective[i] * out.x[i];

  out.duals.assign(problem.constraints.size(), 0.0);
  for (std::size_t r = 0; r < problem.constraints.size(); ++r) {
    if (!t.row_active[r]) continue;
    out.duals[r] = -t.d2[identity_col[r]] * rows[r].flip;
  }

  // Certify against the original problem before returning.
  for (std::size_t i = 0; i < nvar; ++i) {
    const double tol = 1e-9 * (1.0 + std::abs(out.x[i]));
    if (out.x[i] < lower[i] - tol || out.x[i] > upper[i] + tol) {
      throw NumericalBreakdown("solve_lp: solution violates variable bound " + std::to_string(i));
    }
  }
  for (std::size_t r = 0; r < problem.constraints.size(); ++r) {
    const auto& con = problem.constraints[r];
    double lhs = 0.0;
    for (std::size_t i = 0; i < nvar; ++i) lhs += con.coefficients[i] * out.x[i];
    const double tol = 1e-9 * (1.0 + std::abs(con.rhs));
    const bool ok = con.sense == Sense::less_equal   ? lhs <= con.rhs + tol
                    : con.sense == Sense::greater_equal ? lhs >= con.rhs - tol
                                                        : std::abs(lhs - con.rhs) <= tol;
    if (!ok) throw NumericalBreakdown("solve_lp: solution violates constraint " + std::to_string(r));
  }
  out.status = LpStatus::optimal;
  return out;
}

}  // namespace slasso
