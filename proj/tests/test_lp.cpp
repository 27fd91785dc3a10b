#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "slasso/lp.hpp"

using namespace slasso;

TEST(Simplex, TextbookMaximization) {
  // max x + y s.t. x + 2y <= 4, 3x + y <= 6 -> (8/5, 6/5).
  LpProblem lp;
  lp.add_variable(-1.0);
  lp.add_variable(-1.0);
  lp.add_constraint({1.0, 2.0}, Sense::less_equal, 4.0);
  lp.add_constraint({3.0, 1.0}, Sense::less_equal, 6.0);
  const LpSolution s = solve_lp(lp);
  ASSERT_EQ(s.status, LpStatus::optimal);
  EXPECT_NEAR(s.x[0], 1.6, 1e-12);
  EXPECT_NEAR(s.x[1], 1.2, 1e-12);
  EXPECT_NEAR(s.objective, -2.8, 1e-12);
  // Both rows bind; multipliers y with A'y = c: y = (-2/5, -1/5).
  EXPECT_NEAR(s.duals[0], -0.4, 1e-12);
  EXPECT_NEAR(s.duals[1], -0.2, 1e-12);
}

TEST(Simplex, EqualityGreaterAndFreeVariables) {
  // min x - y, x + y = 1, x - y >= -3, x free, y in [-1, 1.5].
  LpProblem lp;
  lp.add_variable(1.0, -kInf, kInf);
  lp.add_variable(-1.0, -1.0, 1.5);
  lp.add_constraint({1.0, 1.0}, Sense::equal, 1.0);
  lp.add_constraint({1.0, -1.0}, Sense::greater_equal, -3.0);
  const LpSolution s = solve_lp(lp);
  ASSERT_EQ(s.status, LpStatus::optimal);
  EXPECT_NEAR(s.x[0], -0.5, 1e-12);
  EXPECT_NEAR(s.x[1], 1.5, 1e-12);
  EXPECT_NEAR(s.objective, -2.0, 1e-12);
}

TEST(Simplex, UpperBoundedOnlyVariable) {
  // min -x with x <= 2 and no lower bound but a row x >= -10.
  LpProblem lp;
  lp.add_variable(-1.0, -kInf, 2.0);
  lp.add_constraint({1.0}, Sense::greater_equal, -10.0);
  const LpSolution s = solve_lp(lp);
  ASSERT_EQ(s.status, LpStatus::optimal);
  EXPECT_NEAR(s.x[0], 2.0, 1e-12);
}

TEST(Simplex, Infeasible) {
  LpProblem lp;
  lp.add_variable(1.0);
  lp.add_constraint({1.0}, Sense::greater_equal, 2.0);
  lp.add_constraint({1.0}, Sense::less_equal, 1.0);
  EXPECT_EQ(solve_lp(lp).status, LpStatus::infeasible);
  LpProblem bounds;
  bounds.add_variable(1.0, 3.0, 1.0);
  EXPECT_EQ(solve_lp(bounds).status, LpStatus::infeasible);
}

TEST(Simplex, Unbounded) {
  LpProblem lp;
  lp.add_variable(-1.0);
  lp.add_variable(0.0);
  lp.add_constraint({1.0, -1.0}, Sense::less_equal, 1.0);
  EXPECT_EQ(solve_lp(lp).status, LpStatus::unbounded);
}

TEST(Simplex, BlandRuleTerminatesOnCyclingExample) {
  // Beale's degenerate example, which cycles under the largest-coefficient rule.
  LpProblem lp;
  for (double c : {-0.75, 20.0, -0.5, 6.0}) lp.add_variable(c);
  lp.add_constraint({0.25, -8.0, -1.0, 9.0}, Sense::less_equal, 0.0);
  lp.add_constraint({0.5, -12.0, -0.5, 3.0}, Sense::less_equal, 0.0);
  lp.add_constraint({0.0, 0.0, 1.0, 0.0}, Sense::less_equal, 1.0);
  const LpSolution s = solve_lp(lp);
  ASSERT_EQ(s.status, LpStatus::optimal);
  // Same problem by vertex enumeration, with x >= 0 as rows.
  oracle::Mat g{{0.25, -8, -1, 9}, {0.5, -12, -0.5, 3}, {0, 0, 1, 0},
                {-1, 0, 0, 0},     {0, -1, 0, 0},      {0, 0, -1, 0}, {0, 0, 0, -1}};
  oracle::Vec h{0, 0, 1, 0, 0, 0, 0};
  // Unbounded directions would make enumeration meaningless; add a loose box.
  for (int k = 0; k < 4; ++k) {
    oracle::Vec r(4, 0.0);
    r[static_cast<std::size_t>(k)] = 1.0;
    g.push_back(r);
    h.push_back(1e3);
  }
  const auto ref = oracle::lp_vertex_enumeration({-0.75, 20, -0.5, 6}, g, h);
  ASSERT_TRUE(ref.has_value());
  EXPECT_NEAR(s.objective, *ref, 1e-10);
}

TEST(Simplex, RandomBoxedProblemsMatchVertexEnumeration) {
  std::mt19937_64 rng(1000);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> slack(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 2);
    const std::size_t m = 2 + static_cast<std::size_t>(trial % 4);
    oracle::Vec x0(n), c(n);
    for (auto& v : x0) v = 2.0 * u(rng);
    for (auto& v : c) v = u(rng);
    LpProblem lp;
    for (std::size_t k = 0; k < n; ++k) lp.add_variable(c[k], -5.0, 5.0);
    oracle::Mat g;
    oracle::Vec h;
    for (std::size_t r = 0; r < m; ++r) {
      oracle::Vec row(n);
      double lhs = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        row[k] = u(rng);
        lhs += row[k] * x0[k];
      }
      if (r % 3 == 2) {
        const double rhs = lhs - slack(rng);
        lp.add_constraint(row, Sense::greater_equal, rhs);
        oracle::Vec neg(n);
        for (std::size_t k = 0; k < n; ++k) neg[k] = -row[k];
        g.push_back(neg);
        h.push_back(-rhs);
      } else {
        const double rhs = lhs + slack(rng);
        lp.add_constraint(row, Sense::less_equal, rhs);
        g.push_back(row);
        h.push_back(rhs);
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      oracle::Vec up(n, 0.0), lo(n, 0.0);
      up[k] = 1.0;
      lo[k] = -1.0;
      g.push_back(up);
      h.push_back(5.0);
      g.push_back(lo);
      h.push_back(5.0);
    }
    const LpSolution s = solve_lp(lp);
    ASSERT_EQ(s.status, LpStatus::optimal) << "trial " << trial;
    // Primal feasibility.
    for (std::size_t r = 0; r < g.size(); ++r) {
      double lhs = 0.0;
      for (std::size_t k = 0; k < n; ++k) lhs += g[r][k] * s.x[k];
      ASSERT_LE(lhs, h[r] + 1e-9) << "trial " << trial << " row " << r;
    }
    const auto ref = oracle::lp_vertex_enumeration(c, g, h);
    ASSERT_TRUE(ref.has_value());
    ASSERT_NEAR(s.objective, *ref, 1e-9) << "trial " << trial;
    ++checked;
  }
  EXPECT_EQ(checked, 1000);
}

TEST(Simplex, CoveringProblemsHaveDualCertificates) {
  // min c'x, Gx >= h, x >= 0 with positive data: feasible and bounded.
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> pos(0.1, 2.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 5);
    const std::size_t m = 1 + static_cast<std::size_t>(trial % 4);
    LpProblem lp;
    for (std::size_t k = 0; k < n; ++k) lp.add_variable(pos(rng));
    std::vector<std::vector<double>> g(m, std::vector<double>(n));
    std::vector<double> h(m);
    for (std::size_t r = 0; r < m; ++r) {
      for (auto& v : g[r]) v = pos(rng);
      h[r] = pos(rng);
      lp.add_constraint(g[r], Sense::greater_equal, h[r]);
    }
    const LpSolution s = solve_lp(lp);
    ASSERT_EQ(s.status, LpStatus::optimal);
    double dual_obj = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      EXPECT_GE(s.duals[r], -1e-12);
      dual_obj += h[r] * s.duals[r];
    }
    for (std::size_t k = 0; k < n; ++k) {
      double aty = 0.0;
      for (std::size_t r = 0; r < m; ++r) aty += g[r][k] * s.duals[r];
      EXPECT_LE(aty, lp.objective[k] + 1e-10);
    }
    EXPECT_NEAR(dual_obj, s.objective, 1e-10 * (1.0 + std::abs(s.objective)));
  }
}

TEST(Simplex, DeterministicAcrossCalls) {
  LpProblem lp;
  for (int k = 0; k < 6; ++k) lp.add_variable(k % 2 ? 1.0 : -1.0, 0.0, 3.0);
  lp.add_constraint({1, 1, 1, 1, 1, 1}, Sense::less_equal, 7.0);
  lp.add_constraint({1, -1, 1, -1, 1, -1}, Sense::greater_equal, -2.0);
  const LpSolution a = solve_lp(lp);
  const LpSolution b = solve_lp(lp);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.duals, b.duals);
  EXPECT_EQ(a.pivots, b.pivots);
}

TEST(Simplex, Validation) {
  LpProblem empty;
  EXPECT_THROW(solve_lp(empty), DomainError);
  LpProblem bad;
  bad.objective = {1.0, 1.0};
  bad.lower = {0.0};
  EXPECT_THROW(solve_lp(bad), DimensionMismatch);
}
