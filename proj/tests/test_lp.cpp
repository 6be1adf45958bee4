#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "esb/lp.hpp"
#include "support/oracle_simplex.hpp"
#include "support/random_lp.hpp"

using namespace esb;
using namespace esb::lp;

TEST_CASE("single column maximised to its upper bound") {
  LpProblem p;
  p.add_column(0.0, 1.0, -1.0);
  auto sol = solve_lp(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-1.0));
  CHECK(sol.x[0] == doctest::Approx(1.0));
}

TEST_CASE("row outside the column range is infeasible") {
  LpProblem p;
  p.add_column(0.0, 1.0, 1.0);
  p.add_row({{0, 1.0}}, RowSense::GreaterEqual, 2.0);
  CHECK(solve_lp(p).status == LpStatus::Infeasible);
}

TEST_CASE("empty rows are checked and dropped") {
  LpProblem p;
  p.add_column(0.0, 2.0, 1.0);
  p.add_row({}, RowSense::LessEqual, 1.0);
  p.add_row({{0, 0.0}}, RowSense::GreaterEqual, -1.0);
  auto sol = solve_lp(p);
  REQUIRE(sol.optimal());
  CHECK(sol.objective == doctest::Approx(0.0));

  p.add_row({}, RowSense::GreaterEqual, 1.0);
  CHECK(solve_lp(p).status == LpStatus::Infeasible);
}

TEST_CASE("equality rows and duals") {
  // min x + 2y  s.t. x + y = 3, x <= 2  over [0,5]^2  -> x=2, y=1, obj 4
  LpProblem p;
  p.add_column(0, 5, 1);
  p.add_column(0, 5, 2);
  p.add_row({{0, 1}, {1, 1}}, RowSense::Equal, 3);
  p.add_row({{0, 1}}, RowSense::LessEqual, 2);
  p.objective_offset = 0.5;
  auto sol = solve_lp(p);
  REQUIRE(sol.optimal());
  CHECK(sol.objective == doctest::Approx(4.5));
  CHECK(sol.x[0] == doctest::Approx(2));
  CHECK(sol.x[1] == doctest::Approx(1));
  // Raising the equality rhs by one costs 2 (y grows); relaxing x <= 2 saves 1.
  CHECK(sol.row_duals[0] == doctest::Approx(2));
  CHECK(sol.row_duals[1] == doctest::Approx(-1));
  CHECK(sol.duality_gap <= 1e-7);
}

TEST_CASE("duplicate coefficients in a row are summed") {
  LpProblem p;
  p.add_column(0, 10, -1);
  p.add_row({{0, 1.0}, {0, 1.0}}, RowSense::LessEqual, 4);  // 2x <= 4
  auto sol = solve_lp(p);
  REQUIRE(sol.optimal());
  CHECK(sol.x[0] == doctest::Approx(2));
}

TEST_CASE("validate rejects bad problems") {
  LpProblem p;
  p.add_column(1.0, 0.0);
  CHECK_THROWS_AS(solve_lp(p), std::invalid_argument);
  LpProblem q;
  q.add_column(0, 1);
  q.add_row({{3, 1.0}}, RowSense::LessEqual, 1);
  CHECK_THROWS_AS(solve_lp(q), std::invalid_argument);
}

TEST_CASE("degenerate vertex does not cycle") {
  // Beale-style degenerate LP, boxed.
  LpProblem p;
  for (double c : {-0.75, 150.0, -0.02, 6.0}) p.add_column(0, 100, c);
  p.add_row({{0, 0.25}, {1, -60}, {2, -0.04}, {3, 9}}, RowSense::LessEqual, 0);
  p.add_row({{0, 0.5}, {1, -90}, {2, -0.02}, {3, 3}}, RowSense::LessEqual, 0);
  p.add_row({{2, 1}}, RowSense::LessEqual, 1);
  auto sol = solve_lp(p);
  REQUIRE(sol.optimal());
  auto oracle = testing::oracle_simplex(p);
  REQUIRE(oracle.feasible);
  CHECK(sol.objective == doctest::Approx(oracle.objective).epsilon(1e-9));
}

TEST_CASE("random LPs agree with the reference simplex") {
  std::mt19937_64 rng(12345);
  for (int trial = 0; trial < 60; ++trial) {
    const int cols = 2 + static_cast<int>(rng() % 20);
    const int rows = 1 + static_cast<int>(rng() % 15);
    auto p = testing::random_lp(rng, cols, rows, trial % 2 == 0);
    auto sol = solve_lp(p);
    auto ref = testing::oracle_simplex(p);
    CAPTURE(trial);
    REQUIRE(sol.status != LpStatus::Numerical);
    CHECK((sol.status == LpStatus::Optimal) == ref.feasible);
    if (ref.feasible && sol.optimal()) {
      CHECK(std::abs(sol.objective - ref.objective) <= 1e-7 * (1 + std::abs(ref.objective)));
      CHECK(sol.primal_residual <= 1e-8);
      CHECK(sol.duality_gap <= 1e-7);
    }
  }
}

TEST_CASE("shrinking a column range never lowers the optimum") {
  std::mt19937_64 rng(99);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    auto p = testing::random_lp(rng, 8, 6, true);
    auto base = solve_lp(p);
    REQUIRE(base.optimal());
    const int j = static_cast<int>(rng() % p.num_cols);
    const double mid = testing::uniform(rng, p.col_lb[j], p.col_ub[j]);
    auto q = p;
    if (trial % 2) q.col_lb[j] = mid; else q.col_ub[j] = mid;
    auto sub = solve_lp(q);
    if (sub.optimal()) {
      CHECK(sub.objective >= base.objective - 1e-7);
      ++checked;
    } else {
      CHECK(sub.status == LpStatus::Infeasible);
    }
  }
  CHECK(checked > 10);
}

TEST_CASE("solve_lp is deterministic") {
  std::mt19937_64 rng(7);
  auto p = testing::random_lp(rng, 15, 10, true);
  auto a = solve_lp(p);
  auto b = solve_lp(p);
  CHECK(a.status == b.status);
  CHECK(a.objective == b.objective);
  CHECK(a.x == b.x);
}
