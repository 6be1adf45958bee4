#pragma once

#include <string>
#include <utility>
#include <vector>

namespace esb::lp {

enum class RowSense { LessEqual, GreaterEqual, Equal };

struct Row {
  std::vector<std::pair<int, double>> coefs;  // (column, value)
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
};

/// min cost'x + objective_offset  s.t.  rows, col_lb <= x <= col_ub.
/// All column bounds must be finite.
struct LpProblem {
  int num_cols = 0;
  std::vector<double> col_lb;
  std::vector<double> col_ub;
  std::vector<double> cost;
  double objective_offset = 0.0;
  std::vector<Row> rows;

  int add_column(double lb, double ub, double c = 0.0);
  void add_row(std::vector<std::pair<int, double>> coefs, RowSense sense, double rhs);
  /// Throws std::invalid_argument when an invariant does not hold.
  void validate() const;
};

enum class LpStatus { Optimal, Infeasible, IterationLimit, Numerical };

std::string to_string(LpStatus status);

struct LpSolution {
  LpStatus status = LpStatus::Numerical;
  double objective = 0.0;
  std::vector<double> x;
  /// Sensitivity of the optimum with respect to each row's rhs.
  std::vector<double> row_duals;
  std::vector<double> reduced_costs;
  /// Largest row or bound violation of x.
  double primal_residual = 0.0;
  /// |primal objective - dual bound| / (1 + |objective|).
  double duality_gap = 0.0;
  int iterations = 0;

  bool optimal() const { return status == LpStatus::Optimal; }
};

struct LpOptions {
  double feas_tol = 1e-8;
  double opt_tol = 1e-7;
  double pivot_tol = 1e-9;
  int max_iterations = 0;  // 0 selects a size-dependent default
  int bland_after_degenerate = 50;
  int refactor_interval = 50;
};

/// Bounded-variable two-phase primal simplex on a dense tableau. Pure and
/// deterministic: the same problem always yields the same status and point.
LpSolution solve_lp(const LpProblem &problem, const LpOptions &options = {});

}  // namespace esb::lp
