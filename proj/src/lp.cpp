#include "esb/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>

namespace esb::lp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Phase { FindFeasible, Optimize };
enum class PhaseResult { Optimal, IterationLimit, Numerical };

// Columns are laid out as [structural | row activity | artificial]. Row i reads
//   sum_j a_ij x_j - s_i + sigma_i r_i = 0,
// so every constraint is carried by the bounds of its activity column s_i.
class BoundedSimplex {
 public:
  BoundedSimplex(const LpProblem &p, const LpOptions &opt) : problem_(p), opt_(opt) {}

  LpSolution run();

 private:
  bool setup(LpSolution &out);
  bool refactor();
  PhaseResult iterate(Phase phase);
  int price() const;
  void pivot(int r, int j);
  void finish(LpSolution &out);

  const LpProblem &problem_;
  const LpOptions &opt_;

  int m_ = 0;       // kept rows
  int n_struct_ = 0;
  int n_cols_ = 0;
  int first_art_ = 0;
  std::vector<int> row_map_;  // kept row -> original row
  std::vector<double> row_lo_, row_hi_;
  Matrix full_;  // m x n_cols, never modified after setup
  Matrix tab_;   // B^-1 * full_
  std::vector<double> lo_, hi_, cost_, x_, d_;
  std::vector<int> basis_;
  std::vector<int> basic_row_;  // -1 when nonbasic
  std::vector<char> at_upper_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;

  int iterations_ = 0;
  int max_iterations_ = 0;
  int since_refactor_ = 0;
  int degenerate_streak_ = 0;
  bool bland_ = false;
};

bool BoundedSimplex::setup(LpSolution &out) {
  n_struct_ = problem_.num_cols;
  const int n_rows = static_cast<int>(problem_.rows.size());

  std::vector<std::map<int, double>> merged(n_rows);
  for (int i = 0; i < n_rows; ++i)
    for (const auto &[col, val] : problem_.rows[i].coefs) merged[i][col] += val;

  for (int i = 0; i < n_rows; ++i) {
    const Row &row = problem_.rows[i];
    double lo = row.sense == RowSense::LessEqual ? -kInf : row.rhs;
    double hi = row.sense == RowSense::GreaterEqual ? kInf : row.rhs;
    bool nonzero = false;
    for (const auto &[col, val] : merged[i]) nonzero |= val != 0.0;
    if (!nonzero) {
      if (lo > opt_.feas_tol || hi < -opt_.feas_tol) {
        out.status = LpStatus::Infeasible;
        return false;
      }
      continue;
    }
    row_map_.push_back(i);
    row_lo_.push_back(lo);
    row_hi_.push_back(hi);
  }
  m_ = static_cast<int>(row_map_.size());

  // Structural columns start at their lower bound; rows whose activity then
  // falls outside [lo, hi] receive an artificial column.
  std::vector<double> xs(problem_.col_lb.begin(), problem_.col_lb.end());
  std::vector<double> act(m_, 0.0), act_min(m_, 0.0), act_max(m_, 0.0);
  for (int r = 0; r < m_; ++r) {
    for (const auto &[col, val] : merged[row_map_[r]]) {
      act[r] += val * xs[col];
      act_min[r] += std::min(val * problem_.col_lb[col], val * problem_.col_ub[col]);
      act_max[r] += std::max(val * problem_.col_lb[col], val * problem_.col_ub[col]);
    }
  }

  std::vector<int> art_rows;
  std::vector<double> s_lo(m_), s_hi(m_);
  for (int r = 0; r < m_; ++r) {
    // Replace infinite sides by the implied activity range so every column
    // is boxed; the range is always valid over the column bounds.
    s_lo[r] = std::isfinite(row_lo_[r]) ? row_lo_[r] : std::min(act_min[r], row_hi_[r]);
    s_hi[r] = std::isfinite(row_hi_[r]) ? row_hi_[r] : std::max(act_max[r], row_lo_[r]);
    if (act[r] < s_lo[r] - opt_.feas_tol || act[r] > s_hi[r] + opt_.feas_tol)
      art_rows.push_back(r);
  }

  first_art_ = n_struct_ + m_;
  n_cols_ = first_art_ + static_cast<int>(art_rows.size());
  full_ = Matrix::Zero(m_, n_cols_);
  for (int r = 0; r < m_; ++r) {
    for (const auto &[col, val] : merged[row_map_[r]]) full_(r, col) = val;
    full_(r, n_struct_ + r) = -1.0;
  }

  lo_.assign(n_cols_, 0.0);
  hi_.assign(n_cols_, 0.0);
  x_.assign(n_cols_, 0.0);
  at_upper_.assign(n_cols_, 0);
  basis_.assign(m_, -1);
  basic_row_.assign(n_cols_, -1);
  for (int j = 0; j < n_struct_; ++j) {
    lo_[j] = problem_.col_lb[j];
    hi_[j] = problem_.col_ub[j];
    x_[j] = lo_[j];
  }
  for (int r = 0; r < m_; ++r) {
    const int s = n_struct_ + r;
    lo_[s] = s_lo[r];
    hi_[s] = s_hi[r];
    basis_[r] = s;
    x_[s] = act[r];
  }
  for (std::size_t k = 0; k < art_rows.size(); ++k) {
    const int r = art_rows[k];
    const int s = n_struct_ + r;
    const int a = first_art_ + static_cast<int>(k);
    const bool below = act[r] < s_lo[r];
    x_[s] = below ? s_lo[r] : s_hi[r];
    at_upper_[s] = below ? 0 : 1;
    const double residual = act[r] - x_[s];
    full_(r, a) = residual > 0 ? -1.0 : 1.0;
    lo_[a] = 0.0;
    hi_[a] = kInf;
    x_[a] = std::abs(residual);
    basis_[r] = a;
  }
  for (int r = 0; r < m_; ++r) basic_row_[basis_[r]] = r;

  cost_.assign(n_cols_, 0.0);
  for (int a = first_art_; a < n_cols_; ++a) cost_[a] = 1.0;

  max_iterations_ = opt_.max_iterations > 0 ? opt_.max_iterations : 20 * (m_ + n_cols_) + 1000;
  return true;
}

bool BoundedSimplex::refactor() {
  since_refactor_ = 0;
  d_.assign(n_cols_, 0.0);
  if (m_ == 0) {
    tab_.resize(0, n_cols_);
    d_ = cost_;
    return true;
  }
  Eigen::MatrixXd basis_mat(m_, m_);
  for (int r = 0; r < m_; ++r) basis_mat.col(r) = full_.col(basis_[r]);
  lu_.compute(basis_mat);
  if (!(lu_.rcond() > 1e-13)) return false;

  tab_ = lu_.solve(Eigen::MatrixXd(full_));

  Vector rhs = Vector::Zero(m_);
  for (int j = 0; j < n_cols_; ++j)
    if (basic_row_[j] < 0 && x_[j] != 0.0) rhs -= full_.col(j) * x_[j];
  Vector xb = lu_.solve(rhs);
  for (int r = 0; r < m_; ++r) x_[basis_[r]] = xb(r);

  Vector cb(m_);
  for (int r = 0; r < m_; ++r) cb(r) = cost_[basis_[r]];
  Vector y = lu_.transpose().solve(cb);
  Vector red = Eigen::Map<const Vector>(cost_.data(), n_cols_) - full_.transpose() * y;
  for (int j = 0; j < n_cols_; ++j) d_[j] = basic_row_[j] >= 0 ? 0.0 : red(j);
  return xb.allFinite() && red.allFinite();
}

int BoundedSimplex::price() const {
  const double tol = opt_.opt_tol * 1e-2;
  int best = -1;
  double best_val = 0.0;
  for (int j = 0; j < n_cols_; ++j) {
    if (basic_row_[j] >= 0 || !(hi_[j] > lo_[j])) continue;
    const double dj = d_[j];
    const bool eligible = at_upper_[j] ? dj > tol : dj < -tol;
    if (!eligible) continue;
    if (bland_) return j;
    if (std::abs(dj) > best_val) {
      best_val = std::abs(dj);
      best = j;
    }
  }
  return best;
}

void BoundedSimplex::pivot(int r, int j) {
  const double p = tab_(r, j);
  tab_.row(r) /= p;
  for (int i = 0; i < m_; ++i) {
    if (i == r) continue;
    const double f = tab_(i, j);
    if (f != 0.0) tab_.row(i) -= f * tab_.row(r);
  }
  const double dj = d_[j];
  if (dj != 0.0)
    for (int k = 0; k < n_cols_; ++k) d_[k] -= dj * tab_(r, k);
  d_[j] = 0.0;
  basic_row_[basis_[r]] = -1;
  basis_[r] = j;
  basic_row_[j] = r;
}

PhaseResult BoundedSimplex::iterate(Phase phase) {
  if (!refactor()) return PhaseResult::Numerical;
  degenerate_streak_ = 0;
  bland_ = false;
  while (true) {
    if (iterations_ >= max_iterations_) return PhaseResult::IterationLimit;
    if (since_refactor_ >= opt_.refactor_interval && !refactor()) return PhaseResult::Numerical;

    const int j = price();
    if (j < 0) return PhaseResult::Optimal;
    ++iterations_;

    const double dir = at_upper_[j] ? -1.0 : 1.0;
    double step = hi_[j] - lo_[j];
    int leave = -1;
    double leave_piv = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double tij = tab_(i, j);
      if (std::abs(tij) <= opt_.pivot_tol) continue;
      const int b = basis_[i];
      const double rate = tij * dir;  // x_b decreases at this rate
      double limit;
      if (rate > 0) {
        limit = (x_[b] - lo_[b]) / rate;
      } else {
        if (!std::isfinite(hi_[b])) continue;
        limit = (hi_[b] - x_[b]) / -rate;
      }
      limit = std::max(limit, 0.0);
      bool take = limit < step - 1e-12;
      if (!take && leave >= 0 && limit <= step + 1e-12)
        take = bland_ ? b < basis_[leave] : std::abs(tij) > leave_piv;
      if (take) {
        step = limit;
        leave = i;
        leave_piv = std::abs(tij);
      }
    }
    if (!std::isfinite(step)) return PhaseResult::Numerical;

    if (step > 1e-12) {
      for (int i = 0; i < m_; ++i) {
        const double tij = tab_(i, j);
        if (tij != 0.0) x_[basis_[i]] -= tij * dir * step;
      }
      x_[j] += dir * step;
      degenerate_streak_ = 0;
      bland_ = false;
    } else if (++degenerate_streak_ >= opt_.bland_after_degenerate) {
      bland_ = true;
    }

    if (leave < 0) {
      at_upper_[j] = !at_upper_[j];
      x_[j] = at_upper_[j] ? hi_[j] : lo_[j];
      continue;
    }
    const int b = basis_[leave];
    const bool hits_lower = tab_(leave, j) * dir > 0;
    x_[b] = hits_lower ? lo_[b] : hi_[b];
    at_upper_[b] = hits_lower ? 0 : 1;
    pivot(leave, j);
    if (phase == Phase::FindFeasible && b >= first_art_) {
      // An artificial that leaves never returns.
      hi_[b] = 0.0;
      x_[b] = 0.0;
      at_upper_[b] = 0;
    }
    ++since_refactor_;
  }
}

void BoundedSimplex::finish(LpSolution &out) {
  out.x.assign(x_.begin(), x_.begin() + n_struct_);
  double obj = problem_.objective_offset;
  for (int j = 0; j < n_struct_; ++j) obj += problem_.cost[j] * out.x[j];
  out.objective = obj;

  double residual = 0.0;
  for (int j = 0; j < n_struct_; ++j) {
    residual = std::max(residual, problem_.col_lb[j] - out.x[j]);
    residual = std::max(residual, out.x[j] - problem_.col_ub[j]);
  }
  for (const Row &row : problem_.rows) {
    double act = 0.0;
    for (const auto &[col, val] : row.coefs) act += val * out.x[col];
    if (row.sense != RowSense::GreaterEqual) residual = std::max(residual, act - row.rhs);
    if (row.sense != RowSense::LessEqual) residual = std::max(residual, row.rhs - act);
  }
  out.primal_residual = residual;

  Vector y = Vector::Zero(m_);
  if (m_ > 0) {
    Vector cb(m_);
    for (int r = 0; r < m_; ++r) cb(r) = cost_[basis_[r]];
    y = lu_.transpose().solve(cb);
  }
  out.row_duals.assign(problem_.rows.size(), 0.0);
  for (int r = 0; r < m_; ++r) out.row_duals[row_map_[r]] = y(r);

  // Weak duality over the boxed columns: any y gives the bound below.
  out.reduced_costs.assign(n_struct_, 0.0);
  double dual = problem_.objective_offset;
  for (int j = 0; j < n_struct_; ++j) {
    double dj = problem_.cost[j];
    for (int r = 0; r < m_; ++r) dj -= y(r) * full_(r, j);
    out.reduced_costs[j] = dj;
    dual += std::min(dj * lo_[j], dj * hi_[j]);
  }
  for (int r = 0; r < m_; ++r) {
    const int s = n_struct_ + r;
    dual += std::min(y(r) * lo_[s], y(r) * hi_[s]);
  }
  out.duality_gap = std::abs(obj - dual) / (1.0 + std::abs(obj));

  if (out.primal_residual > opt_.feas_tol || out.duality_gap > opt_.opt_tol || !std::isfinite(obj))
    out.status = LpStatus::Numerical;
  else
    out.status = LpStatus::Optimal;
}

LpSolution BoundedSimplex::run() {
  LpSolution out;
  if (!setup(out)) return out;

  if (first_art_ < n_cols_) {
    PhaseResult res = iterate(Phase::FindFeasible);
    out.iterations = iterations_;
    if (res == PhaseResult::IterationLimit) {
      out.status = LpStatus::IterationLimit;
      return out;
    }
    if (res == PhaseResult::Numerical || !refactor()) {
      out.status = LpStatus::Numerical;
      return out;
    }
    double infeas = 0.0;
    for (int a = first_art_; a < n_cols_; ++a) infeas = std::max(infeas, x_[a]);
    if (infeas > opt_.feas_tol) {
      out.status = LpStatus::Infeasible;
      return out;
    }
    // Drive remaining artificials out of the basis; rows where that is
    // impossible are redundant and keep a fixed artificial.
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < first_art_) continue;
      int best = -1;
      double best_abs = 1e-7;
      for (int j = 0; j < first_art_; ++j) {
        if (basic_row_[j] >= 0) continue;
        if (std::abs(tab_(r, j)) > best_abs) {
          best_abs = std::abs(tab_(r, j));
          best = j;
        }
      }
      const int a = basis_[r];
      x_[a] = 0.0;
      if (best >= 0) pivot(r, best);
    }
    for (int a = first_art_; a < n_cols_; ++a) {
      hi_[a] = 0.0;
      x_[a] = 0.0;
      at_upper_[a] = 0;
    }
  }

  std::fill(cost_.begin(), cost_.end(), 0.0);
  std::copy(problem_.cost.begin(), problem_.cost.end(), cost_.begin());
  PhaseResult res = iterate(Phase::Optimize);
  out.iterations = iterations_;
  if (res == PhaseResult::IterationLimit) {
    out.status = LpStatus::IterationLimit;
    return out;
  }
  if (res == PhaseResult::Numerical || !refactor()) {
    out.status = LpStatus::Numerical;
    return out;
  }
  finish(out);
  return out;
}

}  // namespace

int LpProblem::add_column(double lb, double ub, double c) {
  col_lb.push_back(lb);
  col_ub.push_back(ub);
  cost.push_back(c);
  return num_cols++;
}

void LpProblem::add_row(std::vector<std::pair<int, double>> coefs, RowSense sense, double rhs) {
  rows.push_back({std::move(coefs), sense, rhs});
}

void LpProblem::validate() const {
  const auto n = static_cast<std::size_t>(num_cols);
  if (num_cols < 0 || col_lb.size() != n || col_ub.size() != n || cost.size() != n)
    throw std::invalid_argument("LpProblem: column arrays do not match num_cols");
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(col_lb[j]) || !std::isfinite(col_ub[j]) || col_lb[j] > col_ub[j])
      throw std::invalid_argument("LpProblem: column " + std::to_string(j) +
                                  " has invalid bounds");
    if (!std::isfinite(cost[j]))
      throw std::invalid_argument("LpProblem: non-finite cost at column " + std::to_string(j));
  }
  if (!std::isfinite(objective_offset))
    throw std::invalid_argument("LpProblem: non-finite objective offset");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!std::isfinite(rows[i].rhs))
      throw std::invalid_argument("LpProblem: non-finite rhs in row " + std::to_string(i));
    for (const auto &[col, val] : rows[i].coefs)
      if (col < 0 || col >= num_cols || !std::isfinite(val))
        throw std::invalid_argument("LpProblem: bad coefficient in row " + std::to_string(i));
  }
}

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::IterationLimit: return "IterationLimit";
    case LpStatus::Numerical: return "Numerical";
  }
  return "Unknown";
}

LpSolution solve_lp(const LpProblem &problem, const LpOptions &options) {
  problem.validate();
  BoundedSimplex solver(problem, options);
  return solver.run();
}

}  // namespace esb::lp
