#include "esb/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace esb {

using lp::RowSense;

int RelaxationMap::w_column(int i, int j) const {
  auto it = column_of.find({std::min(i, j), std::max(i, j)});
  if (it == column_of.end()) throw std::out_of_range("no w column for the requested pair");
  return it->second;
}

std::vector<double> RelaxationMap::lift(const std::vector<double> &x) const {
  std::vector<double> z(x.begin(), x.begin() + n);
  z.reserve(num_columns());
  for (const auto &[i, j] : pairs) z.push_back(x[i] * x[j]);
  return z;
}

double EnvelopeRow::violation(double xi, double xj, double w) const {
  const double lhs = w + coef_i * xi + coef_j * xj;
  switch (sense) {
    case RowSense::GreaterEqual: return std::max(0.0, rhs - lhs);
    case RowSense::LessEqual: return std::max(0.0, lhs - rhs);
    case RowSense::Equal: return std::abs(lhs - rhs);
  }
  return 0.0;
}

std::vector<EnvelopeRow> mccormick_rows(bool diagonal, double lb_i, double ub_i, double lb_j,
                                        double ub_j) {
  if (diagonal) {
    return {
        {-2.0 * lb_i, 0.0, RowSense::GreaterEqual, -lb_i * lb_i},
        {-2.0 * ub_i, 0.0, RowSense::GreaterEqual, -ub_i * ub_i},
        {-(lb_i + ub_i), 0.0, RowSense::LessEqual, -lb_i * ub_i},
    };
  }
  return {
      {-lb_j, -lb_i, RowSense::GreaterEqual, -lb_i * lb_j},
      {-ub_j, -lb_i, RowSense::LessEqual, -lb_i * ub_j},
      {-lb_j, -ub_i, RowSense::LessEqual, -ub_i * lb_j},
      {-ub_j, -ub_i, RowSense::GreaterEqual, -ub_i * ub_j},
  };
}

double envelope_violation(bool diagonal, double lb_i, double ub_i, double lb_j, double ub_j,
                          double xi, double xj, double w) {
  double v = 0.0;
  for (const auto &row : mccormick_rows(diagonal, lb_i, ub_i, lb_j, ub_j))
    v = std::max(v, row.violation(xi, xj, w));
  return v;
}

RelaxationBuilder::RelaxationBuilder(const QcqpInstance &instance) : instance_(&instance) {
  map_.n = instance.n;
  map_.pairs = quadratic_pairs(instance);
  for (std::size_t k = 0; k < map_.pairs.size(); ++k)
    map_.column_of[map_.pairs[k]] = instance.n + static_cast<int>(k);
}

Relaxation RelaxationBuilder::build(const VarBox &box) const {
  const QcqpInstance &inst = *instance_;
  if (static_cast<int>(box.size()) != inst.n)
    throw std::invalid_argument("relaxation box has the wrong dimension");
  if (box.empty()) throw BoxEmptyError();

  Relaxation rel;
  rel.map = &map_;
  lp::LpProblem &p = rel.lp;
  for (int i = 0; i < inst.n; ++i) p.add_column(box.lb[i], box.ub[i], inst.objective.linear[i]);
  for (const auto &[i, j] : map_.pairs) {
    const double a = box.lb[i], b = box.ub[i], c = box.lb[j], d = box.ub[j];
    double lo, hi;
    if (i == j) {
      hi = std::max(a * a, b * b);
      lo = (a <= 0.0 && b >= 0.0) ? 0.0 : std::min(a * a, b * b);
    } else {
      const double v[4] = {a * c, a * d, b * c, b * d};
      lo = *std::min_element(v, v + 4);
      hi = *std::max_element(v, v + 4);
    }
    p.add_column(lo, hi, 0.0);
  }
  p.objective_offset = inst.objective.constant;
  for (const auto &t : inst.objective.terms) p.cost[map_.w_column(t.row, t.col)] += t.coef;

  for (const auto &con : inst.constraints) {
    std::vector<std::pair<int, double>> coefs;
    for (int i = 0; i < inst.n; ++i)
      if (con.form.linear[i] != 0.0) coefs.emplace_back(i, con.form.linear[i]);
    for (const auto &t : con.form.terms) coefs.emplace_back(map_.w_column(t.row, t.col), t.coef);
    p.add_row(std::move(coefs), RowSense::LessEqual, con.rhs);
  }

  for (const auto &[i, j] : map_.pairs) {
    const int w = map_.column_of.at({i, j});
    const bool diag = i == j;
    for (const auto &row : mccormick_rows(diag, box.lb[i], box.ub[i], box.lb[j], box.ub[j])) {
      std::vector<std::pair<int, double>> coefs{{w, 1.0}, {i, row.coef_i}};
      if (!diag) coefs.emplace_back(j, row.coef_j);
      p.add_row(std::move(coefs), row.sense, row.rhs);
    }
  }
  return rel;
}

VarBox child_box(const VarBox &box, int var, BranchSense sense, double alpha) {
  if (var < 0 || var >= static_cast<int>(box.size()))
    throw std::out_of_range("branching variable out of range");
  if (!(alpha >= box.lb[var] && alpha <= box.ub[var]))
    throw std::out_of_range("branching point " + std::to_string(alpha) +
                            " outside the interval of variable " + std::to_string(var));
  VarBox out = box;
  if (sense == BranchSense::Down)
    out.ub[var] = alpha;
  else
    out.lb[var] = alpha;
  return out;
}

Relaxation RelaxationBuilder::child(const VarBox &box, int var, BranchSense sense,
                                    double alpha) const {
  return build(child_box(box, var, sense, alpha));
}

Relaxation build_relaxation(const RelaxationBuilder &builder, const VarBox &box) {
  return builder.build(box);
}

Relaxation child_relaxation(const RelaxationBuilder &builder, const VarBox &box, int var,
                            BranchSense sense, double alpha) {
  return builder.child(box, var, sense, alpha);
}

}  // namespace esb
