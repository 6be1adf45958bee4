#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "esb/instance.hpp"
#include "esb/lp.hpp"

namespace esb {

/// Column layout of a relaxation: x_0..x_{n-1}, then one w column per
/// quadratic pair in sorted pair order.
struct RelaxationMap {
  int n = 0;
  std::vector<IndexPair> pairs;
  std::map<IndexPair, int> column_of;

  int num_columns() const { return n + static_cast<int>(pairs.size()); }
  int w_column(int i, int j) const;
  /// (x, w) with every w set to the exact product.
  std::vector<double> lift(const std::vector<double> &x) const;
};

/// One McCormick inequality  w + coef_i x_i + coef_j x_j  (sense)  rhs.
struct EnvelopeRow {
  double coef_i = 0.0;
  double coef_j = 0.0;
  lp::RowSense sense = lp::RowSense::GreaterEqual;
  double rhs = 0.0;

  /// Amount by which (xi, xj, w) violates the row, 0 when satisfied.
  double violation(double xi, double xj, double w) const;
};

/// Four rows for i != j in the order underestimator(lb,lb), overestimators
/// (ub_j,lb_i) and (lb_j,ub_i), underestimator(ub,ub); three rows for i == j
/// (two tangents and the secant).
std::vector<EnvelopeRow> mccormick_rows(bool diagonal, double lb_i, double ub_i, double lb_j,
                                        double ub_j);

/// Largest violation of the pair's envelope rows at (xi, xj, w).
double envelope_violation(bool diagonal, double lb_i, double ub_i, double lb_j, double ub_j,
                          double xi, double xj, double w);

class BoxEmptyError : public std::runtime_error {
 public:
  BoxEmptyError() : std::runtime_error("relaxation requested for an empty box") {}
};

enum class BranchSense { Down, Up };  // x_i <= alpha, x_i >= alpha

struct Relaxation {
  lp::LpProblem lp;
  const RelaxationMap *map = nullptr;
};

/// Builds McCormick LPs for one instance. The map is computed once; every
/// build starts from scratch.
class RelaxationBuilder {
 public:
  explicit RelaxationBuilder(const QcqpInstance &instance);

  const QcqpInstance &instance() const { return *instance_; }
  const RelaxationMap &map() const { return map_; }

  Relaxation build(const VarBox &box) const;
  /// Relaxation of the node intersected with x_var <= alpha (Down) or
  /// x_var >= alpha (Up). Envelope rows touching var use the new bound.
  Relaxation child(const VarBox &box, int var, BranchSense sense, double alpha) const;

 private:
  const QcqpInstance *instance_;
  RelaxationMap map_;
};

Relaxation build_relaxation(const RelaxationBuilder &builder, const VarBox &box);
Relaxation child_relaxation(const RelaxationBuilder &builder, const VarBox &box, int var,
                            BranchSense sense, double alpha);

/// The box with var restricted to [lb, alpha] (Down) or [alpha, ub] (Up).
VarBox child_box(const VarBox &box, int var, BranchSense sense, double alpha);

}  // namespace esb
