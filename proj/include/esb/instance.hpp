#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace esb {

/// One term coef * x_row * x_col of a quadratic form, stored with row <= col.
/// Indices are 0-based.
struct QuadTerm {
  int row = 0;
  int col = 0;
  double coef = 0.0;

  friend bool operator==(const QuadTerm &, const QuadTerm &) = default;
};

/// x'Qx + p'x + constant, with Q kept as a merged upper-triangular term list.
struct QuadForm {
  std::vector<QuadTerm> terms;  // sorted by (row, col), no duplicates
  std::vector<double> linear;   // dense, length n
  double constant = 0.0;

  double value(const std::vector<double> &x) const;
  /// Gradient of value() at x, written into grad (length n).
  void gradient(const std::vector<double> &x, std::vector<double> &grad) const;

  friend bool operator==(const QuadForm &, const QuadForm &) = default;
};

/// x'Qx + p'x <= rhs.
struct QuadConstraint {
  QuadForm form;  // constant always 0
  double rhs = 0.0;

  friend bool operator==(const QuadConstraint &, const QuadConstraint &) = default;
};

/// Per-variable local bounds. A box with lb_i > ub_i for some i is empty; it is
/// kept as-is so that infeasibility stays visible to the caller.
struct VarBox {
  std::vector<double> lb;
  std::vector<double> ub;

  VarBox() = default;
  VarBox(std::vector<double> lower, std::vector<double> upper);

  std::size_t size() const { return lb.size(); }
  bool empty() const;
  double width(int i) const { return ub[i] - lb[i]; }
  double midpoint(int i) const { return 0.5 * (lb[i] + ub[i]); }
  bool contains(const std::vector<double> &x, double tol = 0.0) const;
  /// True when every interval of this box lies inside the matching one of `outer`.
  bool subset_of(const VarBox &outer, double tol = 0.0) const;

  friend bool operator==(const VarBox &, const VarBox &) = default;
};

struct QcqpInstance {
  std::string name;
  int n = 0;
  QuadForm objective;
  std::vector<QuadConstraint> constraints;
  VarBox box;

  int num_constraints() const { return static_cast<int>(constraints.size()); }

  friend bool operator==(const QcqpInstance &, const QcqpInstance &) = default;
};

/// Unordered product x_i * x_j with i <= j.
using IndexPair = std::pair<int, int>;

struct Evaluation {
  double objective = 0.0;
  std::vector<double> slacks;  // r_k - x'Q_k x - p_k'x
  double box_violation = 0.0;

  /// Largest constraint or box violation, 0 when feasible.
  double max_violation() const;
  bool feasible(double feas_tol) const { return max_violation() <= feas_tol; }
};

/// Raised for malformed or inconsistent instance data. `path` names the
/// offending field, e.g. "constraints[2].pairs[0]".
class InstanceError : public std::runtime_error {
 public:
  InstanceError(std::string path, const std::string &what);
  const std::string &path() const { return path_; }

 private:
  std::string path_;
};

/// Builds a quad form from raw (i, j, coef) terms (0-based), merging (i,j) and
/// (j,i) by summation and dropping exact zeros.
QuadForm make_quad_form(int n, const std::vector<QuadTerm> &raw,
                        std::vector<double> linear, double constant = 0.0);

/// Checks every structural invariant; throws InstanceError on the first problem.
void validate(const QcqpInstance &instance);

QcqpInstance parse_instance(std::string_view json_text);
QcqpInstance load_instance(const std::string &path);
/// Canonical JSON document for the instance (1-based indices, indent 2).
std::string serialize_instance(const QcqpInstance &instance);

Evaluation evaluate(const QcqpInstance &instance, const std::vector<double> &x);

/// Sorted set of pairs with a nonzero coefficient in the objective or any
/// constraint, diagonal pairs included.
std::vector<IndexPair> quadratic_pairs(const QcqpInstance &instance);

/// Sorted indices of variables appearing in some quadratic pair.
std::vector<int> quadratic_variables(const QcqpInstance &instance);

}  // namespace esb
