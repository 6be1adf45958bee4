#pragma once

#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "esb/instance.hpp"
#include "esb/lp.hpp"
#include "esb/relaxation.hpp"

namespace esb {

enum class Side { Left, Right };  // child x_i <= alpha, child x_i >= alpha

enum class ProbeStatus { Solved, Infeasible, Numerical };

struct ProbeOutcome {
  ProbeStatus status = ProbeStatus::Numerical;
  double objective = 0.0;
};

/// Source of child relaxation values. The LP-backed implementation is the
/// production one; tests substitute fixed curves.
class ChildEvaluator {
 public:
  virtual ~ChildEvaluator() = default;
  virtual ProbeOutcome evaluate(const VarBox &box, int var, Side side, double alpha) = 0;
};

/// Solves child McCormick LPs. A point beyond the variable's current interval
/// on the wrong side is an empty child and is reported infeasible without a
/// solve; a point beyond it on the other side leaves the interval unchanged.
class LpChildEvaluator : public ChildEvaluator {
 public:
  explicit LpChildEvaluator(const RelaxationBuilder &builder, lp::LpOptions options = {})
      : builder_(builder), options_(options) {}

  ProbeOutcome evaluate(const VarBox &box, int var, Side side, double alpha) override;
  long solves() const { return solves_; }

 private:
  const RelaxationBuilder &builder_;
  lp::LpOptions options_;
  long solves_ = 0;
};

struct BranchParams {
  int iter_max = 4;
  double epsilon = 1e-6;
  double lambda = 0.25;     // basic rule weight on the interval midpoint
  double prune_tol = 1e-7;  // slack on obj_ub before a child counts as failed
  double min_width = 1e-9;  // narrower intervals are not branched on
  double basic_margin = 0.01;  // basic rule keeps alpha this fraction of the width inside
  int balance_grid = 64;       // balance rule scans width/balance_grid steps
};

/// max(obj_L - obj_p, eps) * max(obj_R - obj_p, eps); larger is better.
double branch_score(double obj_left, double obj_right, double obj_parent, double epsilon);

/// Binary-search state for one side. The point moves to p1 when a probe
/// fails and to p2 when it succeeds; the next probe is their midpoint.
struct SearchPointers {
  double p1 = 0.0;
  double p2 = 0.0;
  bool done = false;
};

/// Per-variable working set of the extreme strong branching search.
struct CandidateRecord {
  int var = -1;
  SearchPointers left;
  SearchPointers right;
  std::vector<double> left_points;  // B_L in discovery order
  std::vector<double> right_points;
  std::map<double, double> left_obj;  // O_L
  std::map<double, double> right_obj;
};

struct ProbeEvent {
  int var = -1;
  Side side = Side::Left;
  double alpha = 0.0;
  ProbeStatus status = ProbeStatus::Numerical;
  double objective = 0.0;
  bool fill_in = false;
  bool failed = false;
};

/// One bound moved by a failed probe: the child on `side` at `alpha` was
/// infeasible or above obj_ub + prune_tol.
struct Tightening {
  int var = -1;
  Side side = Side::Left;  // Left raises lb, Right lowers ub
  double alpha = 0.0;
  double old_bound = 0.0;
  double new_bound = 0.0;
  double obj_ub = 0.0;
};

struct BranchDecision {
  int var = -1;  // -1: nothing left to branch on
  double alpha = 0.0;
  double score = -std::numeric_limits<double>::infinity();
  VarBox box;  // node box after tightening
  bool prune = false;
  bool fallback = false;
  // Known child relaxation values at (var, alpha); -inf when not computed.
  double left_objective = -std::numeric_limits<double>::infinity();
  double right_objective = -std::numeric_limits<double>::infinity();
  std::vector<ProbeEvent> probes;
  std::vector<Tightening> tightenings;
  std::vector<CandidateRecord> records;

  bool has_branch() const { return !prune && var >= 0; }
};

/// True when a probe result allows tightening: infeasible, or above obj_ub + tol.
bool probe_failed(const ProbeOutcome &outcome, double obj_ub, double prune_tol);

/// One binary-search probe on `side` of rec.var. Failure moves the tightenable
/// pointer and the matching bound of `decision.box` to alpha; success records
/// alpha as a candidate. Numerical outcomes change nothing.
void binary_search_step(Side side, CandidateRecord &rec, double obj_ub, const BranchParams &params,
                        ChildEvaluator &evaluator, BranchDecision &decision);

/// Extreme strong branching over `candidates` (ascending order). Returns the
/// argmax (var, alpha) of branch_score with every tightening folded into
/// decision.box, or a prune decision.
BranchDecision esb_select(const VarBox &box, std::span<const int> candidates, double obj_ub,
                          double obj_parent, const BranchParams &params,
                          ChildEvaluator &evaluator);

/// Strong branching at one preset point per variable:
/// lambda * midpoint + (1 - lambda) * x_star, kept inside the open interval.
BranchDecision basic_select(const VarBox &box, std::span<const int> candidates,
                            const std::vector<double> &x_star, double obj_ub, double obj_parent,
                            const BranchParams &params, ChildEvaluator &evaluator);

/// Violation-balancing rule for bilinear terms. `lp_point` is the relaxation
/// solution over map's columns. Reconstructed from its published description;
/// no LP solves and no tightening.
BranchDecision balance_select(const VarBox &box, const RelaxationMap &map,
                              const std::vector<double> &lp_point, const BranchParams &params);

/// Widest candidate interval, split at its midpoint.
BranchDecision fallback_decision(const VarBox &box, std::span<const int> candidates,
                                 const BranchParams &params);

std::string to_string(Side side);

}  // namespace esb
