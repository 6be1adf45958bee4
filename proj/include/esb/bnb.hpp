#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "esb/branching.hpp"
#include "esb/instance.hpp"
#include "esb/lp.hpp"
#include "esb/primal.hpp"

namespace esb {

enum class Rule { Esb, Basic, Balance };
enum class Verdict { Optimal, GapReached, NodeLimit, TimeLimit, Infeasible, Unresolved };

std::string to_string(Rule rule);
std::string to_string(Verdict verdict);
Rule parse_rule(const std::string &name);  // throws std::invalid_argument

struct SolverConfig {
  Rule rule = Rule::Esb;
  double gap_tol = 1e-3;      // relative; 0.1 %
  double abs_gap_tol = 1e-6;  // used when the incumbent objective is 0
  double time_limit = 3600.0;
  long node_limit = 100000;
  int ub_frequency = 10;
  double root_budget = 5.0;
  bool branch_all_vars = false;
  bool trace = false;
  BranchParams branch;
  PrimalOptions primal;
  lp::LpOptions lp;
};

/// Remaining optimality gap in percent, 100 |z* - z_lb| / |z*|. When z* is 0
/// the ratio is undefined and the absolute difference is returned instead,
/// with `absolute` set.
struct GapMeasure {
  double value = 0.0;
  bool absolute = false;
};
GapMeasure gap_measure(double z_star, double z_lb);
double remaining_gap(double z_star, double z_lb);

struct TraceEntry {
  long node = 0;
  long parent = -1;
  int depth = 0;
  double popped_bound = 0.0;
  double lp_bound = 0.0;
  std::string action;  // branch | prune_infeasible | prune_bound | prune_rule | settled | requeue | discard
  int var = -1;
  double alpha = 0.0;
  double score = 0.0;
  bool fallback = false;
  VarBox box_in;
  VarBox box_out;  // after tightening
  double obj_ub = 0.0;  // +inf without incumbent
  double z_lb = 0.0;    // global lower bound after the node
  int tightenings = 0;
};

struct SolveReport {
  std::string instance;
  Rule rule = Rule::Esb;
  Verdict verdict = Verdict::Unresolved;
  std::optional<double> z_star;
  std::vector<double> x_star;
  double z_lb = 0.0;
  GapMeasure gap;
  double wall_seconds = 0.0;
  long nodes = 0;
  long nodes_created = 1;
  long pushes = 0;
  long open_nodes = 0;  // left in the pool at termination
  long lp_solves = 0;
  long probe_solves = 0;
  long tightenings = 0;
  long numerical_discards = 0;
  int root_starts = 0;
  std::vector<TraceEntry> trace;
};

SolveReport solve(const QcqpInstance &instance, const SolverConfig &config);

/// JSON text of the report (stable key order). Timing is omitted when
/// `include_timing` is false so reports of identical runs compare equal.
std::string report_to_json(const SolveReport &report, bool include_timing = true);

}  // namespace esb
