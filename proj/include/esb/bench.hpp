#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "esb/bnb.hpp"
#include "esb/instance.hpp"

namespace esb {

/// Bilinear bipartite instance: every product couples a left variable
/// (indices 0..n_left-1) with a right one. Coefficients lie in [-1, 1] on a
/// 1e-4 grid; constraint right-hand sides are set from a random interior
/// point, which is checked feasible before returning.
QcqpInstance gen_bbp(int n_left, int n_right, double density, std::uint64_t seed);

/// One-pool blending instance. Kinds:
///   haverly     n=4: pool inflows a, b, pool quality q, bypass flow c, one product
///   haverly2    n=6: inflows a, b, quality q, pool outflows x, y, bypass c into y
///   degenerate  n=4: haverly with both inflows of equal quality, q fixed
/// Seed 0 gives the textbook data; other seeds perturb prices and qualities.
QcqpInstance gen_pooling_toy(const std::string &kind, std::uint64_t seed);

std::vector<std::string> pooling_kinds();

struct RunRecord {
  std::string instance;
  Rule rule = Rule::Esb;
  Verdict verdict = Verdict::Unresolved;
  double gap_pct = 0.0;  // against the best incumbent of all rules on the instance
  double time_s = 0.0;
  long nodes = 0;
  long lp_solves = 0;
  long tightenings = 0;
  std::uint64_t seed = 0;

  bool solved() const { return verdict == Verdict::Optimal || verdict == Verdict::GapReached; }
};

struct NamedInstance {
  std::string name;
  QcqpInstance instance;
};

struct CompareResult {
  std::vector<Rule> rules;
  std::vector<RunRecord> records;  // instance-major, rules in the given order
};

CompareResult compare(const std::vector<NamedInstance> &instances, const std::vector<Rule> &rules,
                      const SolverConfig &config, std::uint64_t seed);

constexpr double kTimeFloor = 0.01;  // seconds
constexpr double kGapFloor = 0.001;  // percent

double arithmetic_mean(const std::vector<double> &values);
/// Geometric mean with values below `floor` raised to it; NaN when empty.
double geometric_mean(const std::vector<double> &values, double floor);

std::string runs_csv(const CompareResult &result);
/// Solve-time buckets over instances every rule solved, per-rule columns.
std::string summary_csv(const CompareResult &result);
/// Mean remaining gap per rule over instances some rule left unsolved.
std::string unsolved_csv(const CompareResult &result);
/// Arithmetic and geometric means of gap, time and nodes over all instances.
std::string overall_csv(const CompareResult &result);

}  // namespace esb
