#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <utility>

#include "esb/branching.hpp"
#include "esb/relaxation.hpp"

using namespace esb;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Child values read from fixed tables; any unlisted query is a test bug.
class CurveStub : public ChildEvaluator {
 public:
  std::map<double, double> left, right;
  std::vector<std::pair<Side, double>> calls;

  ProbeOutcome evaluate(const VarBox &, int, Side side, double alpha) override {
    calls.emplace_back(side, alpha);
    const auto &table = side == Side::Left ? left : right;
    auto it = table.find(alpha);
    if (it == table.end()) throw std::logic_error("unexpected probe");
    return {ProbeStatus::Solved, it->second};
  }
};

CurveStub figure_one() {
  CurveStub s;
  s.left = {{0.5, 2.5}, {0.375, 4.0}, {0.3125, 5.5}, {0.25, 7.8}, {0.5625, 2.0}};
  s.right = {{0.5, 3.0}, {0.5625, 4.5}, {0.625, 6.2}, {0.75, 7.5}, {0.3125, 1.0}, {0.375, 1.5}};
  return s;
}

VarBox unit_box(int n) { return VarBox(std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)); }

std::vector<double> probes_of(const BranchDecision &d, Side side, bool fill_in) {
  std::vector<double> out;
  for (const auto &p : d.probes)
    if (p.side == side && p.fill_in == fill_in) out.push_back(p.alpha);
  return out;
}

}  // namespace

TEST_CASE("figure one binary search trace") {
  CurveStub stub = figure_one();
  std::vector<int> cands{0};
  BranchParams params;
  BranchDecision d = esb_select(unit_box(1), cands, 6.0, 0.0, params, stub);

  CHECK(probes_of(d, Side::Left, false) == std::vector<double>{0.5, 0.25, 0.375, 0.3125});
  CHECK(probes_of(d, Side::Right, false) == std::vector<double>{0.5, 0.75, 0.625, 0.5625});
  CHECK(d.box.lb[0] == 0.25);
  CHECK(d.box.ub[0] == 0.625);
  REQUIRE(d.records.size() == 1);
  std::set<double> cand(d.records[0].left_points.begin(), d.records[0].left_points.end());
  cand.insert(d.records[0].right_points.begin(), d.records[0].right_points.end());
  CHECK(cand == std::set<double>{0.3125, 0.375, 0.5, 0.5625});

  std::set<std::pair<Side, double>> fills;
  for (const auto &p : d.probes)
    if (p.fill_in) fills.emplace(p.side, p.alpha);
  CHECK(fills.size() == 3);
  CHECK(fills == std::set<std::pair<Side, double>>{
                     {Side::Left, 0.5625}, {Side::Right, 0.3125}, {Side::Right, 0.375}});
  CHECK(stub.calls.size() == 11);

  // Scores with obj_p = 0: 5.5*1, 4*1.5, 2.5*3, 2*4.5.
  CHECK(d.var == 0);
  CHECK(d.alpha == 0.5625);
  CHECK(d.score == doctest::Approx(9.0));
  CHECK(d.left_objective == 2.0);
  CHECK(d.right_objective == 4.5);
  CHECK_FALSE(d.prune);
  CHECK(d.tightenings.size() == 3);
}

TEST_CASE("both sides failing at one point prunes the node") {
  CurveStub stub;
  stub.left = {{0.5, 10.0}};
  stub.right = {{0.5, 10.0}};
  std::vector<int> cands{0};
  BranchDecision d = esb_select(unit_box(1), cands, 6.0, 0.0, BranchParams{}, stub);
  CHECK(d.prune);
  CHECK_FALSE(d.has_branch());
}

TEST_CASE("pointer contract on a single step") {
  CurveStub stub;
  stub.left = {{0.5, 1.0}};
  stub.right = {{0.5, 9.0}};
  CandidateRecord rec;
  rec.var = 0;
  rec.left = {0.0, 1.0, false};
  rec.right = {1.0, 0.0, false};
  BranchDecision d;
  d.box = unit_box(1);
  binary_search_step(Side::Left, rec, 6.0, BranchParams{}, stub, d);
  CHECK(rec.left.p1 == 0.0);
  CHECK(rec.left.p2 == 0.5);
  CHECK(rec.left_points == std::vector<double>{0.5});
  binary_search_step(Side::Right, rec, 6.0, BranchParams{}, stub, d);
  CHECK(rec.right.p1 == 0.5);
  CHECK(rec.right.p2 == 0.0);
  CHECK(d.box.ub[0] == 0.5);
  CHECK(rec.right_points.empty());
}

TEST_CASE("branch score closed form") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  int floor_left = 0, floor_right = 0;
  for (int t = 0; t < 1000; ++t) {
    const double l = u(rng), r = u(rng), p = u(rng), eps = std::abs(u(rng)) * 1e-2 + 1e-9;
    const double dl = l - p > eps ? l - p : eps;
    const double dr = r - p > eps ? r - p : eps;
    floor_left += l - p <= eps;
    floor_right += r - p <= eps;
    CHECK(std::abs(branch_score(l, r, p, eps) - dl * dr) <= 1e-12 * (1.0 + std::abs(dl * dr)));
  }
  CHECK(floor_left > 0);
  CHECK(floor_right > 0);
  CHECK(branch_score(1.0, 1.0, 1.0, 1e-6) == doctest::Approx(1e-12));
}

TEST_CASE("basic rule point and failed-side scoring") {
  // x* = 0.3 on [0,1], lambda = 0.25: alpha = 0.25*0.5 + 0.75*0.3 = 0.35.
  CurveStub stub;
  stub.left = {{0.35, 2.0}};
  stub.right = {{0.35, 7.0}};
  std::vector<int> cands{0};
  BranchParams params;
  BranchDecision d = basic_select(unit_box(1), cands, {0.3}, 6.0, 0.0, params, stub);
  CHECK(d.var == 0);
  CHECK(d.alpha == doctest::Approx(0.35));
  CHECK(d.score == doctest::Approx(2.0 * 6.0));
  CHECK(d.right_objective == kInf);

  // Without an incumbent nothing fails; the plain product decides.
  stub.calls.clear();
  d = basic_select(unit_box(1), cands, {0.3}, kInf, 0.0, params, stub);
  CHECK(d.score == doctest::Approx(14.0));

  CurveStub edge;
  const double expected = 0.25 * 0.5;  // raw point, already inside
  edge.left = {{expected, 1.0}};
  edge.right = {{expected, 1.0}};
  d = basic_select(unit_box(1), cands, {0.0}, kInf, 0.0, params, edge);
  CHECK(d.alpha == expected);
  // x* at the bound is pulled inside by the margin.
  params.lambda = 0.0;
  CurveStub margin;
  margin.left = {{0.01, 1.0}};
  margin.right = {{0.01, 1.0}};
  d = basic_select(unit_box(1), cands, {0.0}, kInf, 0.0, params, margin);
  CHECK(d.alpha == doctest::Approx(0.01));
}

TEST_CASE("basic rule prunes when one variable fails both ways") {
  CurveStub stub;
  stub.left = {{0.5, 9.0}};
  stub.right = {{0.5, 9.0}};
  std::vector<int> cands{0};
  BranchParams params;
  params.lambda = 1.0;
  BranchDecision d = basic_select(unit_box(1), cands, {0.5}, 6.0, 0.0, params, stub);
  CHECK(d.prune);
}

TEST_CASE("esb argmax agrees with brute force over recorded candidates") {
  // Three variables with smooth synthetic curves; no failures.
  class Smooth : public ChildEvaluator {
   public:
    ProbeOutcome evaluate(const VarBox &, int var, Side side, double a) override {
      const double c = 1.0 + var;
      return {ProbeStatus::Solved, side == Side::Left ? c * (1.0 - a) * (1.0 - a) : c * a * a + 0.1 * var};
    }
  } smooth;
  std::vector<int> cands{0, 1, 2};
  BranchDecision d = esb_select(unit_box(3), cands, kInf, 0.0, BranchParams{}, smooth);
  double best = -kInf;
  int bv = -1;
  double ba = 0;
  for (const auto &rec : d.records) {
    for (const auto &[a, l] : rec.left_obj) {
      auto r = rec.right_obj.find(a);
      if (r == rec.right_obj.end()) continue;
      const double s = branch_score(l, r->second, 0.0, 1e-6);
      if (s > best) {
        best = s;
        bv = rec.var;
        ba = a;
      }
    }
  }
  CHECK(d.var == bv);
  CHECK(d.alpha == ba);
  CHECK(d.score == best);
}

TEST_CASE("monotone repair of recorded curves") {
  CurveStub stub;
  // Left curve rising between 0.5 and 0.75 (as if computed on different boxes).
  stub.left = {{0.5, 1.0}, {0.75, 2.0}, {0.875, 0.5}, {0.9375, 0.4}, {0.25, 3.0}, {0.125, 3.5}, {0.0625, 4.0}};
  stub.right = {{0.5, 1.0}, {0.75, 2.0}, {0.875, 3.0}, {0.9375, 4.0}, {0.25, 0.5}, {0.125, 0.4}, {0.0625, 0.3}};
  std::vector<int> cands{0};
  BranchDecision d = esb_select(unit_box(1), cands, kInf, 0.0, BranchParams{}, stub);
  REQUIRE(d.records.size() == 1);
  double prev = kInf;
  for (const auto &[a, v] : d.records[0].left_obj) {
    CHECK(v <= prev);
    prev = v;
  }
  prev = -kInf;
  for (const auto &[a, v] : d.records[0].right_obj) {
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("fallback picks the widest candidate") {
  VarBox box({0, 0, 0}, {1, 3, 2});
  std::vector<int> cands{0, 1, 2};
  BranchDecision d = fallback_decision(box, cands, BranchParams{});
  CHECK(d.var == 1);
  CHECK(d.alpha == 1.5);
  VarBox flat({0, 0}, {0, 0});
  std::vector<int> two{0, 1};
  CHECK(fallback_decision(flat, two, BranchParams{}).var == -1);
}

TEST_CASE("balance rule on a symmetric bilinear term") {
  QcqpInstance inst;
  inst.name = "xy";
  inst.n = 2;
  inst.objective = make_quad_form(2, {{0, 1, 1.0}}, {0.0, 0.0}, 0.0);
  inst.box = unit_box(2);
  RelaxationBuilder builder(inst);
  // LP point of min xy over [0,1]^2 is not unique; take the interior one that
  // violates the product the most.
  std::vector<double> point{0.5, 0.5, 0.0};
  BranchDecision d = balance_select(inst.box, builder.map(), point, BranchParams{});
  CHECK_FALSE(d.fallback);
  CHECK(d.var == 0);
  CHECK(d.alpha == doctest::Approx(0.5));
  CHECK(d.tightenings.empty());

  std::vector<double> exact{0.5, 0.5, 0.25};
  d = balance_select(inst.box, builder.map(), exact, BranchParams{});
  CHECK(d.fallback);
  CHECK(d.var == 0);
}
