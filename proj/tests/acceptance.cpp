// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes. Usage: esb_acceptance <path-to-esb-cli>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "esb/bench.hpp"
#include "esb/bnb.hpp"
#include "esb/branching.hpp"
#include "esb/lp.hpp"
#include "esb/relaxation.hpp"
#include "support/grid_oracle.hpp"
#include "support/oracle_simplex.hpp"
#include "support/random_lp.hpp"
#include "support/random_qcqp.hpp"

using namespace esb;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPruneTol = 1e-7;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string &name, double limit_s, const std::function<Outcome()> &body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception &e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && secs >= limit_s) {
    o.pass = false;
    o.detail += " (over the " + std::to_string(limit_s) + " s limit)";
  }
  if (!o.pass) ++failures;
  std::printf("%s %2d %-28s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), secs,
              o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------- criterion 1

class FigureStub : public ChildEvaluator {
 public:
  std::map<double, double> left{{0.5, 2.5}, {0.375, 4.0}, {0.3125, 5.5}, {0.25, 7.8}, {0.5625, 2.0}};
  std::map<double, double> right{{0.5, 3.0},    {0.5625, 4.5}, {0.625, 6.2},
                                 {0.75, 7.5},   {0.3125, 1.0}, {0.375, 1.5}};
  ProbeOutcome evaluate(const VarBox &, int, Side side, double alpha) override {
    const auto &t = side == Side::Left ? left : right;
    auto it = t.find(alpha);
    if (it == t.end()) throw std::runtime_error("probe outside the plotted points");
    return {ProbeStatus::Solved, it->second};
  }
};

Outcome criterion_fig1() {
  FigureStub stub;
  std::vector<int> cands{0};
  BranchDecision d = esb_select(VarBox({0.0}, {1.0}), cands, 6.0, 0.0, BranchParams{}, stub);
  std::vector<double> l, r;
  std::set<std::pair<int, double>> fills;
  for (const auto &p : d.probes) {
    if (p.fill_in)
      fills.emplace(p.side == Side::Left ? 0 : 1, p.alpha);
    else
      (p.side == Side::Left ? l : r).push_back(p.alpha);
  }
  std::set<double> cand;
  for (const auto &rec : d.records) {
    cand.insert(rec.left_points.begin(), rec.left_points.end());
    cand.insert(rec.right_points.begin(), rec.right_points.end());
  }
  int fill_count = 0;
  for (const auto &p : d.probes) fill_count += p.fill_in;
  Outcome o;
  o.pass = l == std::vector<double>{0.5, 0.25, 0.375, 0.3125} &&
           r == std::vector<double>{0.5, 0.75, 0.625, 0.5625} && d.box.lb[0] == 0.25 &&
           d.box.ub[0] == 0.625 && cand == std::set<double>{0.3125, 0.375, 0.5, 0.5625} &&
           fill_count == 3 &&
           fills == std::set<std::pair<int, double>>{{0, 0.5625}, {1, 0.3125}, {1, 0.375}};
  o.detail = "box [" + fmt(d.box.lb[0]) + ", " + fmt(d.box.ub[0]) + "], " +
             std::to_string(l.size() + r.size()) + " search probes, " + std::to_string(fill_count) +
             " fill-ins";
  return o;
}

// ------------------------------------------------------- criteria 2, 4 and 10

struct OracleCase {
  std::string name;
  QcqpInstance inst;
  testing::OracleOptimum oracle;
  SolveReport report;
};

std::vector<OracleCase> oracle_cases() {
  std::vector<OracleCase> cases;
  for (std::uint64_t s = 0; s < 8; ++s) cases.push_back({"", gen_pooling_toy("haverly", s), {}, {}});
  for (std::uint64_t s = 0; s < 2; ++s)
    cases.push_back({"", gen_pooling_toy("degenerate", s), {}, {}});
  for (std::uint64_t s = 1; s <= 4; ++s) {
    cases.push_back({"", gen_bbp(1, 2, 1.0, s), {}, {}});
    cases.push_back({"", gen_bbp(1, 3, 0.8, s), {}, {}});
    cases.push_back({"", gen_bbp(2, 2, 1.0, s), {}, {}});
  }
  for (auto &c : cases) c.name = c.inst.name;
  return cases;
}

std::vector<OracleCase> &solved_cases() {
  static std::vector<OracleCase> cases = [] {
    auto cs = oracle_cases();
    for (auto &c : cs) {
      c.oracle = testing::grid_oracle(c.inst);
      SolverConfig cfg;
      cfg.rule = Rule::Esb;
      cfg.trace = true;
      c.report = solve(c.inst, cfg);
    }
    return cs;
  }();
  return cases;
}

Outcome criterion_oracle() {
  auto &cases = solved_cases();
  Outcome o;
  int ok = 0;
  double worst_rel = 0.0;
  std::string bad;
  for (const auto &c : cases) {
    const auto &r = c.report;
    bool good = c.inst.n <= 4 && c.oracle.feasible && r.z_star &&
                (r.verdict == Verdict::GapReached || r.verdict == Verdict::Optimal) &&
                r.gap.value <= (r.gap.absolute ? 1e-6 : 0.1 + 1e-12);
    if (good) {
      const double diff = std::abs(*r.z_star - c.oracle.objective);
      const double rel = diff / std::max(std::abs(c.oracle.objective), 1e-300);
      worst_rel = std::max(worst_rel, c.oracle.objective == 0.0 ? diff : rel);
      good = diff <= 1e-3 * std::abs(c.oracle.objective) + 1e-6;
    }
    for (const auto &t : r.trace)
      if (t.z_lb > c.oracle.objective + kPruneTol) good = false;
    if (r.z_lb > c.oracle.objective + kPruneTol) good = false;
    if (good)
      ++ok;
    else
      bad += " " + c.name;
  }
  o.pass = ok == static_cast<int>(cases.size()) && cases.size() >= 20;
  o.detail = std::to_string(ok) + "/" + std::to_string(cases.size()) +
             " within 0.1% of the grid oracle, worst relative difference " + fmt(worst_rel) + bad;
  return o;
}

bool inside(const std::vector<double> &x, const VarBox &box, int var) {
  const double tol = 1e-7 * (1.0 + box.ub[var] - box.lb[var]);
  return x[var] >= box.lb[var] - tol && x[var] <= box.ub[var] + tol;
}

Outcome criterion_tightening() {
  auto &cases = solved_cases();
  long checked = 0, violations = 0;
  for (const auto &c : cases) {
    const double f = c.oracle.objective;
    for (const auto &t : c.report.trace) {
      if (t.tightenings == 0 && t.action != "prune_rule") continue;
      if (f > t.obj_ub + kPruneTol) continue;
      bool in_pre = true;
      for (int i = 0; i < c.inst.n; ++i) in_pre = in_pre && inside(c.oracle.x, t.box_in, i);
      if (!in_pre) continue;
      ++checked;
      for (int i = 0; i < c.inst.n; ++i)
        if (!inside(c.oracle.x, t.box_out, i)) {
          ++violations;
          break;
        }
    }
  }
  long total = 0;
  for (const auto &c : cases) total += c.report.tightenings;
  return {violations == 0, std::to_string(total) + " tightenings, " + std::to_string(checked) +
                               " covering the oracle point, " + std::to_string(violations) +
                               " excluded it"};
}

std::string read_file(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome criterion_determinism(const std::string &cli) {
  const fs::path dir = fs::temp_directory_path() / ("esb_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  int same = 0, total = 0;
  std::string bad;
  for (const auto &c : oracle_cases()) {
    const fs::path file = dir / (c.name + ".json");
    std::ofstream(file, std::ios::binary) << serialize_instance(c.inst);
    std::string outs[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = dir / (c.name + "_" + std::to_string(run) + ".out");
      const std::string cmd = "\"" + cli + "\" solve \"" + file.string() +
                              "\" --rule esb --trace --no-timing --seed 7 --out \"" + out.string() +
                              "\"";
      const int rc = std::system(cmd.c_str());
      if (rc == -1) throw std::runtime_error("cannot run " + cli);
      outs[run] = read_file(out);
    }
    ++total;
    if (!outs[0].empty() && outs[0] == outs[1])
      ++same;
    else
      bad += " " + c.name;
  }
  fs::remove_all(dir);
  return {same == total && total > 0,
          std::to_string(same) + "/" + std::to_string(total) + " byte-identical report pairs" + bad};
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion_monotone() {
  std::mt19937_64 rng(2024);
  long triples = 0, breaks = 0;
  for (int t = 0; t < 100; ++t) {
    QcqpInstance inst = t % 2 == 0 ? gen_bbp(1 + t % 3, 2, 1.0, 100 + t)
                                   : gen_pooling_toy(t % 4 == 1 ? "haverly" : "haverly2", t);
    RelaxationBuilder builder(inst);
    LpChildEvaluator eval(builder);
    VarBox box = testing::random_subbox(rng, inst.box);
    auto vars = quadratic_variables(inst);
    const int var = vars[rng() % vars.size()];
    if (box.width(var) <= 0.0) continue;
    ++triples;
    std::vector<double> alphas;
    for (int k = 0; k < 8; ++k) alphas.push_back(testing::uniform(rng, box.lb[var], box.ub[var]));
    std::sort(alphas.begin(), alphas.end());
    double prev_l = kInf, prev_r = -kInf;
    for (double a : alphas) {
      auto l = eval.evaluate(box, var, Side::Left, a);
      auto r = eval.evaluate(box, var, Side::Right, a);
      if (l.status == ProbeStatus::Numerical || r.status == ProbeStatus::Numerical) {
        ++breaks;
        continue;
      }
      const double lv = l.status == ProbeStatus::Infeasible ? kInf : l.objective;
      const double rv = r.status == ProbeStatus::Infeasible ? kInf : r.objective;
      if (lv > prev_l + 1e-7 * (1.0 + std::abs(prev_l))) ++breaks;
      if (rv < prev_r - 1e-7 * (1.0 + std::abs(prev_r))) ++breaks;
      prev_l = lv;
      prev_r = rv;
    }
  }
  return {breaks == 0 && triples == 100,
          std::to_string(triples) + " triples x 8 points, " + std::to_string(breaks) + " order breaks"};
}

// ---------------------------------------------------------------- criterion 5

Outcome criterion_mccormick() {
  std::mt19937_64 rng(5);
  long bad = 0;
  for (int t = 0; t < 10000; ++t) {
    const double li = testing::uniform(rng, -10, 10), ui = li + testing::uniform(rng, 0, 10);
    const double lj = testing::uniform(rng, -10, 10), uj = lj + testing::uniform(rng, 0, 10);
    const double xi = testing::uniform(rng, li, ui), xj = testing::uniform(rng, lj, uj);
    for (const auto &row : mccormick_rows(false, li, ui, lj, uj))
      if (row.violation(xi, xj, xi * xj) > 1e-12 * std::max(1.0, std::abs(xi * xj))) ++bad;
  }
  long vertex_bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const double li = testing::uniform(rng, -10, 10), ui = li + testing::uniform(rng, 0.01, 10);
    const double lj = testing::uniform(rng, -10, 10), uj = lj + testing::uniform(rng, 0.01, 10);
    const auto rows = mccormick_rows(false, li, ui, lj, uj);
    for (double xi : {li, ui})
      for (double xj : {lj, uj}) {
        double lo = -kInf, hi = kInf;
        for (const auto &row : rows) {
          const double bound = row.rhs - row.coef_i * xi - row.coef_j * xj;
          if (row.sense == lp::RowSense::GreaterEqual)
            lo = std::max(lo, bound);
          else
            hi = std::min(hi, bound);
        }
        const double tol = 1e-9 * std::max(1.0, std::abs(xi * xj));
        if (std::abs(lo - xi * xj) > tol || std::abs(hi - xi * xj) > tol) ++vertex_bad;
      }
  }
  return {bad == 0 && vertex_bad == 0, "10000 interior samples: " + std::to_string(bad) +
                                           " violations; 4000 vertices: " + std::to_string(vertex_bad) +
                                           " not pinned"};
}

// ---------------------------------------------------------------- criterion 6

Outcome criterion_lp() {
  std::mt19937_64 rng(6);
  int agree = 0, optimal = 0;
  double worst_obj = 0.0, worst_gap = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int cols = 1 + static_cast<int>(rng() % 50);
    const int rows = static_cast<int>(rng() % 40);
    lp::LpProblem p = testing::random_lp(rng, cols, rows, t % 3 != 0);
    const auto sol = lp::solve_lp(p);
    const auto ref = testing::oracle_simplex(p);
    const bool same_status = (sol.status == lp::LpStatus::Optimal) == ref.feasible &&
                             (sol.status == lp::LpStatus::Optimal || sol.status == lp::LpStatus::Infeasible);
    bool ok = same_status;
    if (ok && ref.feasible) {
      ++optimal;
      const double diff = std::abs(sol.objective - ref.objective) / (1.0 + std::abs(ref.objective));
      worst_obj = std::max(worst_obj, diff);
      worst_gap = std::max(worst_gap, sol.duality_gap);
      ok = diff <= 1e-7 && sol.duality_gap <= 1e-7;
    }
    agree += ok;
  }
  return {agree == 200, std::to_string(agree) + "/200 agree (" + std::to_string(optimal) +
                            " optimal), worst objective diff " + fmt(worst_obj) + ", worst duality gap " +
                            fmt(worst_gap)};
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion_score() {
  std::mt19937_64 rng(7);
  int bad = 0, floor_l = 0, floor_r = 0, open = 0;
  for (int t = 0; t < 1000; ++t) {
    const double p = testing::uniform(rng, -10, 10);
    const double eps = std::pow(10.0, testing::uniform(rng, -8, 0));
    const double l = p + testing::uniform(rng, -2, 2), r = p + testing::uniform(rng, -2, 2);
    const double dl = l - p > eps ? l - p : eps, dr = r - p > eps ? r - p : eps;
    floor_l += l - p <= eps;
    floor_r += r - p <= eps;
    open += l - p > eps && r - p > eps;
    if (std::abs(branch_score(l, r, p, eps) - dl * dr) > 1e-12 * std::max(1.0, dl * dr)) ++bad;
  }
  return {bad == 0 && floor_l > 0 && floor_r > 0 && open > 0,
          "1000 tuples, " + std::to_string(bad) + " mismatches; left floor " + std::to_string(floor_l) +
              ", right floor " + std::to_string(floor_r) + ", no floor " + std::to_string(open)};
}

// ---------------------------------------------------------------- criterion 8

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome criterion_directional() {
  std::vector<NamedInstance> pools;
  for (std::uint64_t s = 0; s < 10; ++s) pools.push_back({"", gen_pooling_toy("haverly", s)});
  for (std::uint64_t s = 0; s < 6; ++s) pools.push_back({"", gen_pooling_toy("haverly2", s)});
  for (auto &p : pools) p.name = p.instance.name;
  CompareResult res = compare(pools, {Rule::Esb, Rule::Basic, Rule::Balance}, SolverConfig{}, 0);
  std::vector<double> nodes[3];
  int max_esb = 0;
  for (std::size_t i = 0; i < pools.size(); ++i) {
    bool all = true;
    for (int k = 0; k < 3; ++k) all = all && res.records[3 * i + k].solved();
    if (!all) continue;
    for (int k = 0; k < 3; ++k) nodes[k].push_back(static_cast<double>(res.records[3 * i + k].nodes));
    max_esb = std::max(max_esb, static_cast<int>(res.records[3 * i].nodes));
  }
  if (nodes[0].size() < 10) return {false, "only " + std::to_string(nodes[0].size()) + " solved by all rules"};
  const double me = median(nodes[0]), mb = median(nodes[1]), ml = median(nodes[2]);
  return {me <= mb && me <= ml && max_esb <= 50,
          std::to_string(nodes[0].size()) + " instances; median nodes esb " + fmt(me) + ", basic " +
              fmt(mb) + ", balance " + fmt(ml) + "; esb max " + std::to_string(max_esb)};
}

// ---------------------------------------------------------------- criterion 9

Outcome criterion_gap() {
  // The decimal inputs 99.9 and -400.4 are not representable, so the exact
  // results differ from 0.1 in the 14th digit.
  const double g1 = remaining_gap(100.0, 99.9), g2 = remaining_gap(5.0, 5.0),
               g3 = remaining_gap(-400.0, -400.4);
  const bool hand = std::abs(g1 - 0.1) <= 1e-12 && g2 == 0.0 && std::abs(g3 - 0.1) <= 1e-12;

  CompareResult fixture;
  fixture.rules = {Rule::Esb};
  RunRecord a, b;
  a.instance = "a";
  a.verdict = Verdict::Optimal;
  a.time_s = 10.0;
  a.gap_pct = 0.0;
  b.instance = "b";
  b.verdict = Verdict::GapReached;
  b.time_s = 1000.0;
  b.gap_pct = 0.0;
  fixture.records = {a, b};
  // overall_csv rows: header comment, header, arithmetic, geometric.
  std::istringstream in(overall_csv(fixture));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  bool means = rows.size() == 3 && rows[0].size() == 4;
  double t_ari = 0, t_geo = 0;
  if (means) {
    t_ari = std::stod(rows[1][2]);
    t_geo = std::stod(rows[2][2]);
    means = std::abs(t_ari - 505.0) <= 1e-9 && std::abs(t_geo - 100.0) <= 1e-9;
  }
  std::istringstream sin(summary_csv(fixture));
  std::string all_row;
  while (std::getline(sin, line))
    if (line.rfind("All,", 0) == 0) all_row = line;
  means = means && all_row.rfind("All,2,505,", 0) == 0;
  return {hand && means, "gaps " + fmt(g1) + ", " + fmt(g2) + ", " + fmt(g3) + "; fixture means " +
                             fmt(t_ari) + " / " + fmt(t_geo)};
}

}  // namespace

int main(int argc, char **argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <esb-cli>\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];
  report(1, "fig1-trace", 1.0, criterion_fig1);
  report(2, "oracle-optimality", 300.0, criterion_oracle);
  report(3, "child-monotonicity", 120.0, criterion_monotone);
  report(4, "tightening-soundness", 0.0, criterion_tightening);
  report(5, "mccormick-validity", 0.0, criterion_mccormick);
  report(6, "lp-vs-oracle", 0.0, criterion_lp);
  report(7, "branch-score", 0.0, criterion_score);
  report(8, "node-count-trend", 0.0, criterion_directional);
  report(9, "gap-metric", 0.0, criterion_gap);
  report(10, "determinism", 0.0, [&] { return criterion_determinism(cli); });
  std::printf("%s: %d failing\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
