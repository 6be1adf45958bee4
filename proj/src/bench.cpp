#include "esb/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace esb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Portable uniform draws: std::uniform_real_distribution output differs
// between standard libraries, the raw engine output does not.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * unit(); }

 private:
  std::mt19937_64 rng_;
};

double round_to(double v, double step) { return std::round(v / step) * step; }

std::string num(double v) {
  if (std::isnan(v)) return "n/a";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

QuadForm form(int n, std::vector<QuadTerm> terms, std::vector<double> linear) {
  linear.resize(n, 0.0);
  return make_quad_form(n, terms, std::move(linear));
}

void add_equal(QcqpInstance &inst, const QuadForm &f, double rhs) {
  inst.constraints.push_back({f, rhs});
  QuadForm neg = f;
  for (auto &t : neg.terms) t.coef = -t.coef;
  for (auto &v : neg.linear) v = -v;
  inst.constraints.push_back({neg, -rhs});
}

struct PoolData {
  double qa = 3, qb = 1, qc = 2;
  double spec_x = 2.5, spec_y = 1.5;
  double ca = 6, cb = 16, cc = 10;
  double px = 9, py = 15;
  double dx = 100, dy = 200;
};

PoolData pool_data(std::uint64_t seed) {
  PoolData d;
  if (seed == 0) return d;
  Draw r(seed);
  auto jitter = [&](double v, double rel) { return round_to(v * (1.0 + r.uniform(-rel, rel)), 0.01); };
  d.qa = jitter(d.qa, 0.1);
  d.qb = jitter(d.qb, 0.3);
  d.qc = jitter(d.qc, 0.15);
  d.spec_x = jitter(d.spec_x, 0.1);
  d.spec_y = jitter(d.spec_y, 0.1);
  d.ca = jitter(d.ca, 0.15);
  d.cb = jitter(d.cb, 0.15);
  d.cc = jitter(d.cc, 0.15);
  d.px = jitter(d.px, 0.15);
  d.py = jitter(d.py, 0.15);
  return d;
}

}  // namespace

QcqpInstance gen_bbp(int n_left, int n_right, double density, std::uint64_t seed) {
  if (n_left < 1 || n_right < 1) throw std::invalid_argument("gen_bbp: group sizes must be >= 1");
  if (!(density > 0.0 && density <= 1.0))
    throw std::invalid_argument("gen_bbp: density must lie in (0, 1]");
  Draw r(seed);
  const int n = n_left + n_right;
  QcqpInstance inst;
  std::ostringstream name;
  name << "bbp_" << n_left << "x" << n_right << "_d" << num(density) << "_s" << seed;
  inst.name = name.str();
  inst.n = n;

  std::vector<double> lb(n), ub(n), anchor(n);
  for (int i = 0; i < n; ++i) {
    lb[i] = round_to(r.uniform(-2.0, 1.0), 0.01);
    ub[i] = round_to(lb[i] + round_to(r.uniform(0.5, 3.0), 0.01), 0.01);
    anchor[i] = lb[i] + r.uniform(0.2, 0.8) * (ub[i] - lb[i]);
  }
  inst.box = VarBox(lb, ub);

  auto coef = [&] {
    double c = round_to(r.uniform(-1.0, 1.0), 1e-4);
    return c == 0.0 ? 0.5 : c;
  };
  auto random_form = [&] {
    std::vector<QuadTerm> terms;
    for (int i = 0; i < n_left; ++i)
      for (int j = n_left; j < n; ++j)
        if (r.unit() < density) terms.push_back({i, j, coef()});
    if (terms.empty()) terms.push_back({0, n_left, coef()});
    std::vector<double> lin(n);
    for (double &v : lin) v = round_to(r.uniform(-1.0, 1.0), 1e-4);
    return form(n, terms, lin);
  };

  inst.objective = random_form();
  const int m = std::max(1, n / 2);
  for (int k = 0; k < m; ++k) {
    QuadForm f = random_form();
    const double at = f.value(anchor);
    const double rhs = std::ceil((at + r.uniform(0.01, 0.1) * (1.0 + std::abs(at))) * 1e4) / 1e4;
    inst.constraints.push_back({std::move(f), rhs});
  }
  validate(inst);
  if (!evaluate(inst, anchor).feasible(0.0))
    throw std::logic_error("gen_bbp: calibration point is infeasible");
  return inst;
}

std::vector<std::string> pooling_kinds() { return {"haverly", "haverly2", "degenerate"}; }

QcqpInstance gen_pooling_toy(const std::string &kind, std::uint64_t seed) {
  PoolData d = pool_data(seed);
  QcqpInstance inst;
  inst.name = "pool_" + kind + "_s" + std::to_string(seed);

  if (kind == "haverly" || kind == "degenerate") {
    if (kind == "degenerate") d.qa = d.qb = d.qc;
    // a, b, q, c
    inst.n = 4;
    const double qlo = std::min(d.qa, d.qb), qhi = std::max(d.qa, d.qb);
    inst.box = VarBox({0, 0, qlo, 0}, {d.dx, d.dx, qhi, d.dx});
    inst.objective = form(4, {}, {d.ca - d.px, d.cb - d.px, 0, d.cc - d.px});
    add_equal(inst, form(4, {{0, 2, 1}, {1, 2, 1}}, {-d.qa, -d.qb, 0, 0}), 0.0);
    inst.constraints.push_back(
        {form(4, {{0, 2, 1}, {1, 2, 1}}, {-d.spec_x, -d.spec_x, 0, d.qc - d.spec_x}), 0.0});
    inst.constraints.push_back({form(4, {}, {1, 1, 0, 1}), d.dx});
  } else if (kind == "haverly2") {
    // a, b, q, x, y, c
    inst.n = 6;
    const double total = d.dx + d.dy;
    inst.box = VarBox({0, 0, std::min(d.qa, d.qb), 0, 0, 0},
                      {total, total, std::max(d.qa, d.qb), d.dx, d.dy, d.dy});
    inst.objective = form(6, {}, {d.ca, d.cb, 0, -d.px, -d.py, d.cc - d.py});
    add_equal(inst, form(6, {}, {1, 1, 0, -1, -1, 0}), 0.0);
    add_equal(inst, form(6, {{2, 3, 1}, {2, 4, 1}}, {-d.qa, -d.qb, 0, 0, 0, 0}), 0.0);
    inst.constraints.push_back({form(6, {{2, 3, 1}}, {0, 0, 0, -d.spec_x, 0, 0}), 0.0});
    inst.constraints.push_back(
        {form(6, {{2, 4, 1}}, {0, 0, 0, 0, -d.spec_y, d.qc - d.spec_y}), 0.0});
    inst.constraints.push_back({form(6, {}, {0, 0, 0, 0, 1, 1}), d.dy});
  } else {
    throw std::invalid_argument("unknown pooling kind '" + kind +
                                "' (expected haverly, haverly2 or degenerate)");
  }
  validate(inst);
  return inst;
}

CompareResult compare(const std::vector<NamedInstance> &instances, const std::vector<Rule> &rules,
                      const SolverConfig &config, std::uint64_t seed) {
  CompareResult out;
  out.rules = rules;
  for (const auto &ni : instances) {
    std::vector<SolveReport> reports;
    double best = kInf;
    for (Rule rule : rules) {
      SolverConfig cfg = config;
      cfg.rule = rule;
      cfg.primal.seed = seed;
      reports.push_back(solve(ni.instance, cfg));
      if (reports.back().z_star) best = std::min(best, *reports.back().z_star);
    }
    for (const auto &rep : reports) {
      RunRecord rec;
      rec.instance = ni.name;
      rec.rule = rep.rule;
      rec.verdict = rep.verdict;
      rec.gap_pct = std::isfinite(best) ? remaining_gap(best, rep.z_lb) : kInf;
      rec.time_s = rep.wall_seconds;
      rec.nodes = rep.nodes;
      rec.lp_solves = rep.lp_solves;
      rec.tightenings = rep.tightenings;
      rec.seed = seed;
      out.records.push_back(std::move(rec));
    }
  }
  return out;
}

double arithmetic_mean(const std::vector<double> &values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double geometric_mean(const std::vector<double> &values, double floor) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double v : values) s += std::log(std::max(v, floor));
  return std::exp(s / static_cast<double>(values.size()));
}

namespace {

const char *kFloorNote = "# geometric means raise values below 0.01 s and 0.001 % to those floors\n";

// records[instance][rule index]
std::vector<std::vector<const RunRecord *>> by_instance(const CompareResult &res) {
  std::vector<std::vector<const RunRecord *>> out;
  const std::size_t k = res.rules.size();
  if (k == 0) return out;
  for (std::size_t i = 0; i + k <= res.records.size(); i += k) {
    out.emplace_back();
    for (std::size_t r = 0; r < k; ++r) out.back().push_back(&res.records[i + r]);
  }
  return out;
}

}  // namespace

std::string runs_csv(const CompareResult &res) {
  std::ostringstream os;
  os << "instance,rule,verdict,gap_pct,time_s,nodes,lp_solves,tightenings,seed\n";
  for (const auto &r : res.records)
    os << r.instance << ',' << to_string(r.rule) << ',' << to_string(r.verdict) << ','
       << num(r.gap_pct) << ',' << num(r.time_s) << ',' << r.nodes << ',' << r.lp_solves << ','
       << r.tightenings << ',' << r.seed << '\n';
  return os.str();
}

std::string summary_csv(const CompareResult &res) {
  struct Range {
    const char *label;
    double lo, hi;
  };
  const Range ranges[] = {{"(0,10]", -kInf, 10}, {"(10,100]", 10, 100}, {"(100,1000]", 100, 1000},
                          {"(1000,3600]", 1000, 3600}, {"All", -kInf, kInf}};
  std::ostringstream os;
  os << kFloorNote << "range";
  for (Rule rule : res.rules) {
    const std::string r = to_string(rule);
    os << ',' << r << "_n_opt," << r << "_t_ari," << r << "_t_geo";
  }
  os << '\n';
  const auto groups = by_instance(res);
  for (const Range &range : ranges) {
    os << range.label;
    for (std::size_t k = 0; k < res.rules.size(); ++k) {
      std::vector<double> times;
      for (const auto &g : groups) {
        const bool all_solved = std::all_of(g.begin(), g.end(), [](auto *r) { return r->solved(); });
        if (!all_solved) continue;
        const double t = g[k]->time_s;
        if (t > range.lo && t <= range.hi) times.push_back(t);
      }
      os << ',' << times.size() << ',' << num(arithmetic_mean(times)) << ','
         << num(geometric_mean(times, kTimeFloor));
    }
    os << '\n';
  }
  return os.str();
}

std::string unsolved_csv(const CompareResult &res) {
  std::ostringstream os;
  os << kFloorNote << "n_inst";
  for (Rule rule : res.rules) os << ',' << to_string(rule) << "_gap_ari," << to_string(rule) << "_gap_geo";
  os << '\n';
  const auto groups = by_instance(res);
  std::vector<std::vector<double>> gaps(res.rules.size());
  std::size_t count = 0;
  for (const auto &g : groups) {
    if (std::all_of(g.begin(), g.end(), [](auto *r) { return r->solved(); })) continue;
    ++count;
    for (std::size_t k = 0; k < g.size(); ++k) gaps[k].push_back(g[k]->gap_pct);
  }
  os << count;
  for (const auto &v : gaps) os << ',' << num(arithmetic_mean(v)) << ',' << num(geometric_mean(v, kGapFloor));
  os << '\n';
  return os.str();
}

std::string overall_csv(const CompareResult &res) {
  std::ostringstream os;
  os << kFloorNote << "stat";
  for (const char *metric : {"gap", "time", "nodes"})
    for (Rule rule : res.rules) os << ',' << metric << '_' << to_string(rule);
  os << '\n';
  const std::size_t k = res.rules.size();
  std::vector<std::vector<double>> gap(k), time(k), nodes(k);
  for (const auto &g : by_instance(res)) {
    for (std::size_t r = 0; r < k; ++r) {
      gap[r].push_back(g[r]->gap_pct);
      time[r].push_back(g[r]->time_s);
      nodes[r].push_back(static_cast<double>(g[r]->nodes));
    }
  }
  os << "arithmetic";
  for (const auto *m : {&gap, &time, &nodes})
    for (const auto &v : *m) os << ',' << num(arithmetic_mean(v));
  os << "\ngeometric";
  for (const auto &v : gap) os << ',' << num(geometric_mean(v, kGapFloor));
  for (const auto &v : time) os << ',' << num(geometric_mean(v, kTimeFloor));
  for (const auto &v : nodes) os << ',' << num(geometric_mean(v, 1.0));
  os << '\n';
  return os.str();
}

}  // namespace esb
