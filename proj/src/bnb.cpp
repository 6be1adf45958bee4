#include "esb/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include <json.hpp>

#include "esb/relaxation.hpp"

namespace esb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
  double key;
  long id;
  long parent;
  int depth;
  VarBox box;
  bool requeued = false;
};

struct NodeOrder {
  bool operator()(const Node &a, const Node &b) const {
    if (a.key != b.key) return a.key > b.key;
    return a.id > b.id;
  }
};

nlohmann::ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

nlohmann::ordered_json box_json(const VarBox &box) {
  nlohmann::ordered_json lb = nlohmann::ordered_json::array(), ub = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < box.size(); ++i) {
    lb.push_back(number(box.lb[i]));
    ub.push_back(number(box.ub[i]));
  }
  return {{"lb", lb}, {"ub", ub}};
}

}  // namespace

std::string to_string(Rule rule) {
  switch (rule) {
    case Rule::Esb: return "esb";
    case Rule::Basic: return "basic";
    case Rule::Balance: return "balance";
  }
  return "?";
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Optimal: return "Optimal";
    case Verdict::GapReached: return "GapReached";
    case Verdict::NodeLimit: return "NodeLimit";
    case Verdict::TimeLimit: return "TimeLimit";
    case Verdict::Infeasible: return "Infeasible";
    case Verdict::Unresolved: return "Unresolved";
  }
  return "?";
}

Rule parse_rule(const std::string &name) {
  if (name == "esb") return Rule::Esb;
  if (name == "basic") return Rule::Basic;
  if (name == "balance") return Rule::Balance;
  throw std::invalid_argument("unknown rule '" + name + "' (expected esb, basic or balance)");
}

GapMeasure gap_measure(double z_star, double z_lb) {
  const double diff = std::abs(z_star - z_lb);
  if (z_star == 0.0) return {diff, true};
  return {100.0 * diff / std::abs(z_star), false};
}

double remaining_gap(double z_star, double z_lb) { return gap_measure(z_star, z_lb).value; }

SolveReport solve(const QcqpInstance &inst, const SolverConfig &cfg) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };

  SolveReport rep;
  rep.instance = inst.name;
  rep.rule = cfg.rule;

  RelaxationBuilder builder(inst);
  LpChildEvaluator evaluator(builder, cfg.lp);
  std::vector<int> candidates;
  if (cfg.branch_all_vars) {
    for (int i = 0; i < inst.n; ++i) candidates.push_back(i);
  } else {
    candidates = quadratic_variables(inst);
  }

  RootSearch root = root_incumbent(inst, cfg.root_budget, cfg.primal);
  rep.root_starts = root.starts;
  std::optional<Incumbent> incumbent = std::move(root.incumbent);
  auto offer = [&](std::optional<Incumbent> cand) {
    if (cand && (!incumbent || cand->objective < incumbent->objective)) incumbent = std::move(cand);
  };

  auto slack = [&](double z) { return z == 0.0 ? cfg.abs_gap_tol : cfg.gap_tol * std::abs(z); };
  auto obj_ub = [&] { return incumbent ? incumbent->objective : kInf; };
  auto closes = [&](double bound) { return incumbent && bound >= incumbent->objective - slack(incumbent->objective); };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> pool;
  long next_id = 0;
  pool.push({-kInf, next_id++, -1, 0, inst.box});
  rep.pushes = 1;
  double lost = kInf;  // bounds of nodes dropped without being resolved
  // Nodes pruned against the gap tolerance may still hold points slightly
  // better than the incumbent, so their bounds stay in z_lb.
  double pruned = kInf;
  double z_lb = -kInf;

  auto lower_bound = [&] {
    double lbv = std::min({lost, pruned, pool.empty() ? kInf : pool.top().key});
    if (incumbent) lbv = std::min(lbv, incumbent->objective);
    return lbv;
  };

  bool exhausted = false;
  while (true) {
    z_lb = std::max(z_lb, lower_bound());
    if (pool.empty()) {
      exhausted = true;
      break;
    }
    if (incumbent && gap_measure(incumbent->objective, z_lb).value <=
                         (incumbent->objective == 0.0 ? cfg.abs_gap_tol : 100.0 * cfg.gap_tol)) {
      rep.verdict = Verdict::GapReached;
      break;
    }
    if (rep.nodes >= cfg.node_limit) {
      rep.verdict = Verdict::NodeLimit;
      break;
    }
    if (elapsed() >= cfg.time_limit) {
      rep.verdict = Verdict::TimeLimit;
      break;
    }

    Node node = pool.top();
    pool.pop();
    ++rep.nodes;

    TraceEntry te;
    te.node = node.id;
    te.parent = node.parent;
    te.depth = node.depth;
    te.popped_bound = node.key;
    te.box_in = node.box;
    te.box_out = node.box;
    auto finish = [&](std::string action) {
      if (!cfg.trace) return;
      te.action = std::move(action);
      te.obj_ub = obj_ub();
      te.z_lb = std::max(z_lb, lower_bound());
      rep.trace.push_back(std::move(te));
    };

    if (closes(node.key)) {
      pruned = std::min(pruned, node.key);
      finish("prune_bound");
      continue;
    }

    ++rep.lp_solves;
    const lp::LpSolution sol = lp::solve_lp(builder.build(node.box).lp, cfg.lp);
    te.lp_bound = sol.objective;
    if (sol.status == lp::LpStatus::Infeasible) {
      finish("prune_infeasible");
      continue;
    }
    if (!sol.optimal()) {
      if (!node.requeued) {
        node.requeued = true;
        pool.push(node);
        ++rep.pushes;
        finish("requeue");
      } else {
        ++rep.numerical_discards;
        lost = std::min(lost, node.key);
        finish("discard");
      }
      continue;
    }

    const double bound = std::max(node.key, sol.objective);
    std::vector<double> x_lp(sol.x.begin(), sol.x.begin() + inst.n);
    offer(make_incumbent(inst, x_lp, cfg.primal.feas_tol));
    if (cfg.ub_frequency > 0 && rep.nodes % cfg.ub_frequency == 0)
      offer(local_improve(inst, inst.box, x_lp, cfg.primal));

    if (closes(bound)) {
      pruned = std::min(pruned, bound);
      finish("prune_bound");
      continue;
    }

    BranchDecision d;
    const long solves_before = evaluator.solves();
    switch (cfg.rule) {
      case Rule::Esb:
        d = esb_select(node.box, candidates, obj_ub(), bound, cfg.branch, evaluator);
        break;
      case Rule::Basic:
        d = basic_select(node.box, candidates, x_lp, obj_ub(), bound, cfg.branch, evaluator);
        break;
      case Rule::Balance: {
        std::vector<double> full(sol.x.begin(), sol.x.begin() + builder.map().num_columns());
        d = balance_select(node.box, builder.map(), full, cfg.branch);
        if (d.var < 0 && cfg.branch_all_vars) {
          BranchDecision fb = fallback_decision(node.box, candidates, cfg.branch);
          d.var = fb.var;
          d.alpha = fb.alpha;
        }
        break;
      }
    }
    rep.probe_solves += evaluator.solves() - solves_before;
    rep.tightenings += static_cast<long>(d.tightenings.size());
    te.var = d.var;
    te.alpha = d.alpha;
    te.score = d.score;
    te.fallback = d.fallback;
    te.box_out = d.box;
    te.tightenings = static_cast<int>(d.tightenings.size());

    if (d.prune) {
      finish("prune_rule");
      continue;
    }
    if (!d.has_branch()) {
      // Nothing wide enough to split: the relaxation is as tight as it gets.
      lost = std::min(lost, bound);
      finish("settled");
      continue;
    }

    rep.nodes_created += 2;
    const double keys[2] = {std::max(bound, d.left_objective), std::max(bound, d.right_objective)};
    const BranchSense senses[2] = {BranchSense::Down, BranchSense::Up};
    for (int s = 0; s < 2; ++s) {
      if (keys[s] == kInf) continue;
      if (closes(keys[s])) {
        pruned = std::min(pruned, keys[s]);
        continue;
      }
      pool.push({keys[s], next_id++, node.id, node.depth + 1,
                 child_box(d.box, d.var, senses[s], d.alpha)});
      ++rep.pushes;
    }
    finish("branch");
  }

  rep.lp_solves += rep.probe_solves;
  rep.open_nodes = static_cast<long>(pool.size());
  if (exhausted) {
    if (incumbent) {
      rep.verdict = lost == kInf || closes(lost) ? Verdict::Optimal : Verdict::Unresolved;
    } else {
      rep.verdict = lost == kInf ? Verdict::Infeasible : Verdict::Unresolved;
    }
  }
  rep.z_lb = z_lb;
  if (incumbent) {
    rep.z_star = incumbent->objective;
    rep.x_star = incumbent->x;
    rep.gap = gap_measure(incumbent->objective, z_lb);
  } else {
    rep.gap = {kInf, false};
  }
  rep.wall_seconds = elapsed();
  return rep;
}

std::string report_to_json(const SolveReport &rep, bool include_timing) {
  nlohmann::ordered_json j;
  j["instance"] = rep.instance;
  j["rule"] = to_string(rep.rule);
  if (rep.rule == Rule::Balance) j["rule_note"] = "reconstructed violation-balancing rule";
  j["verdict"] = to_string(rep.verdict);
  j["z_star"] = rep.z_star ? number(*rep.z_star) : nlohmann::ordered_json(nullptr);
  j["z_lb"] = number(rep.z_lb);
  j["gap_pct"] = number(rep.gap.value);
  j["gap_absolute"] = rep.gap.absolute;
  if (include_timing) j["wall_seconds"] = rep.wall_seconds;
  j["nodes"] = rep.nodes;
  j["nodes_created"] = rep.nodes_created;
  j["lp_solves"] = rep.lp_solves;
  j["probe_solves"] = rep.probe_solves;
  j["tightenings"] = rep.tightenings;
  j["numerical_discards"] = rep.numerical_discards;
  j["open_nodes"] = rep.open_nodes;
  j["root_starts"] = rep.root_starts;
  auto x = nlohmann::ordered_json::array();
  for (double v : rep.x_star) x.push_back(number(v));
  j["x_star"] = x;
  if (!rep.trace.empty()) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto &t : rep.trace) {
      nlohmann::ordered_json e;
      e["node"] = t.node;
      e["parent"] = t.parent;
      e["depth"] = t.depth;
      e["popped_bound"] = number(t.popped_bound);
      e["lp_bound"] = number(t.lp_bound);
      e["action"] = t.action;
      if (t.var >= 0) {
        e["var"] = t.var + 1;
        e["alpha"] = number(t.alpha);
        e["score"] = number(t.score);
        e["fallback"] = t.fallback;
      }
      e["tightenings"] = t.tightenings;
      e["obj_ub"] = number(t.obj_ub);
      e["z_lb"] = number(t.z_lb);
      e["box"] = box_json(t.box_in);
      e["tightened_box"] = box_json(t.box_out);
      arr.push_back(std::move(e));
    }
    j["trace"] = arr;
  }
  return j.dump(2) + "\n";
}

}  // namespace esb
