#include "esb/branching.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace esb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

BranchSense sense_of(Side side) { return side == Side::Left ? BranchSense::Down : BranchSense::Up; }

void tighten(BranchDecision &d, int var, Side side, double alpha, double obj_ub) {
  double &bound = side == Side::Left ? d.box.lb[var] : d.box.ub[var];
  const double updated = side == Side::Left ? std::max(bound, alpha) : std::min(bound, alpha);
  if (updated == bound) return;
  d.tightenings.push_back({var, side, alpha, bound, updated, obj_ub});
  bound = updated;
}

// Both children of some point failed, or a failure reached the opposite bound.
bool interval_closed(const BranchDecision &d, int var) { return d.box.lb[var] >= d.box.ub[var]; }

BranchDecision pruned(BranchDecision d) {
  d.prune = true;
  d.var = -1;
  d.score = -kInf;
  return d;
}

}  // namespace

std::string to_string(Side side) { return side == Side::Left ? "L" : "R"; }

ProbeOutcome LpChildEvaluator::evaluate(const VarBox &box, int var, Side side, double alpha) {
  const double lb = box.lb[var], ub = box.ub[var];
  if ((side == Side::Left && alpha < lb) || (side == Side::Right && alpha > ub))
    return {ProbeStatus::Infeasible, kInf};
  const double at = std::clamp(alpha, lb, ub);
  ++solves_;
  auto sol = lp::solve_lp(builder_.child(box, var, sense_of(side), at).lp, options_);
  switch (sol.status) {
    case lp::LpStatus::Optimal: return {ProbeStatus::Solved, sol.objective};
    case lp::LpStatus::Infeasible: return {ProbeStatus::Infeasible, kInf};
    default: return {ProbeStatus::Numerical, 0.0};
  }
}

double branch_score(double obj_left, double obj_right, double obj_parent, double epsilon) {
  return std::max(obj_left - obj_parent, epsilon) * std::max(obj_right - obj_parent, epsilon);
}

bool probe_failed(const ProbeOutcome &outcome, double obj_ub, double prune_tol) {
  if (outcome.status == ProbeStatus::Infeasible) return true;
  return outcome.status == ProbeStatus::Solved && outcome.objective > obj_ub + prune_tol;
}

void binary_search_step(Side side, CandidateRecord &rec, double obj_ub, const BranchParams &params,
                        ChildEvaluator &evaluator, BranchDecision &decision) {
  SearchPointers &ptr = side == Side::Left ? rec.left : rec.right;
  if (ptr.done) return;
  const double alpha = 0.5 * (ptr.p1 + ptr.p2);
  const ProbeOutcome out = evaluator.evaluate(decision.box, rec.var, side, alpha);
  const bool failed = probe_failed(out, obj_ub, params.prune_tol);
  decision.probes.push_back({rec.var, side, alpha, out.status, out.objective, false, failed});
  if (out.status == ProbeStatus::Numerical) return;

  if (failed) {
    ptr.p1 = alpha;
    tighten(decision, rec.var, side, alpha, obj_ub);
  } else {
    ptr.p2 = alpha;
    auto &points = side == Side::Left ? rec.left_points : rec.right_points;
    auto &objs = side == Side::Left ? rec.left_obj : rec.right_obj;
    if (objs.emplace(alpha, out.objective).second) points.push_back(alpha);
  }
  if (ptr.p1 == ptr.p2) ptr.done = true;
}

BranchDecision esb_select(const VarBox &box, std::span<const int> candidates, double obj_ub,
                          double obj_parent, const BranchParams &params,
                          ChildEvaluator &evaluator) {
  BranchDecision d;
  d.box = box;

  for (int var : candidates) {
    if (d.box.width(var) <= params.min_width) continue;
    CandidateRecord rec;
    rec.var = var;
    rec.left = {d.box.lb[var], d.box.ub[var], false};
    rec.right = {d.box.ub[var], d.box.lb[var], false};

    for (int iter = 0; iter < params.iter_max; ++iter) {
      binary_search_step(Side::Left, rec, obj_ub, params, evaluator, d);
      binary_search_step(Side::Right, rec, obj_ub, params, evaluator, d);
      if (interval_closed(d, var)) {
        d.records.push_back(std::move(rec));
        return pruned(std::move(d));
      }
    }

    std::set<double> points(rec.left_points.begin(), rec.left_points.end());
    points.insert(rec.right_points.begin(), rec.right_points.end());

    // Fill in the side that the binary search did not solve.
    for (double alpha : points) {
      if (!(d.box.lb[var] < alpha && alpha < d.box.ub[var])) continue;
      for (Side side : {Side::Left, Side::Right}) {
        auto &objs = side == Side::Left ? rec.left_obj : rec.right_obj;
        if (objs.count(alpha)) continue;
        if (!(d.box.lb[var] < alpha && alpha < d.box.ub[var])) break;
        const ProbeOutcome out = evaluator.evaluate(d.box, var, side, alpha);
        const bool failed = probe_failed(out, obj_ub, params.prune_tol);
        d.probes.push_back({var, side, alpha, out.status, out.objective, true, failed});
        if (out.status == ProbeStatus::Numerical) continue;
        if (failed)
          tighten(d, var, side, alpha, obj_ub);
        else
          objs.emplace(alpha, out.objective);
      }
      if (interval_closed(d, var)) {
        d.records.push_back(std::move(rec));
        return pruned(std::move(d));
      }
    }

    // Values gathered under looser boxes stay valid lower bounds for the
    // final box; a running max restores the monotone shape of each curve.
    double running = -kInf;
    for (auto it = rec.left_obj.rbegin(); it != rec.left_obj.rend(); ++it)
      it->second = running = std::max(running, it->second);
    running = -kInf;
    for (auto &[alpha, obj] : rec.right_obj) obj = running = std::max(running, obj);

    for (double alpha : points) {
      if (!(d.box.lb[var] < alpha && alpha < d.box.ub[var])) continue;
      auto l = rec.left_obj.find(alpha);
      auto r = rec.right_obj.find(alpha);
      if (l == rec.left_obj.end() || r == rec.right_obj.end()) continue;
      const double score = branch_score(l->second, r->second, obj_parent, params.epsilon);
      if (score > d.score) {
        d.score = score;
        d.var = var;
        d.alpha = alpha;
        d.left_objective = l->second;
        d.right_objective = r->second;
      }
    }
    d.records.push_back(std::move(rec));
  }

  if (d.var < 0) {
    BranchDecision fb = fallback_decision(d.box, candidates, params);
    d.var = fb.var;
    d.alpha = fb.alpha;
    d.fallback = true;
  }
  return d;
}

BranchDecision basic_select(const VarBox &box, std::span<const int> candidates,
                            const std::vector<double> &x_star, double obj_ub, double obj_parent,
                            const BranchParams &params, ChildEvaluator &evaluator) {
  BranchDecision d;
  d.box = box;
  for (int var : candidates) {
    const double lb = box.lb[var], ub = box.ub[var], width = ub - lb;
    if (width <= params.min_width) continue;
    const double margin = params.basic_margin * width;
    const double raw = params.lambda * box.midpoint(var) + (1.0 - params.lambda) * x_star[var];
    const double alpha = std::clamp(raw, lb + margin, ub - margin);

    ProbeOutcome out[2];
    bool failed[2];
    bool numerical = false;
    for (Side side : {Side::Left, Side::Right}) {
      const int k = side == Side::Left ? 0 : 1;
      out[k] = evaluator.evaluate(box, var, side, alpha);
      failed[k] = probe_failed(out[k], obj_ub, params.prune_tol);
      numerical |= out[k].status == ProbeStatus::Numerical;
      d.probes.push_back({var, side, alpha, out[k].status, out[k].objective, false, failed[k]});
    }
    if (numerical) continue;
    if (failed[0] && failed[1]) return pruned(std::move(d));

    // A failed child is discarded as soon as it is created; with an incumbent
    // it is worth at least obj_ub, without one it dominates every finite score.
    double score;
    double left = out[0].objective, right = out[1].objective;
    if (failed[0] || failed[1]) {
      if (std::isfinite(obj_ub)) {
        if (failed[0]) left = obj_ub;
        if (failed[1]) right = obj_ub;
        score = branch_score(left, right, obj_parent, params.epsilon);
      } else {
        score = kInf;
      }
    } else {
      score = branch_score(left, right, obj_parent, params.epsilon);
    }
    if (score > d.score) {
      d.score = score;
      d.var = var;
      d.alpha = alpha;
      d.left_objective = failed[0] ? kInf : left;
      d.right_objective = failed[1] ? kInf : right;
    }
  }
  if (d.var < 0) {
    BranchDecision fb = fallback_decision(d.box, candidates, params);
    d.var = fb.var;
    d.alpha = fb.alpha;
    d.fallback = true;
  }
  return d;
}

BranchDecision balance_select(const VarBox &box, const RelaxationMap &map,
                              const std::vector<double> &lp_point, const BranchParams &params) {
  BranchDecision d;
  d.box = box;

  int best_pair = -1;
  double best_viol = 0.0;
  for (std::size_t k = 0; k < map.pairs.size(); ++k) {
    const auto [i, j] = map.pairs[k];
    if (box.width(i) <= params.min_width && box.width(j) <= params.min_width) continue;
    const double w = lp_point[map.n + k];
    const double viol = std::abs(w - lp_point[i] * lp_point[j]);
    if (viol > best_viol) {
      best_viol = viol;
      best_pair = static_cast<int>(k);
    }
  }
  if (best_pair < 0 || best_viol <= 1e-9) {
    std::set<int> vars;
    for (const auto &[i, j] : map.pairs) vars.insert({i, j});
    std::vector<int> cands(vars.begin(), vars.end());
    BranchDecision fb = fallback_decision(box, cands, params);
    d.var = fb.var;
    d.alpha = fb.alpha;
    d.fallback = true;
    return d;
  }

  const auto [pi, pj] = map.pairs[best_pair];
  const bool diag = pi == pj;
  const double w = lp_point[map.n + best_pair];
  double best_diff = kInf, best_min = -kInf;
  for (int var : {pi, pj}) {
    const double lb = box.lb[var], ub = box.ub[var];
    if (ub - lb <= params.min_width) continue;
    for (int k = 1; k < params.balance_grid; ++k) {
      const double alpha = lb + (ub - lb) * k / params.balance_grid;
      double viol[2];
      for (int s = 0; s < 2; ++s) {
        VarBox child = child_box(box, var, s == 0 ? BranchSense::Down : BranchSense::Up, alpha);
        double xi = lp_point[pi], xj = lp_point[pj];
        if (var == pi) xi = std::clamp(xi, child.lb[pi], child.ub[pi]);
        if (var == pj) xj = std::clamp(xj, child.lb[pj], child.ub[pj]);
        viol[s] = envelope_violation(diag, child.lb[pi], child.ub[pi], child.lb[pj], child.ub[pj],
                                     xi, xj, w);
      }
      if (viol[0] + viol[1] <= 0.0) continue;
      const double diff = std::abs(viol[0] - viol[1]);
      const double lo = std::min(viol[0], viol[1]);
      const double tie = 1e-12 * (1.0 + best_viol);
      if (diff < best_diff - tie || (diff <= best_diff + tie && lo > best_min + tie)) {
        best_diff = diff;
        best_min = lo;
        d.var = var;
        d.alpha = alpha;
        d.score = -diff;
      }
    }
    if (diag) break;
  }
  if (d.var < 0) {
    std::vector<int> cands{pi, pj};
    BranchDecision fb = fallback_decision(box, cands, params);
    d.var = fb.var;
    d.alpha = fb.alpha;
    d.fallback = true;
  }
  return d;
}

BranchDecision fallback_decision(const VarBox &box, std::span<const int> candidates,
                                 const BranchParams &params) {
  BranchDecision d;
  d.box = box;
  d.fallback = true;
  double widest = params.min_width;
  for (int var : candidates) {
    if (box.width(var) > widest) {
      widest = box.width(var);
      d.var = var;
    }
  }
  if (d.var >= 0) d.alpha = box.midpoint(d.var);
  return d;
}

}  // namespace esb
