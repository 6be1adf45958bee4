#include "esb/primal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "esb/relaxation.hpp"

namespace esb {

namespace {

void clamp_to(const VarBox &box, std::vector<double> &x) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], box.lb[i], box.ub[i]);
}

double max_violation(const QcqpInstance &inst, const std::vector<double> &x) {
  double v = 0.0;
  for (const auto &c : inst.constraints) v = std::max(v, c.form.value(x) - c.rhs);
  return v;
}

double penalty_value(const QcqpInstance &inst, const std::vector<double> &x, double mu) {
  double v = inst.objective.value(x);
  for (const auto &c : inst.constraints) v += mu * std::max(0.0, c.form.value(x) - c.rhs);
  return v;
}

void penalty_gradient(const QcqpInstance &inst, const std::vector<double> &x, double mu,
                      std::vector<double> &grad) {
  inst.objective.gradient(x, grad);
  std::vector<double> g;
  for (const auto &c : inst.constraints) {
    if (c.form.value(x) - c.rhs <= 0.0) continue;
    c.form.gradient(x, g);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += mu * g[i];
  }
}

// Minimum-norm Newton corrections on the violated constraints, projected onto
// the box. Variables pinned at a bound in the direction of the step are frozen.
void restore_feasibility(const QcqpInstance &inst, const VarBox &box, std::vector<double> &x,
                         double target) {
  const int n = inst.n;
  std::vector<double> g;
  for (int iter = 0; iter < 60; ++iter) {
    std::vector<int> active;
    std::vector<double> resid;
    for (int k = 0; k < inst.num_constraints(); ++k) {
      const double r = inst.constraints[k].form.value(x) - inst.constraints[k].rhs;
      if (r > 0.0) {
        active.push_back(k);
        resid.push_back(r);
      }
    }
    double worst = 0.0;
    for (double r : resid) worst = std::max(worst, r);
    if (worst <= target) return;

    const int a = static_cast<int>(active.size());
    Eigen::MatrixXd jac(a, n);
    for (int r = 0; r < a; ++r) {
      inst.constraints[active[r]].form.gradient(x, g);
      for (int i = 0; i < n; ++i) jac(r, i) = g[i];
    }
    Eigen::VectorXd rhs = Eigen::Map<Eigen::VectorXd>(resid.data(), a);
    std::vector<char> frozen(n, 0);
    Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
    for (int pass = 0; pass <= n; ++pass) {
      Eigen::MatrixXd jf = jac;
      for (int i = 0; i < n; ++i)
        if (frozen[i]) jf.col(i).setZero();
      Eigen::MatrixXd gram = jf * jf.transpose();
      gram.diagonal().array() += 1e-12 * (1.0 + gram.diagonal().maxCoeff());
      step = -jf.transpose() * gram.ldlt().solve(rhs);
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        if (frozen[i]) continue;
        if ((x[i] <= box.lb[i] && step(i) < 0) || (x[i] >= box.ub[i] && step(i) > 0)) {
          frozen[i] = 1;
          changed = true;
        }
      }
      if (!changed) break;
    }
    if (!step.allFinite() || step.norm() == 0.0) return;
    for (int i = 0; i < n; ++i) x[i] += step(i);
    clamp_to(box, x);
  }
}

}  // namespace

std::optional<Incumbent> make_incumbent(const QcqpInstance &inst, std::vector<double> x,
                                        double feas_tol) {
  if (static_cast<int>(x.size()) != inst.n) return std::nullopt;
  for (double v : x)
    if (!std::isfinite(v)) return std::nullopt;
  Evaluation ev = evaluate(inst, x);
  const double residual = ev.max_violation();
  if (residual > feas_tol) return std::nullopt;
  return Incumbent{std::move(x), ev.objective, residual};
}

std::optional<Incumbent> local_improve(const QcqpInstance &inst, const VarBox &box,
                                       const std::vector<double> &start,
                                       const PrimalOptions &opt) {
  std::optional<Incumbent> best;
  auto offer = [&](const std::vector<double> &x) {
    auto cand = make_incumbent(inst, x, opt.feas_tol);
    if (cand && (!best || cand->objective < best->objective)) best = std::move(cand);
  };

  std::vector<double> x = start;
  x.resize(inst.n, 0.0);
  clamp_to(box, x);
  offer(x);
  const double target = 1e-2 * opt.feas_tol;

  {
    std::vector<double> y = x;
    restore_feasibility(inst, box, y, target);
    offer(y);
  }

  std::vector<double> grad(inst.n), trial(inst.n);
  inst.objective.gradient(x, grad);
  double gnorm = 0.0;
  for (double v : grad) gnorm = std::max(gnorm, std::abs(v));
  double mu = 10.0 * (1.0 + gnorm);
  double width = 0.0;
  for (int i = 0; i < inst.n; ++i) width = std::max(width, box.width(i));
  double step = width > 0 ? width : 1.0;

  double fx = penalty_value(inst, x, mu);
  for (int iter = 0; iter < opt.iterations; ++iter) {
    penalty_gradient(inst, x, mu, grad);
    bool moved = false;
    double s = std::min(2.0 * step, 1e6);
    while (s > 1e-14) {
      double decrease = 0.0;
      for (int i = 0; i < inst.n; ++i) {
        trial[i] = std::clamp(x[i] - s * grad[i], box.lb[i], box.ub[i]);
        decrease += grad[i] * (x[i] - trial[i]);
      }
      const double ft = penalty_value(inst, trial, mu);
      if (decrease > 0.0 && ft <= fx - 1e-4 * decrease) {
        x.swap(trial);
        fx = ft;
        step = s;
        moved = true;
        break;
      }
      s *= 0.5;
    }
    const double viol = max_violation(inst, x);
    if (viol <= opt.feas_tol) offer(x);
    if (!moved) {
      if (viol <= opt.feas_tol || mu > 1e10) break;
      mu *= 2.0;
      fx = penalty_value(inst, x, mu);
      step = width > 0 ? width : 1.0;
    }
  }
  restore_feasibility(inst, box, x, target);
  offer(x);
  return best;
}

RootSearch root_incumbent(const QcqpInstance &inst, double budget_seconds,
                          const PrimalOptions &opt) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };

  RootSearch out;
  auto run = [&](const std::vector<double> &start) {
    ++out.starts;
    auto cand = local_improve(inst, inst.box, start, opt);
    if (cand && (!out.incumbent || cand->objective < out.incumbent->objective))
      out.incumbent = std::move(cand);
  };

  std::vector<double> center(inst.n);
  for (int i = 0; i < inst.n; ++i) center[i] = inst.box.midpoint(i);
  run(center);

  if (out.starts >= opt.max_starts || elapsed() >= budget_seconds) return out;
  RelaxationBuilder builder(inst);
  auto lp_sol = lp::solve_lp(builder.build(inst.box).lp);
  if (lp_sol.optimal()) {
    run(std::vector<double>(lp_sol.x.begin(), lp_sol.x.begin() + inst.n));
  }

  std::mt19937_64 rng(opt.seed);
  std::vector<double> pt(inst.n);
  while (out.starts < opt.max_starts && elapsed() < budget_seconds) {
    for (int i = 0; i < inst.n; ++i) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      pt[i] = inst.box.lb[i] + u * inst.box.width(i);
    }
    run(pt);
  }
  return out;
}

}  // namespace esb
