// esb: spatial branch-and-bound for box-constrained QCQPs.
//
//   esb solve instance.json [--rule esb|basic|balance] [--trace] ...
//   esb compare dir/ [--rules esb,basic,balance] [--out results/]
//   esb gen bbp NL NR DENSITY [--seed S] [--out file]
//   esb gen pooling haverly|haverly2|degenerate [--seed S] [--out file]

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "esb/bench.hpp"
#include "esb/bnb.hpp"
#include "esb/instance.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInputError = 1, kLimit = 2, kInfeasible = 3 };

struct SolverFlags {
  std::string rule = "esb";
  esb::SolverConfig cfg;
  std::uint64_t seed = 0;
  bool no_timing = false;
};

void add_solver_flags(CLI::App *app, SolverFlags &f, bool single_rule) {
  auto &c = f.cfg;
  if (single_rule)
    app->add_option("--rule", f.rule, "Branching rule: esb, basic or balance")
        ->check(CLI::IsMember({"esb", "basic", "balance"}))
        ->capture_default_str();
  app->add_option("--gap-tol", c.gap_tol, "Relative optimality gap to stop at (0.001 = 0.1%)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--time-limit", c.time_limit, "Wall-clock limit in seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--node-limit", c.node_limit, "Maximum number of processed nodes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--iter-max", c.branch.iter_max,
                  "Binary-search steps per side and variable (esb rule)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--epsilon", c.branch.epsilon, "Floor on each child's improvement in the score")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--lambda", c.branch.lambda,
                  "Basic rule: weight of the interval midpoint against the relaxation point")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app->add_option("--ub-frequency", c.ub_frequency,
                  "Run the local primal heuristic every this many processed nodes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--feas-tol", c.primal.feas_tol, "Constraint violation allowed for incumbents")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--root-budget", c.root_budget,
                  "Seconds for the multi-start incumbent search before branching")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app->add_option("--seed", f.seed, "Seed for the random starts of the primal heuristic")
      ->capture_default_str();
  app->add_flag("--branch-all-vars", c.branch_all_vars,
                "Also branch on variables that appear only linearly");
  app->add_flag("--no-timing", f.no_timing,
                "Omit wall-clock fields so repeated runs give identical output");
}

esb::SolverConfig finish(SolverFlags &f) {
  esb::SolverConfig c = f.cfg;
  c.rule = esb::parse_rule(f.rule);
  c.primal.seed = f.seed;
  return c;
}

void write_text(const std::string &path, const std::string &text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int verdict_exit(esb::Verdict v) {
  switch (v) {
    case esb::Verdict::Optimal:
    case esb::Verdict::GapReached: return kOk;
    case esb::Verdict::Infeasible: return kInfeasible;
    default: return kLimit;
  }
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Spatial branch-and-bound for box-constrained QCQPs"};
  app.require_subcommand(1);

  SolverFlags solve_flags;
  std::string solve_path, solve_out;
  bool trace = false;
  auto *solve = app.add_subcommand("solve", "Solve one instance and print a JSON report");
  solve->add_option("instance", solve_path, "Instance JSON file")->required();
  add_solver_flags(solve, solve_flags, true);
  solve->add_flag("--trace", trace, "Include the per-node trace in the report");
  solve->add_option("--out", solve_out, "Write the report here instead of stdout");

  SolverFlags cmp_flags;
  std::string cmp_dir, cmp_out = ".";
  std::vector<std::string> cmp_rules{"esb", "basic", "balance"};
  auto *cmp = app.add_subcommand("compare", "Run several rules on every *.json file of a directory");
  cmp->add_option("dir", cmp_dir, "Directory of instance files")->required();
  cmp->add_option("--rules", cmp_rules, "Comma-separated rules to run")
      ->delimiter(',')
      ->check(CLI::IsMember({"esb", "basic", "balance"}))
      ->capture_default_str();
  cmp->add_option("--out", cmp_out,
                  "Directory for runs.csv, summary.csv, unsolved.csv and overall.csv")
      ->capture_default_str();
  add_solver_flags(cmp, cmp_flags, false);

  auto *gen = app.add_subcommand("gen", "Write a generated instance");
  gen->require_subcommand(1);
  int nl = 0, nr = 0;
  double density = 1.0;
  std::uint64_t gen_seed = 0;
  std::string gen_out, kind;
  auto *bbp = gen->add_subcommand("bbp", "Bilinear bipartite instance");
  bbp->add_option("n_left", nl, "Variables in the left group")->required();
  bbp->add_option("n_right", nr, "Variables in the right group")->required();
  bbp->add_option("density", density, "Probability that a left-right product is present, in (0,1]")
      ->required();
  auto *pool = gen->add_subcommand("pooling", "One-pool blending instance");
  pool->add_option("kind", kind, "haverly, haverly2 or degenerate")->required();
  for (auto *sub : {bbp, pool}) {
    sub->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
    sub->add_option("--out", gen_out, "Output file (stdout when omitted)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*solve) {
      esb::SolverConfig cfg = finish(solve_flags);
      cfg.trace = trace;
      const esb::QcqpInstance inst = esb::load_instance(solve_path);
      const esb::SolveReport rep = esb::solve(inst, cfg);
      write_text(solve_out, esb::report_to_json(rep, !solve_flags.no_timing));
      if (rep.numerical_discards > 0)
        std::cerr << "warning: " << rep.numerical_discards
                  << " node(s) dropped after repeated LP failures\n";
      return verdict_exit(rep.verdict);
    }

    if (*cmp) {
      esb::SolverConfig cfg = finish(cmp_flags);
      std::vector<esb::Rule> rules;
      for (const auto &r : cmp_rules) rules.push_back(esb::parse_rule(r));
      if (!fs::is_directory(cmp_dir)) throw std::runtime_error("not a directory: " + cmp_dir);
      std::vector<fs::path> files;
      for (const auto &e : fs::directory_iterator(cmp_dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      std::vector<esb::NamedInstance> instances;
      for (const auto &p : files) instances.push_back({p.stem().string(), esb::load_instance(p.string())});
      esb::CompareResult res = esb::compare(instances, rules, cfg, cmp_flags.seed);
      fs::create_directories(cmp_out);
      const fs::path out(cmp_out);
      write_text((out / "runs.csv").string(), esb::runs_csv(res));
      write_text((out / "summary.csv").string(), esb::summary_csv(res));
      write_text((out / "unsolved.csv").string(), esb::unsolved_csv(res));
      write_text((out / "overall.csv").string(), esb::overall_csv(res));
      std::cout << esb::runs_csv(res);
      return kOk;
    }

    if (*bbp) {
      write_text(gen_out, esb::serialize_instance(esb::gen_bbp(nl, nr, density, gen_seed)));
      return kOk;
    }
    if (*pool) {
      write_text(gen_out, esb::serialize_instance(esb::gen_pooling_toy(kind, gen_seed)));
      return kOk;
    }
  } catch (const esb::InstanceError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}
