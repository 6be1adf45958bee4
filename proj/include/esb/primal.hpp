#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "esb/instance.hpp"

namespace esb {

/// A feasible point with its exact objective. Only make_incumbent creates one,
/// so the residual bound always holds.
struct Incumbent {
  std::vector<double> x;
  double objective = 0.0;
  double residual = 0.0;
};

struct PrimalOptions {
  double feas_tol = 1e-6;
  int iterations = 500;  // per start
  int max_starts = 20;
  std::uint64_t seed = 0;
};

/// Validates x against the instance; nullopt when the violation exceeds feas_tol.
std::optional<Incumbent> make_incumbent(const QcqpInstance &instance, std::vector<double> x,
                                        double feas_tol);

/// Projected gradient on an exact penalty inside `box`, followed by a
/// Gauss-Newton feasibility restoration. Returns the best feasible point seen
/// (the clamped start included).
std::optional<Incumbent> local_improve(const QcqpInstance &instance, const VarBox &box,
                                       const std::vector<double> &start,
                                       const PrimalOptions &options = {});

struct RootSearch {
  std::optional<Incumbent> incumbent;
  int starts = 0;
};

/// Multi-start local_improve over the global box: box center first, then the
/// root relaxation point, then seeded uniform points, while the wall-clock
/// budget lasts. The center is always tried.
RootSearch root_incumbent(const QcqpInstance &instance, double budget_seconds,
                          const PrimalOptions &options = {});

}  // namespace esb
