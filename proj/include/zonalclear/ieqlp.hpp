#pragma once

#include "zonalclear/cm_common.hpp"

#include <optional>

namespace zc {

enum class StartMode { demand, chebyshev };

struct IeqlpSettings {
  int max_iters = 200;
  double tol = 1e-6;     ///< stop when ||x^i - x^{i-1}||^2 / ||x^i|| < tol
  double alpha_y = 0.5;  ///< weight kept on the previous guess; 0 is the plain method
  StartMode start = StartMode::demand;
  std::optional<Vector> y0;  ///< explicit start, overrides `start`
};

struct IeqlpResult {
  Vector x;  ///< best allocation seen
  Vector v;  ///< mc-BLP prices of that allocation
  double f_best = 0.0;
  int iterations = 0;
  double indicator = 0.0;
  Status status = Status::stalled;
  std::vector<double> f_trace;  ///< best-so-far objective after each iteration
};

/// Iterated quasi-LP with moving-average damping of the quantity guess.
/// `network` restricts y to another polytope (branch-and-bound nodes).
/// Throws InfeasibleError if the very first LP is infeasible.
IeqlpResult ieqlp_solve(const MarketInstance& inst, const ActiveEstimate& est,
                        const IeqlpSettings& ieq, const Polytope* network = nullptr,
                        const Settings& settings = {});

ClearingOutcome run_ieqlp(const MarketInstance& inst, const ActiveEstimate& est,
                          const IeqlpSettings& ieq = {}, const Settings& settings = {});

}  // namespace zc
