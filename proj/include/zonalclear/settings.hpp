#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace zc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Tolerances shared by every solver and checker. Each call site takes a
/// copy, so callers override per call.
struct Settings {
  double feasibility_tol = 1e-8;  ///< capacity, balance and polytope slack
  double price_tol = 1e-8;        ///< paradoxical-order comparison
  double activity_rel = 1e-9;     ///< x_i counts as active above activity_rel * Q_i
  double solver_tol = 1e-8;       ///< KKT tolerance handed to the LP/CQP kernel
  int solver_max_iters = 200;
};

enum class Status {
  optimal,
  infeasible,
  unbounded,
  stalled,
  gap_not_closed,
  cycling,
};

const char* to_string(Status s);

/// Thrown when an instance admits no feasible clearing.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input file.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a numerical routine cannot produce an answer (singular
/// system, non-convex input to a convex solver, ...).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zc
