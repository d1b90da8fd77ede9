#include "zonalclear/swm.hpp"

#include "zonalclear/convex.hpp"

#include <chrono>

namespace zc {

ClearingOutcome clear_swm(const MarketInstance& inst, const Settings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index np = static_cast<Eigen::Index>(inst.num_players());
  const Eigen::Index rows = inst.polytope.M.rows();
  const Matrix E = inst.aggregation();

  QuadraticProgram qp;
  qp.H = inst.slopes().asDiagonal();
  qp.g = inst.intercepts();
  qp.A_ineq = Matrix::Zero(rows + 2 * np, np);
  qp.b_ineq = Vector::Zero(rows + 2 * np);
  if (rows > 0) {
    qp.A_ineq.topRows(rows) = inst.polytope.M * E;
    qp.b_ineq.head(rows) = inst.polytope.b;
  }
  qp.A_ineq.middleRows(rows, np) = Matrix::Identity(np, np);
  qp.b_ineq.segment(rows, np) = inst.capacities();
  qp.A_ineq.bottomRows(np) = -Matrix::Identity(np, np);
  qp.A_eq = Matrix::Ones(1, np);
  qp.b_eq = Vector::Constant(1, inst.total_demand());

  SolverOptions opts;
  opts.tol = settings.solver_tol;
  opts.max_iters = settings.solver_max_iters;
  const Solution sol = solve_cqp(qp, opts);
  if (sol.status == Status::infeasible) throw InfeasibleError("clear_swm: instance is infeasible");

  const Vector x = polish_allocation(inst, sol.x);
  const Vector m = inst.slopes();
  const double objective = 0.5 * x.dot(m.cwiseProduct(x)) + inst.intercepts().dot(x);
  Diagnostics diag;
  diag.algorithm = "swm";
  diag.iterations = sol.iterations;
  diag.status = sol.status;
  diag.indicator = std::max({sol.primal_residual, sol.dual_residual, sol.complementarity});
  diag.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return make_outcome(inst, x, objective, std::move(diag), settings);
}

}  // namespace zc
