#include "zonalclear/ieqlp.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace zc {

IeqlpResult ieqlp_solve(const MarketInstance& inst, const ActiveEstimate& est,
                        const IeqlpSettings& ieq, const Polytope* network,
                        const Settings& settings) {
  if (!(ieq.alpha_y >= 0.0 && ieq.alpha_y < 1.0))
    throw std::invalid_argument("ieqlp: alpha_y must lie in [0, 1)");
  const McLayout L = make_layout(inst, est);
  const Matrix E = inst.aggregation();
  const Vector Q = inst.capacities();

  Vector y_hat;
  if (ieq.y0) {
    y_hat = *ieq.y0;
  } else if (ieq.start == StartMode::chebyshev) {
    const Polytope region = reachable_region(inst, network);
    SolverOptions o;
    o.tol = settings.solver_tol;
    y_hat = chebyshev_center(region, Matrix::Ones(1, E.rows()),
                             Vector::Constant(1, inst.total_demand()), o)
                .center;
  } else {
    y_hat = inst.demand;
  }

  SolverOptions opts;
  opts.tol = settings.solver_tol;
  opts.max_iters = settings.solver_max_iters;

  IeqlpResult res;
  res.f_best = std::numeric_limits<double>::infinity();
  Vector x_prev;
  for (int it = 1; it <= ieq.max_iters; ++it) {
    const LinearProgram lp = build_mc_qlp(inst, est, y_hat, network);
    const Solution sol = solve_lp(lp, opts);
    res.iterations = it;
    if (sol.status != Status::optimal) {
      if (it == 1 && sol.status == Status::infeasible)
        throw InfeasibleError("ieqlp: quasi-LP infeasible on this region");
      if (it == 1) throw SolverError(std::string("ieqlp: first LP ") + to_string(sol.status));
      res.status = Status::stalled;
      break;
    }
    const Vector x = L.expand_x(inst, sol.x).cwiseMax(0.0).cwiseMin(Q);
    const double f = mc_objective(inst, est, x);
    if (f < res.f_best) {
      res.f_best = f;
      res.x = x;
    }
    res.f_trace.push_back(res.f_best);
    if (x_prev.size() > 0) {
      const double nx = x.norm();
      res.indicator = (x - x_prev).squaredNorm() / (nx > 0.0 ? nx : 1.0);
      if (res.indicator < ieq.tol) {
        res.status = Status::optimal;
        break;
      }
    }
    x_prev = x;
    y_hat = ieq.alpha_y * y_hat + (1.0 - ieq.alpha_y) * (E * x);
  }

  res.v = Vector::Zero(E.rows());
  for (std::size_t z = 0; z < est.zones.size(); ++z)
    for (std::size_t i : est.zones[z])
      res.v(static_cast<Eigen::Index>(z)) =
          std::max(res.v(static_cast<Eigen::Index>(z)), inst.players[i].ask(res.x(static_cast<Eigen::Index>(i))));
  return res;
}

ClearingOutcome run_ieqlp(const MarketInstance& inst, const ActiveEstimate& est,
                          const IeqlpSettings& ieq, const Settings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  const IeqlpResult r = ieqlp_solve(inst, est, ieq, nullptr, settings);
  Diagnostics diag;
  diag.algorithm = ieq.alpha_y > 0.0 ? "ieqlp-ma" : "ieqlp";
  diag.iterations = r.iterations;
  diag.indicator = r.indicator;
  diag.status = r.status;
  diag.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return make_outcome(inst, polish_allocation(inst, r.x), r.f_best, std::move(diag), settings);
}

}  // namespace zc
