#include "zonalclear/ibcqp.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace zc {

QuadraticProgram build_sub_cqp(const MarketInstance& inst, const std::vector<StackSegment>& segments) {
  const Eigen::Index nz = static_cast<Eigen::Index>(inst.num_zones());
  if (static_cast<Eigen::Index>(segments.size()) != nz)
    throw std::invalid_argument("build_sub_cqp: need one segment per zone");
  QuadraticProgram qp;
  qp.H = Matrix::Zero(nz, nz);
  qp.g = Vector::Zero(nz);
  std::vector<Eigen::Index> pinned, boxed;
  for (Eigen::Index z = 0; z < nz; ++z) {
    const auto& s = segments[static_cast<std::size_t>(z)];
    if (s.vertical) {
      qp.g(z) = s.v_lo;
      pinned.push_back(z);
    } else {
      qp.H(z, z) = 2.0 * s.alpha;
      qp.g(z) = s.beta - s.alpha * s.Q_s;
      boxed.push_back(z);
    }
  }
  const Eigen::Index nr = inst.polytope.M.rows();
  const Eigen::Index nb = static_cast<Eigen::Index>(boxed.size());
  qp.A_ineq = Matrix::Zero(nr + 2 * nb, nz);
  qp.b_ineq = Vector::Zero(nr + 2 * nb);
  if (nr > 0) {
    qp.A_ineq.topRows(nr) = inst.polytope.M;
    qp.b_ineq.head(nr) = inst.polytope.b;
  }
  for (Eigen::Index k = 0; k < nb; ++k) {
    const auto& s = segments[static_cast<std::size_t>(boxed[static_cast<std::size_t>(k)])];
    qp.A_ineq(nr + k, boxed[static_cast<std::size_t>(k)]) = 1.0;
    qp.b_ineq(nr + k) = s.y_hi;
    qp.A_ineq(nr + nb + k, boxed[static_cast<std::size_t>(k)]) = -1.0;
    qp.b_ineq(nr + nb + k) = -s.y_lo;
  }
  const Eigen::Index np = static_cast<Eigen::Index>(pinned.size());
  qp.A_eq = Matrix::Zero(1 + np, nz);
  qp.b_eq = Vector::Zero(1 + np);
  qp.A_eq.row(0).setOnes();
  qp.b_eq(0) = inst.total_demand();
  for (Eigen::Index k = 0; k < np; ++k) {
    qp.A_eq(1 + k, pinned[static_cast<std::size_t>(k)]) = 1.0;
    qp.b_eq(1 + k) = segments[static_cast<std::size_t>(pinned[static_cast<std::size_t>(k)])].Q_s;
  }
  return qp;
}

Vector recover_x(const MarketInstance& inst, const Vector& y, const std::vector<StackSegment>& segments) {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(inst.num_players()));
  for (std::size_t z = 0; z < segments.size(); ++z) {
    const auto& s = segments[z];
    const double yz = y(static_cast<Eigen::Index>(z));
    for (std::size_t i : s.sets.full) x(static_cast<Eigen::Index>(i)) = inst.players[i].Q;
    if (s.vertical) continue;
    const double v = s.price(yz);
    double sum = s.Q_s;
    for (std::size_t i : s.sets.marginal) {
      const auto& p = inst.players[i];
      double xi = (v - p.a) / p.m;
      const double slack = 1e-8 * std::max(1.0, p.Q);
      if (xi < -slack || xi > p.Q + slack) {
        std::ostringstream os;
        os << "recover_x: player " << p.id << " gets " << xi << " outside [0, " << p.Q
           << "]; segment does not hold y = " << yz;
        throw std::logic_error(os.str());
      }
      xi = std::clamp(xi, 0.0, p.Q);
      x(static_cast<Eigen::Index>(i)) = xi;
      sum += xi;
    }
    if (std::abs(sum - yz) > 1e-8 * std::max(1.0, yz))
      throw std::logic_error("recover_x: zone allocation does not add up to y");
  }
  return x;
}

Vector recover_x(const MarketInstance& inst, const Vector& y, const std::vector<ZonalStackCurve>& curves) {
  std::vector<StackSegment> segs;
  for (std::size_t z = 0; z < curves.size(); ++z)
    segs.push_back(segment_lookup(curves[z], y(static_cast<Eigen::Index>(z))));
  return recover_x(inst, y, segs);
}

namespace {

// Neighbouring sloped segment in the given direction, or npos.
std::size_t sloped_neighbour(const ZonalStackCurve& c, std::size_t k, int dir) {
  long j = static_cast<long>(k) + dir;
  while (j >= 0 && j < static_cast<long>(c.segments.size())) {
    if (!c.segments[static_cast<std::size_t>(j)].vertical) return static_cast<std::size_t>(j);
    j += dir;
  }
  return static_cast<std::size_t>(-1);
}

}  // namespace

ClearingOutcome run_ibcqp(const MarketInstance& inst, const IbcqpSettings& ib, const Settings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t nz = inst.num_zones();
  const auto curves = build_stack_curves(inst);
  const Vector cap = inst.zone_capacity();

  Vector y;
  if (ib.y0) {
    y = *ib.y0;
  } else {
    SolverOptions o;
    o.tol = settings.solver_tol;
    y = chebyshev_center(reachable_region(inst), Matrix::Ones(1, static_cast<Eigen::Index>(nz)),
                         Vector::Constant(1, inst.total_demand()), o)
            .center;
  }
  y = y.cwiseMax(0.0).cwiseMin(cap);

  std::vector<std::size_t> idx(nz);
  for (std::size_t z = 0; z < nz; ++z) idx[z] = segment_index(curves[z], y(static_cast<Eigen::Index>(z)));

  SolverOptions opts;
  opts.tol = ib.cqp_tol;
  opts.max_iters = settings.solver_max_iters;

  std::set<std::vector<std::size_t>> visited;
  Vector best_y;
  std::vector<std::size_t> best_idx;
  double best_f = std::numeric_limits<double>::infinity();
  Status status = Status::cycling;
  double indicator = 0.0;
  int it = 0;
  for (; it < ib.max_outer; ++it) {
    visited.insert(idx);
    std::vector<StackSegment> segs;
    for (std::size_t z = 0; z < nz; ++z) segs.push_back(curves[z].segments[idx[z]]);
    const Solution sol = solve_cqp(build_sub_cqp(inst, segs), opts);
    if (sol.status == Status::infeasible) {
      if (it == 0) throw InfeasibleError("ibcqp: starting box combination is infeasible");
      status = Status::stalled;
      break;
    }
    Vector y_new = sol.x;
    for (std::size_t z = 0; z < nz; ++z) {
      const auto& s = segs[z];
      y_new(static_cast<Eigen::Index>(z)) = std::clamp(y_new(static_cast<Eigen::Index>(z)), s.y_lo, s.y_hi);
    }
    indicator = (y_new - y).norm() / std::max(1e-300, y_new.norm());
    y = y_new;
    const double f = stack_objective(curves, y);
    if (f < best_f) {
      best_f = f;
      best_y = y;
      best_idx = idx;
    }

    // Zones sitting on a box face move to the neighbouring segment.
    bool on_boundary = false, switched = false;
    std::vector<std::size_t> next = idx;
    for (std::size_t z = 0; z < nz; ++z) {
      const auto& s = segs[z];
      if (s.vertical) continue;
      const double yz = y(static_cast<Eigen::Index>(z));
      const double btol = std::max(1e-9, ib.cqp_tol) * (1.0 + std::abs(yz));
      int dir = 0;
      if (s.y_hi - yz <= btol) dir = 1;
      else if (yz - s.y_lo <= btol) dir = -1;
      if (dir == 0) continue;
      const std::size_t k = sloped_neighbour(curves[z], idx[z], dir);
      if (k == static_cast<std::size_t>(-1)) continue;  // capacity or zero bound
      on_boundary = true;
      next[z] = k;
      switched = true;
    }
    if (!on_boundary) {
      status = Status::optimal;
      break;
    }
    if (it > 0 && indicator <= ib.cqp_tol) {
      status = Status::optimal;
      break;
    }
    if (!switched || visited.count(next)) {
      status = switched ? Status::cycling : Status::optimal;
      break;
    }
    idx = next;
  }
  if (it == ib.max_outer) status = Status::cycling;

  std::vector<StackSegment> segs;
  for (std::size_t z = 0; z < nz; ++z) {
    // Prefer the segment giving the lowest price at the final quantity.
    const double yz = best_y(static_cast<Eigen::Index>(z));
    std::size_t k = best_idx[z];
    const std::size_t lower = sloped_neighbour(curves[z], k, -1);
    if (lower != static_cast<std::size_t>(-1) &&
        curves[z].segments[lower].y_hi >= yz - 1e-12 * (1.0 + yz))
      k = lower;
    segs.push_back(curves[z].segments[k]);
  }
  Vector x = recover_x(inst, best_y, segs);
  x = polish_allocation(inst, x);

  Diagnostics diag;
  diag.algorithm = "ibcqp";
  diag.iterations = std::min(it + 1, ib.max_outer);
  diag.indicator = indicator;
  diag.status = status;
  diag.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  ClearingOutcome out = make_outcome(inst, x, 0.0, std::move(diag), settings);
  out.objective = out.total_cost;
  return out;
}

}  // namespace zc
