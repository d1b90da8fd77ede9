#include "zonalclear/cm_common.hpp"

#include "zonalclear/swm.hpp"

#include <algorithm>
#include <sstream>

namespace zc {

std::size_t ActiveEstimate::count() const {
  std::size_t n = 0;
  for (const auto& z : zones) n += z.size();
  return n;
}

ActiveEstimate estimate_active_set(const MarketInstance& inst, const Settings& settings) {
  const ClearingOutcome swm = clear_swm(inst, settings);
  ActiveEstimate est;
  est.zones.resize(inst.num_zones());
  for (std::size_t i = 0; i < inst.players.size(); ++i) {
    const auto& p = inst.players[i];
    const double xi = swm.x(static_cast<Eigen::Index>(i));
    const bool active = is_active(p, xi, settings);
    const bool cheap = !swm.empty_zone[p.zone] && p.a < swm.v(static_cast<Eigen::Index>(p.zone));
    if (active || cheap) est.zones[p.zone].push_back(i);
  }
  return est;
}

ActiveEstimate all_players(const MarketInstance& inst) {
  ActiveEstimate est;
  est.zones = inst.players_by_zone();
  return est;
}

Vector McLayout::expand_x(const MarketInstance& inst, const Vector& z) const {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(inst.num_players()));
  for (std::size_t k = 0; k < players.size(); ++k)
    x(static_cast<Eigen::Index>(players[k])) = z(static_cast<Eigen::Index>(k));
  return x;
}

Matrix McLayout::aggregation(const MarketInstance& inst) const {
  Matrix E = Matrix::Zero(static_cast<Eigen::Index>(inst.num_zones()), nx());
  for (std::size_t k = 0; k < players.size(); ++k)
    E(static_cast<Eigen::Index>(inst.players[players[k]].zone), static_cast<Eigen::Index>(k)) = 1.0;
  return E;
}

McLayout make_layout(const MarketInstance& inst, const ActiveEstimate& est) {
  if (est.zones.size() != inst.num_zones())
    throw std::invalid_argument("active estimate has wrong zone count");
  McLayout L;
  L.zone_slot.assign(inst.num_zones(), -1);
  for (std::size_t z = 0; z < est.zones.size(); ++z) {
    for (std::size_t i : est.zones[z]) {
      if (i >= inst.num_players() || inst.players[i].zone != z)
        throw std::invalid_argument("active estimate lists a player outside its zone");
      L.players.push_back(i);
    }
  }
  for (std::size_t z = 0; z < est.zones.size(); ++z) {
    if (est.zones[z].empty()) continue;
    L.zone_slot[z] = static_cast<long>(L.zones.size());
    L.zones.push_back(z);
  }
  return L;
}

Vector price_caps(const MarketInstance& inst, const ActiveEstimate& est) {
  Vector cap = Vector::Zero(static_cast<Eigen::Index>(inst.num_zones()));
  for (std::size_t z = 0; z < est.zones.size(); ++z)
    for (std::size_t i : est.zones[z])
      cap(static_cast<Eigen::Index>(z)) =
          std::max(cap(static_cast<Eigen::Index>(z)), inst.players[i].ask_at_capacity());
  return cap.array() + 1.0;
}

namespace {

// Shared rows of the mc-BLP in the layout variables:
// m_i x_i - v_z <= -a_i, -x <= 0, x <= Q, M E x <= b, v <= cap.
void mc_rows(const MarketInstance& inst, const ActiveEstimate& est, const McLayout& L,
             const Polytope& net, Matrix& A, Vector& b) {
  const Eigen::Index nx = L.nx(), nv = L.nv(), n = L.dim();
  const Eigen::Index nr = net.M.rows();
  A = Matrix::Zero(3 * nx + nr + nv, n);
  b = Vector::Zero(3 * nx + nr + nv);
  for (Eigen::Index k = 0; k < nx; ++k) {
    const auto& p = inst.players[L.players[static_cast<std::size_t>(k)]];
    A(k, k) = p.m;
    A(k, nx + L.zone_slot[p.zone]) = -1.0;
    b(k) = -p.a;
    A(nx + k, k) = -1.0;
    A(2 * nx + k, k) = 1.0;
    b(2 * nx + k) = p.Q;
  }
  if (nr > 0) {
    A.block(3 * nx, 0, nr, nx) = net.M * L.aggregation(inst);
    b.segment(3 * nx, nr) = net.b;
  }
  const Vector cap = price_caps(inst, est);
  for (Eigen::Index s = 0; s < nv; ++s) {
    A(3 * nx + nr + s, nx + s) = 1.0;
    b(3 * nx + nr + s) = cap(static_cast<Eigen::Index>(L.zones[static_cast<std::size_t>(s)]));
  }
}

}  // namespace

LinearProgram build_mc_qlp(const MarketInstance& inst, const ActiveEstimate& est,
                           const Vector& y_hat, const Polytope* network) {
  if (static_cast<std::size_t>(y_hat.size()) != inst.num_zones())
    throw std::invalid_argument("build_mc_qlp: y_hat length differs from zone count");
  const McLayout L = make_layout(inst, est);
  if (L.nx() == 0) throw std::invalid_argument("build_mc_qlp: empty active estimate");
  LinearProgram lp;
  lp.c = Vector::Zero(L.dim());
  for (Eigen::Index s = 0; s < L.nv(); ++s)
    lp.c(L.nx() + s) = y_hat(static_cast<Eigen::Index>(L.zones[static_cast<std::size_t>(s)]));
  mc_rows(inst, est, L, network ? *network : inst.polytope, lp.A_ineq, lp.b_ineq);
  lp.A_eq = Matrix::Zero(1, L.dim());
  lp.A_eq.leftCols(L.nx()).setOnes();
  lp.b_eq = Vector::Constant(1, inst.total_demand());
  return lp;
}

double mc_objective(const MarketInstance& inst, const ActiveEstimate& est, const Vector& x) {
  double f = 0.0;
  for (std::size_t z = 0; z < est.zones.size(); ++z) {
    double v = 0.0, y = 0.0;
    for (std::size_t i : est.zones[z]) {
      v = std::max(v, inst.players[i].ask(x(static_cast<Eigen::Index>(i))));
      y += x(static_cast<Eigen::Index>(i));
    }
    f += v * y;
  }
  return f;
}

FixedYResult cm_objective_given_y(const MarketInstance& inst, const ActiveEstimate& est,
                                  const Vector& y, const Settings& settings) {
  const std::size_t nz = inst.num_zones();
  if (static_cast<std::size_t>(y.size()) != nz)
    throw std::invalid_argument("cm_objective_given_y: y length differs from zone count");
  const double d = inst.total_demand();
  if (std::abs(y.sum() - d) > settings.feasibility_tol * std::max(1.0, d))
    throw InfeasibleError("cm_objective_given_y: y does not balance demand");
  if (inst.polytope.violation(y) > settings.feasibility_tol)
    throw InfeasibleError("cm_objective_given_y: y violates the network polytope");

  const McLayout L = make_layout(inst, est);
  for (std::size_t z = 0; z < nz; ++z) {
    const double yz = y(static_cast<Eigen::Index>(z));
    double cap = 0.0;
    for (std::size_t i : est.zones[z]) cap += inst.players[i].Q;
    if (yz < -settings.feasibility_tol || yz > cap * (1.0 + settings.feasibility_tol) + settings.feasibility_tol) {
      std::ostringstream os;
      os << "cm_objective_given_y: zone " << z << " cannot produce " << yz;
      throw InfeasibleError(os.str());
    }
  }

  LinearProgram lp;
  lp.c = Vector::Zero(L.dim());
  for (Eigen::Index s = 0; s < L.nv(); ++s)
    lp.c(L.nx() + s) = y(static_cast<Eigen::Index>(L.zones[static_cast<std::size_t>(s)]));
  const Polytope none{Matrix::Zero(0, static_cast<Eigen::Index>(nz)), Vector::Zero(0)};
  mc_rows(inst, est, L, none, lp.A_ineq, lp.b_ineq);
  lp.A_eq = Matrix::Zero(L.nv(), L.dim());
  const Matrix E = L.aggregation(inst);
  for (Eigen::Index s = 0; s < L.nv(); ++s)
    lp.A_eq.row(s).head(L.nx()) = E.row(static_cast<Eigen::Index>(L.zones[static_cast<std::size_t>(s)]));
  lp.b_eq = Vector::Zero(L.nv());
  for (Eigen::Index s = 0; s < L.nv(); ++s) lp.b_eq(s) = y(static_cast<Eigen::Index>(L.zones[static_cast<std::size_t>(s)]));

  SolverOptions opts;
  opts.tol = settings.solver_tol;
  opts.max_iters = settings.solver_max_iters;
  const Solution sol = solve_lp(lp, opts);
  if (sol.status == Status::infeasible) throw InfeasibleError("cm_objective_given_y: y is not attainable");
  if (sol.status != Status::optimal)
    throw SolverError(std::string("cm_objective_given_y: LP ") + to_string(sol.status));

  FixedYResult out;
  out.x = L.expand_x(inst, sol.x);
  out.v = Vector::Zero(static_cast<Eigen::Index>(nz));
  for (Eigen::Index s = 0; s < L.nv(); ++s)
    out.v(static_cast<Eigen::Index>(L.zones[static_cast<std::size_t>(s)])) = sol.x(L.nx() + s);
  out.objective = out.v.dot(y);
  return out;
}

}  // namespace zc
