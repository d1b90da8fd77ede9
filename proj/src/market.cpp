#include "zonalclear/market.hpp"

#include "zonalclear/convex.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace zc {

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::stalled: return "stalled";
    case Status::gap_not_closed: return "gap-not-closed";
    case Status::cycling: return "cycling";
  }
  return "unknown";
}

PlayerOrder make_player(std::string id, std::size_t zone, double m, double a, double Q) {
  if (!(m > 0.0)) throw std::invalid_argument("player " + id + ": nonpositive slope");
  if (!(a >= 0.0)) throw std::invalid_argument("player " + id + ": negative intercept");
  if (!(Q > 0.0)) throw std::invalid_argument("player " + id + ": nonpositive capacity");
  return PlayerOrder{std::move(id), zone, m, a, Q};
}

double Polytope::violation(const Vector& y) const {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    const double excess = (M.row(k).dot(y) - b(k)) / (1.0 + std::abs(b(k)));
    worst = std::max(worst, excess);
  }
  return worst;
}

Polytope Polytope::with_row(const Vector& row, double rhs) const {
  Polytope out;
  out.M.resize(M.rows() + 1, row.size());
  if (M.rows() > 0) out.M.topRows(M.rows()) = M;
  out.M.row(M.rows()) = row.transpose();
  out.b.resize(b.size() + 1);
  out.b.head(b.size()) = b;
  out.b(b.size()) = rhs;
  return out;
}

Matrix MarketInstance::aggregation() const {
  Matrix E = Matrix::Zero(static_cast<Eigen::Index>(num_zones()),
                          static_cast<Eigen::Index>(num_players()));
  for (std::size_t i = 0; i < players.size(); ++i)
    E(static_cast<Eigen::Index>(players[i].zone), static_cast<Eigen::Index>(i)) = 1.0;
  return E;
}

std::vector<std::vector<std::size_t>> MarketInstance::players_by_zone() const {
  std::vector<std::vector<std::size_t>> out(num_zones());
  for (std::size_t i = 0; i < players.size(); ++i) out[players[i].zone].push_back(i);
  return out;
}

Vector MarketInstance::zone_capacity() const {
  Vector cap = Vector::Zero(static_cast<Eigen::Index>(num_zones()));
  for (const auto& p : players) cap(static_cast<Eigen::Index>(p.zone)) += p.Q;
  return cap;
}

Vector MarketInstance::slopes() const {
  Vector out(static_cast<Eigen::Index>(num_players()));
  for (std::size_t i = 0; i < players.size(); ++i) out(static_cast<Eigen::Index>(i)) = players[i].m;
  return out;
}

Vector MarketInstance::intercepts() const {
  Vector out(static_cast<Eigen::Index>(num_players()));
  for (std::size_t i = 0; i < players.size(); ++i) out(static_cast<Eigen::Index>(i)) = players[i].a;
  return out;
}

Vector MarketInstance::capacities() const {
  Vector out(static_cast<Eigen::Index>(num_players()));
  for (std::size_t i = 0; i < players.size(); ++i) out(static_cast<Eigen::Index>(i)) = players[i].Q;
  return out;
}

Polytope reachable_region(const MarketInstance& inst, const Polytope* network) {
  const Eigen::Index nz = static_cast<Eigen::Index>(inst.num_zones());
  const Vector cap = inst.zone_capacity();
  const Polytope& net = network ? *network : inst.polytope;
  Polytope out;
  const Eigen::Index rows = net.M.rows();
  out.M = Matrix::Zero(rows + 2 * nz, nz);
  out.b = Vector::Zero(rows + 2 * nz);
  if (rows > 0) {
    out.M.topRows(rows) = net.M;
    out.b.head(rows) = net.b;
  }
  for (Eigen::Index z = 0; z < nz; ++z) {
    out.M(rows + z, z) = 1.0;
    out.b(rows + z) = cap(z);
    out.M(rows + nz + z, z) = -1.0;
  }
  return out;
}

std::vector<std::string> validate_instance(const MarketInstance& inst, const Settings& settings) {
  std::vector<std::string> issues;
  const std::size_t nz = inst.num_zones();
  if (nz == 0) issues.emplace_back("no zones");
  if (static_cast<std::size_t>(inst.demand.size()) != nz)
    issues.emplace_back("demand length differs from zone count");
  for (Eigen::Index z = 0; z < inst.demand.size(); ++z)
    if (!(inst.demand(z) >= 0.0)) issues.emplace_back("negative demand in zone " + std::to_string(z));
  for (const auto& p : inst.players) {
    if (p.zone >= nz) issues.emplace_back("player " + p.id + ": zone index out of range");
    if (!(p.m > 0.0)) issues.emplace_back("player " + p.id + ": nonpositive slope");
    if (!(p.a >= 0.0)) issues.emplace_back("player " + p.id + ": negative intercept");
    if (!(p.Q > 0.0)) issues.emplace_back("player " + p.id + ": nonpositive capacity");
  }
  if (inst.polytope.M.rows() != inst.polytope.b.size())
    issues.emplace_back("polytope row count differs from rhs length");
  if (inst.polytope.M.rows() > 0 && static_cast<std::size_t>(inst.polytope.M.cols()) != nz)
    issues.emplace_back("polytope column count differs from zone count");
  if (!issues.empty()) return issues;

  const double d = inst.total_demand();
  if (!(d > 0.0)) issues.emplace_back("total demand must be positive");
  double supply = 0.0;
  for (const auto& p : inst.players) supply += p.Q;
  if (supply < d * (1.0 - settings.feasibility_tol)) {
    issues.emplace_back("infeasible: supply < demand");
    return issues;
  }

  LinearProgram lp;
  const Polytope region = reachable_region(inst);
  lp.c = Vector::Zero(static_cast<Eigen::Index>(nz));
  lp.A_ineq = region.M;
  lp.b_ineq = region.b;
  lp.A_eq = Matrix::Ones(1, static_cast<Eigen::Index>(nz));
  lp.b_eq = Vector::Constant(1, d);
  SolverOptions opts;
  opts.tol = settings.solver_tol;
  const Solution sol = solve_lp(lp, opts);
  if (sol.status != Status::optimal)
    issues.emplace_back(std::string("infeasible: network polytope excludes balanced dispatch (") +
                        to_string(sol.status) + ")");
  return issues;
}

bool is_active(const PlayerOrder& p, double x, const Settings& settings) {
  return x > settings.activity_rel * p.Q;
}

ZonalPrices zonal_price_from_allocation(const MarketInstance& inst, const Vector& x,
                                        const Settings& settings) {
  if (static_cast<std::size_t>(x.size()) != inst.num_players())
    throw std::invalid_argument("allocation length differs from player count");
  const std::size_t nz = inst.num_zones();
  ZonalPrices out;
  out.v = Vector::Zero(static_cast<Eigen::Index>(nz));
  out.empty.assign(nz, true);
  for (std::size_t i = 0; i < inst.players.size(); ++i) {
    const auto& p = inst.players[i];
    const double xi = x(static_cast<Eigen::Index>(i));
    if (!is_active(p, xi, settings)) continue;
    const double ask = p.ask(std::min(xi, p.Q));
    const auto z = static_cast<Eigen::Index>(p.zone);
    if (out.empty[p.zone] || ask > out.v(z)) out.v(z) = ask;
    out.empty[p.zone] = false;
  }
  return out;
}

double total_cost(const Vector& v, const Vector& y) {
  if (v.size() != y.size()) throw std::invalid_argument("total_cost: length mismatch");
  return v.dot(y);
}

std::vector<std::size_t> check_paradoxical_orders(const MarketInstance& inst,
                                                  const ClearingOutcome& outcome,
                                                  const Settings& settings) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < inst.players.size(); ++i) {
    const auto& p = inst.players[i];
    const double xi = outcome.x(static_cast<Eigen::Index>(i));
    if (!is_active(p, xi, settings)) continue;
    if (p.ask(xi) > outcome.v(static_cast<Eigen::Index>(p.zone)) + settings.price_tol) out.push_back(i);
  }
  return out;
}

Polytope assemble_polytope(const Matrix& ptdf, const Vector& ram_lb, const Vector& ram_ub,
                           const Vector& demand, double lo_frac, double hi_frac) {
  const Eigen::Index nz = demand.size();
  const Eigen::Index L = ptdf.rows();
  if (L > 0 && ptdf.cols() != nz) throw std::invalid_argument("PTDF column count differs from zones");
  if (ram_lb.size() != L || ram_ub.size() != L)
    throw std::invalid_argument("RAM vectors must match PTDF rows");
  for (Eigen::Index k = 0; k < L; ++k) {
    if (ram_lb(k) > ram_ub(k)) {
      std::ostringstream os;
      os << "RAM lower bound exceeds upper bound on row " << k;
      throw std::invalid_argument(os.str());
    }
  }
  Polytope P;
  P.M = Matrix::Zero(2 * L + 2 * nz, nz);
  P.b = Vector::Zero(2 * L + 2 * nz);
  if (L > 0) {
    const Vector flow_at_d = ptdf * demand;
    P.M.topRows(L) = -ptdf;
    P.b.head(L) = -ram_lb - flow_at_d;
    P.M.middleRows(L, L) = ptdf;
    P.b.segment(L, L) = ram_ub + flow_at_d;
  }
  for (Eigen::Index z = 0; z < nz; ++z) {
    P.M(2 * L + z, z) = 1.0;
    P.b(2 * L + z) = hi_frac * demand(z);
    P.M(2 * L + nz + z, z) = -1.0;
    P.b(2 * L + nz + z) = -lo_frac * demand(z);
  }
  return P;
}

std::vector<PlayerSets> classify_players(const MarketInstance& inst, const Vector& x,
                                         const Settings& settings) {
  std::vector<PlayerSets> sets(inst.num_zones());
  for (std::size_t i = 0; i < inst.players.size(); ++i) {
    const auto& p = inst.players[i];
    const double xi = x(static_cast<Eigen::Index>(i));
    auto& s = sets[p.zone];
    if (!is_active(p, xi, settings)) {
      s.inactive.push_back(i);
    } else if (xi >= p.Q * (1.0 - settings.activity_rel)) {
      s.full.push_back(i);
    } else {
      s.marginal.push_back(i);
    }
  }
  return sets;
}

Vector polish_allocation(const MarketInstance& inst, const Vector& x) {
  const Vector Q = inst.capacities();
  Vector out = x.cwiseMax(0.0).cwiseMin(Q);
  const double d = inst.total_demand();
  double excess = out.sum() - d;
  // Spread the balance error over players with room to move.
  for (int pass = 0; pass < 3 && std::abs(excess) > 0.0; ++pass) {
    double room = 0.0;
    for (Eigen::Index i = 0; i < out.size(); ++i)
      room += excess > 0.0 ? out(i) : Q(i) - out(i);
    if (room <= 0.0) break;
    const double frac = excess / room;
    for (Eigen::Index i = 0; i < out.size(); ++i)
      out(i) -= excess > 0.0 ? frac * out(i) : -frac * (Q(i) - out(i));
    out = out.cwiseMax(0.0).cwiseMin(Q);
    excess = out.sum() - d;
  }
  return out;
}

ClearingOutcome make_outcome(const MarketInstance& inst, const Vector& x, double objective,
                             Diagnostics diag, const Settings& settings) {
  ClearingOutcome out;
  out.x = x;
  out.y = inst.aggregation() * x;
  const ZonalPrices prices = zonal_price_from_allocation(inst, x, settings);
  out.v = prices.v;
  out.empty_zone = prices.empty;
  out.total_cost = total_cost(out.v, out.y);
  out.objective = objective;
  out.sets = classify_players(inst, x, settings);
  out.diag = std::move(diag);
  return out;
}

std::vector<std::string> check_outcome(const MarketInstance& inst, const ClearingOutcome& out,
                                       const Settings& settings) {
  std::vector<std::string> issues;
  const double tol = settings.feasibility_tol;
  for (std::size_t i = 0; i < inst.players.size(); ++i) {
    const auto& p = inst.players[i];
    const double xi = out.x(static_cast<Eigen::Index>(i));
    const double slack = tol * std::max(1.0, p.Q);
    if (xi < -slack || xi > p.Q + slack)
      issues.push_back("player " + p.id + ": allocation outside [0, Q]");
  }
  const Vector y = inst.aggregation() * out.x;
  if ((y - out.y).lpNorm<Eigen::Infinity>() > tol * std::max(1.0, inst.total_demand()))
    issues.emplace_back("zonal quantities differ from aggregated allocation");
  const double d = inst.total_demand();
  if (std::abs(out.x.sum() - d) > tol * std::max(1.0, d)) issues.emplace_back("supply/demand imbalance");
  const Polytope& P = inst.polytope;
  for (Eigen::Index k = 0; k < P.b.size(); ++k) {
    if (P.M.row(k).dot(out.y) > P.b(k) + tol * (1.0 + std::abs(P.b(k))))
      issues.push_back("network row " + std::to_string(k) + " violated");
  }
  if (out.v.size() != out.y.size() || out.total_cost != out.v.dot(out.y))
    issues.emplace_back("total cost differs from sum of price times quantity");
  return issues;
}

}  // namespace zc
