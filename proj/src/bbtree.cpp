#include "zonalclear/bbtree.hpp"

#include "zonalclear/swm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

namespace zc {

const char* to_string(NodeStatus s) {
  switch (s) {
    case NodeStatus::active_leaf: return "active";
    case NodeStatus::closed_leaf: return "closed";
    case NodeStatus::branched: return "branched";
    case NodeStatus::pruned: return "pruned";
  }
  return "unknown";
}

namespace {

SolverOptions lp_options(const Settings& s) {
  SolverOptions o;
  o.tol = s.solver_tol;
  o.max_iters = s.solver_max_iters;
  return o;
}

}  // namespace

VYBounds lpvy(const MarketInstance& inst, const ActiveEstimate& est, const Polytope& region,
              const Settings& settings) {
  const Eigen::Index nz = static_cast<Eigen::Index>(inst.num_zones());
  const SolverOptions opts = lp_options(settings);
  VYBounds B;
  B.v_min = Vector::Zero(nz);
  B.v_max = Vector::Zero(nz);
  B.y_min = Vector::Zero(nz);
  B.y_max = Vector::Zero(nz);

  // y bounds over y alone.
  MarketInstance est_inst = inst;
  {
    std::vector<PlayerOrder> kept;
    for (const auto& zone : est.zones)
      for (std::size_t i : zone) kept.push_back(inst.players[i]);
    est_inst.players = kept;
  }
  const Polytope reach = reachable_region(est_inst, &region);
  LinearProgram ylp;
  ylp.A_ineq = reach.M;
  ylp.b_ineq = reach.b;
  ylp.A_eq = Matrix::Ones(1, nz);
  ylp.b_eq = Vector::Constant(1, inst.total_demand());
  for (Eigen::Index z = 0; z < nz; ++z) {
    for (int sign : {1, -1}) {
      ylp.c = Vector::Zero(nz);
      ylp.c(z) = sign;
      const Solution s = solve_lp(ylp, opts);
      if (s.status == Status::infeasible) throw InfeasibleError("lpvy: empty node region");
      if (s.status != Status::optimal) throw SolverError(std::string("lpvy: y bound LP ") + to_string(s.status));
      (sign > 0 ? B.y_min : B.y_max)(z) = s.x(z);
    }
  }

  // v_min from the quasi-LP rows with a unit weight on one zone.
  const McLayout L = make_layout(inst, est);
  for (Eigen::Index z = 0; z < nz; ++z) {
    if (L.zone_slot[static_cast<std::size_t>(z)] < 0) continue;
    Vector w = Vector::Zero(nz);
    w(z) = 1.0;
    const Solution s = solve_lp(build_mc_qlp(inst, est, w, &region), opts);
    if (s.status == Status::infeasible) throw InfeasibleError("lpvy: empty node region");
    if (s.status != Status::optimal) throw SolverError(std::string("lpvy: v bound LP ") + to_string(s.status));
    B.v_min(z) = s.x(L.nx() + L.zone_slot[static_cast<std::size_t>(z)]);
    double vmax = 0.0;
    for (std::size_t i : est.zones[static_cast<std::size_t>(z)]) {
      const auto& p = inst.players[i];
      vmax = std::max(vmax, p.ask(std::min(p.Q, B.y_max(z))));
    }
    B.v_max(z) = std::max(vmax, B.v_min(z));
  }
  return B;
}

EnvelopeBound mccormick_lb(const MarketInstance& inst, const ActiveEstimate& est, const Polytope& region,
                           const VYBounds& bounds, int l, const Settings& settings) {
  if (l != 1 && l != 2) throw std::invalid_argument("mccormick_lb: l must be 1 or 2");
  const Eigen::Index nz = static_cast<Eigen::Index>(inst.num_zones());
  const Vector& vb = l == 1 ? bounds.v_min : bounds.v_max;
  const Vector& yb = l == 1 ? bounds.y_min : bounds.y_max;
  const McLayout L = make_layout(inst, est);
  // w_z = vb_z y_z + yb_z v_z - vb_z yb_z, linear in (x, v).
  LinearProgram lp = build_mc_qlp(inst, est, yb, &region);
  const Matrix E = L.aggregation(inst);
  lp.c.head(L.nx()) = E.transpose() * vb;
  const Solution s = solve_lp(lp, lp_options(settings));
  if (s.status == Status::infeasible) throw InfeasibleError("mccormick_lb: empty node region");
  if (s.status != Status::optimal) throw SolverError(std::string("mccormick_lb: LP ") + to_string(s.status));

  EnvelopeBound out;
  out.x = L.expand_x(inst, s.x);
  out.v = Vector::Zero(nz);
  for (Eigen::Index k = 0; k < L.nv(); ++k) out.v(static_cast<Eigen::Index>(L.zones[static_cast<std::size_t>(k)])) = s.x(L.nx() + k);
  const Vector y = inst.aggregation() * out.x;
  out.w = vb.cwiseProduct(y) + yb.cwiseProduct(out.v) - vb.cwiseProduct(yb);
  out.value = out.w.sum();
  return out;
}

void cnq(const MarketInstance& inst, const ActiveEstimate& est, BBNode& node, double r_delta,
         const IeqlpSettings& ieq, const Settings& settings) {
  const Eigen::Index nz = static_cast<Eigen::Index>(inst.num_zones());
  try {
    const Ball ball = chebyshev_center(reachable_region(inst, &node.region), Matrix::Ones(1, nz),
                                       Vector::Constant(1, inst.total_demand()), lp_options(settings));
    node.y_c = ball.center;
    node.r_c = ball.radius;

    constexpr double kInfD = std::numeric_limits<double>::infinity();
    node.f_ub = kInfD;
    IeqlpSettings node_ieq = ieq;
    node_ieq.y0 = node.y_c;
    try {
      const IeqlpResult ub = ieqlp_solve(inst, est, node_ieq, &node.region, settings);
      node.x_sol = ub.x;
      node.v_sol = ub.v;
      node.y_sol = inst.aggregation() * ub.x;
      node.f_ub = ub.f_best;
    } catch (const SolverError&) {
      // thin regions can defeat the LPs; the center value below still counts
    }
    // The exact fixed-y value at the center is often better on small nodes.
    try {
      const FixedYResult at_c = cm_objective_given_y(inst, est, node.y_c, settings);
      if (at_c.objective < node.f_ub) {
        node.f_ub = at_c.objective;
        node.x_sol = at_c.x;
        node.v_sol = at_c.v;
        node.y_sol = inst.aggregation() * at_c.x;
      }
    } catch (const InfeasibleError&) {
    } catch (const SolverError&) {
    }
    if (!std::isfinite(node.f_ub)) {
      if (node.r_c < r_delta) throw InfeasibleError("cnq: no feasible point in a thin node");
      node.y_sol = node.y_c;
    }

    if (node.r_c < r_delta) {
      node.f_lb = node.f_ub;
      node.status = NodeStatus::closed_leaf;
    } else {
      // Without envelope bounds the caller falls back on the parent's bound.
      node.f_lb = -kInfD;
      try {
        node.bounds = lpvy(inst, est, node.region, settings);
        node.has_bounds = true;
        const double lb1 = mccormick_lb(inst, est, node.region, node.bounds, 1, settings).value;
        const double lb2 = mccormick_lb(inst, est, node.region, node.bounds, 2, settings).value;
        node.f_lb = std::min(std::max(lb1, lb2), node.f_ub);
      } catch (const SolverError&) {
      }
      node.status = NodeStatus::active_leaf;
    }

    const Vector dir = node.y_sol - node.y_c;
    if (dir.norm() > 1e-12 * (1.0 + node.y_c.norm())) {
      node.s_d = dir / dir.norm();
    } else {
      // Cut across the widest zone instead.
      Eigen::Index k = 0;
      if (!node.has_bounds) {
        try {
          node.bounds = lpvy(inst, est, node.region, settings);
          node.has_bounds = true;
        } catch (const SolverError&) {
        }
      }
      if (node.has_bounds) (node.bounds.y_max - node.bounds.y_min).maxCoeff(&k);
      else k = node.id % nz;
      node.s_d = Vector::Zero(nz);
      node.s_d(k) = 1.0;
    }
  } catch (const InfeasibleError&) {
    node.status = NodeStatus::pruned;
    node.f_ub = std::numeric_limits<double>::infinity();
    node.f_lb = std::numeric_limits<double>::infinity();
  }
}

std::pair<Polytope, Polytope> child_regions(const BBNode& node) {
  const double c = node.s_d.dot(node.y_c);
  return {node.region.with_row(-node.s_d, -c), node.region.with_row(node.s_d, c)};
}

long rns_select(const std::vector<BBNode>& nodes, const std::vector<long>& leaves, long incumbent,
                std::mt19937_64& rng) {
  if (leaves.empty()) throw std::invalid_argument("rns_select: no active leaf");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  if (r < 0.6) return leaves.front();
  if (r < 0.7) {
    if (incumbent >= 0 && std::find(leaves.begin(), leaves.end(), incumbent) != leaves.end()) return incumbent;
    return leaves.front();
  }
  if (r < 0.9) {
    long best = leaves.front();
    for (long j : leaves)
      if (nodes[static_cast<std::size_t>(j)].f_lb < nodes[static_cast<std::size_t>(best)].f_lb) best = j;
    return best;
  }
  std::uniform_int_distribution<std::size_t> pick(0, leaves.size() - 1);
  return leaves[pick(rng)];
}

double relative_gap(double ub, double lb) {
  if (!std::isfinite(ub) || !std::isfinite(lb)) return std::numeric_limits<double>::infinity();
  const double den = ub + lb;
  if (den <= 1e-12 * std::max(1.0, std::abs(ub))) return (ub - lb) / std::max(1.0, std::abs(ub));
  return 2.0 * (ub - lb) / den;
}

BBTreeResult run_bbtree(const MarketInstance& inst, const ActiveEstimate& est, const BBTreeSettings& bb,
                        const Settings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  const double r_delta = bb.r_delta >= 0.0 ? bb.r_delta : 1e-4 * inst.demand.norm();
  std::mt19937_64 rng(bb.seed);

  std::vector<BBNode> nodes;
  BBNode root;
  root.id = 0;
  root.region = inst.polytope;
  cnq(inst, est, root, r_delta, bb.ieq, settings);
  if (root.status == NodeStatus::pruned) throw InfeasibleError("bbtree: root region is empty");
  nodes.push_back(std::move(root));

  double f_ub = nodes[0].f_ub;
  long incumbent = 0;
  Vector x_best = nodes[0].x_sol;
  if (bb.warm_start_swm) {
    const ClearingOutcome swm = clear_swm(inst, settings);
    const double f = mc_objective(inst, est, swm.x);
    if (f < f_ub) {
      f_ub = f;
      x_best = swm.x;
      incumbent = -1;
    }
  }

  std::vector<long> active{0};
  auto global_lb = [&]() {
    double lb = std::numeric_limits<double>::infinity();
    for (long j : active) lb = std::min(lb, nodes[static_cast<std::size_t>(j)].f_lb);
    return std::min(lb, f_ub);
  };
  double f_lb = global_lb();
  double gap = relative_gap(f_ub, f_lb);

  BBTreeResult res;
  res.trace.push_back({0, f_ub, f_lb, gap});
  Status status = Status::optimal;
  while (gap > bb.gap) {
    std::vector<long> branchable;
    for (long j : active)
      if (nodes[static_cast<std::size_t>(j)].status == NodeStatus::active_leaf) branchable.push_back(j);
    if (branchable.empty()) break;
    if (static_cast<long>(nodes.size()) + 2 > bb.max_nodes) {
      status = Status::gap_not_closed;
      break;
    }
    const long p = rns_select(nodes, branchable, incumbent, rng);
    auto [r1, r2] = child_regions(nodes[static_cast<std::size_t>(p)]);
    nodes[static_cast<std::size_t>(p)].status = NodeStatus::branched;
    active.erase(std::find(active.begin(), active.end(), p));
    const double parent_lb = nodes[static_cast<std::size_t>(p)].f_lb;
    for (Polytope* r : {&r1, &r2}) {
      BBNode child;
      child.id = static_cast<long>(nodes.size());
      child.parent = p;
      child.region = std::move(*r);
      cnq(inst, est, child, r_delta, bb.ieq, settings);
      if (child.status != NodeStatus::pruned) {
        // A child's region lies inside its parent's.
        child.f_lb = std::min(std::max(child.f_lb, parent_lb), child.f_ub);
        if (child.f_ub < f_ub) {
          f_ub = child.f_ub;
          x_best = child.x_sol;
          incumbent = child.id;
        }
        active.push_back(child.id);
      }
      nodes.push_back(std::move(child));
    }
    // Prune leaves that cannot beat the incumbent.
    std::vector<long> kept;
    for (long j : active) {
      auto& nd = nodes[static_cast<std::size_t>(j)];
      if (nd.f_lb > f_ub) nd.status = NodeStatus::pruned;
      else kept.push_back(j);
    }
    active = std::move(kept);
    f_lb = std::max(f_lb, global_lb());
    gap = relative_gap(f_ub, f_lb);
    res.trace.push_back({p, f_ub, f_lb, gap});
  }
  if (gap > bb.gap && status == Status::optimal) status = Status::gap_not_closed;

  if (!bb.node_csv.empty()) {
    std::ofstream out(bb.node_csv);
    if (!out) throw std::runtime_error("cannot write " + bb.node_csv.string());
    out << "id,parent,f_UB,f_LB,status\n";
    out.precision(12);
    for (const auto& nd : nodes)
      out << nd.id << ',' << nd.parent << ',' << nd.f_ub << ',' << nd.f_lb << ',' << to_string(nd.status) << '\n';
  }

  Diagnostics diag;
  diag.algorithm = "bbtree";
  diag.iterations = static_cast<int>(res.trace.size() - 1);
  diag.indicator = gap;
  diag.status = status;
  diag.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  res.outcome = make_outcome(inst, polish_allocation(inst, x_best), f_ub, std::move(diag), settings);
  res.gap = gap;
  res.f_ub = f_ub;
  res.f_lb = f_lb;
  res.nodes = static_cast<long>(nodes.size());
  return res;
}

}  // namespace zc
