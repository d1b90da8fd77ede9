#pragma once

#include "zonalclear/cm_common.hpp"
#include "zonalclear/ieqlp.hpp"

#include <filesystem>
#include <random>
#include <vector>

namespace zc {

enum class NodeStatus { active_leaf, closed_leaf, branched, pruned };
const char* to_string(NodeStatus s);

struct VYBounds {
  Vector v_min, v_max, y_min, y_max;
};

struct BBNode {
  long id = 0;
  long parent = -1;
  Polytope region;  ///< network rows plus accumulated cuts, over y
  double f_ub = 0.0;
  Vector x_sol, v_sol, y_sol;
  double f_lb = 0.0;
  VYBounds bounds;
  bool has_bounds = false;
  Vector y_c;
  double r_c = 0.0;
  Vector s_d;
  NodeStatus status = NodeStatus::active_leaf;
};

/// Per-zone bounds on v and y over a node region. The y bounds use the
/// network rows, the capacity box and the balance row; v_max is the
/// highest ask any estimated player can reach within y_max.
/// Throws InfeasibleError when the region is empty.
VYBounds lpvy(const MarketInstance& inst, const ActiveEstimate& est, const Polytope& region,
              const Settings& settings = {});

struct EnvelopeBound {
  double value = 0.0;  ///< sum of w_z over zones at the LP optimum
  Vector w;
  Vector x;
  Vector v;
};

/// McCormick relaxation l in {1, 2}: minimise the sum of the l-th
/// under-estimators of v_z y_z over the node's mc-BLP feasible set.
EnvelopeBound mccormick_lb(const MarketInstance& inst, const ActiveEstimate& est, const Polytope& region,
                           const VYBounds& bounds, int l, const Settings& settings = {});

struct BBTreeSettings {
  double gap = 1e-5;            ///< stop once delta_T <= gap
  double r_delta = -1.0;        ///< below this Chebyshev radius LB := UB; < 0 means 1e-4 ||d||
  long max_nodes = 10000;
  std::uint64_t seed = 42;
  bool warm_start_swm = true;   ///< seed the incumbent with the SWM allocation
  IeqlpSettings ieq{50, 1e-6, 0.5, StartMode::demand, std::nullopt};
  std::filesystem::path node_csv;  ///< optional node trace
};

/// Fills in the node quantities for a region: Chebyshev data, upper bound
/// from ieq-LP, lower bound from the envelopes, descent direction.
/// Marks the node pruned when its region is empty.
void cnq(const MarketInstance& inst, const ActiveEstimate& est, BBNode& node, double r_delta,
         const IeqlpSettings& ieq, const Settings& settings = {});

/// Node rows for the two children: child 1 keeps s'(y - y_c) >= 0, child 2 <= 0.
std::pair<Polytope, Polytope> child_regions(const BBNode& node);

/// Randomised node selection. `leaves` are branchable active leaves in
/// creation order; returns an index into `nodes`.
long rns_select(const std::vector<BBNode>& nodes, const std::vector<long>& leaves, long incumbent,
                std::mt19937_64& rng);

struct BBTreeIteration {
  long node = -1;
  double f_ub = 0.0;
  double f_lb = 0.0;
  double gap = 0.0;
};

struct BBTreeResult {
  ClearingOutcome outcome;
  double gap = 0.0;
  double f_ub = 0.0;
  double f_lb = 0.0;
  long nodes = 0;
  std::vector<BBTreeIteration> trace;
};

double relative_gap(double ub, double lb);

BBTreeResult run_bbtree(const MarketInstance& inst, const ActiveEstimate& est, const BBTreeSettings& bb = {},
                        const Settings& settings = {});

}  // namespace zc
