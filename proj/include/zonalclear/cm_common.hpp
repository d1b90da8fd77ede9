#pragma once

#include "zonalclear/convex.hpp"
#include "zonalclear/market.hpp"

#include <vector>

namespace zc {

/// Players assumed active, per zone.
struct ActiveEstimate {
  std::vector<std::vector<std::size_t>> zones;

  std::size_t count() const;
};

/// Runs SWM and keeps every player with positive quantity, plus any
/// player in the zone whose intercept lies below the SWM zone price.
ActiveEstimate estimate_active_set(const MarketInstance& inst, const Settings& settings = {});

/// Every player of every zone.
ActiveEstimate all_players(const MarketInstance& inst);

/// Variable layout shared by the mc-BLP forms: z = (x over estimated
/// players, v over zones with a nonempty estimate).
struct McLayout {
  std::vector<std::size_t> players;  ///< global index of each x variable
  std::vector<std::size_t> zones;    ///< zone of each v variable
  std::vector<long> zone_slot;       ///< v slot per zone, -1 when unpriced

  Eigen::Index nx() const { return static_cast<Eigen::Index>(players.size()); }
  Eigen::Index nv() const { return static_cast<Eigen::Index>(zones.size()); }
  Eigen::Index dim() const { return nx() + nv(); }
  /// Scatter the x block into a full allocation vector.
  Vector expand_x(const MarketInstance& inst, const Vector& z) const;
  /// Aggregation restricted to the estimated players (zones x nx).
  Matrix aggregation(const MarketInstance& inst) const;
};

McLayout make_layout(const MarketInstance& inst, const ActiveEstimate& est);

/// Upper bound used for v_z in LP forms; any ask of the zone at capacity
/// stays below it, so the bound never binds at an optimum.
Vector price_caps(const MarketInstance& inst, const ActiveEstimate& est);

/// The LP solved at each ieq-LP step: min sum_z yhat_z v_z over (x, v)
/// subject to the mc-BLP rows, without the coupling y = E x. `network`
/// replaces the instance polytope when given (branch-and-bound nodes).
LinearProgram build_mc_qlp(const MarketInstance& inst, const ActiveEstimate& est,
                           const Vector& y_hat, const Polytope* network = nullptr);

/// mc-BLP objective of an allocation: sum_z y_z * max_{i in J_z} ask_i(x_i).
double mc_objective(const MarketInstance& inst, const ActiveEstimate& est, const Vector& x);

struct FixedYResult {
  double objective = 0.0;
  Vector x;
  Vector v;
};

/// Solves min sum v_z y_z over (x, v) with the mc-BLP rows and E x = y.
/// Throws InfeasibleError when y cannot be produced.
FixedYResult cm_objective_given_y(const MarketInstance& inst, const ActiveEstimate& est,
                                  const Vector& y, const Settings& settings = {});

}  // namespace zc
