#pragma once

#include "zonalclear/settings.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace zc {

/// Linear marginal-price ask: lambda(x) = m * x + a on [0, Q].
struct PlayerOrder {
  std::string id;
  std::size_t zone = 0;
  double m = 1.0;
  double a = 0.0;
  double Q = 1.0;

  double ask(double x) const { return m * x + a; }
  double ask_at_capacity() const { return m * Q + a; }
};

/// Checked constructor; throws std::invalid_argument unless m > 0, a >= 0, Q > 0.
PlayerOrder make_player(std::string id, std::size_t zone, double m, double a, double Q);

/// Region {y : M y <= b} over zonal quantities.
struct Polytope {
  Matrix M;
  Vector b;

  std::size_t rows() const { return static_cast<std::size_t>(b.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(M.cols()); }
  /// Largest violation max_k (M_k y - b_k) / (1 + |b_k|), clipped at 0.
  double violation(const Vector& y) const;
  Polytope with_row(const Vector& row, double rhs) const;
};

struct MarketInstance {
  std::vector<std::string> zones;
  std::vector<PlayerOrder> players;
  Vector demand;
  Polytope polytope;

  std::size_t num_zones() const { return zones.size(); }
  std::size_t num_players() const { return players.size(); }
  double total_demand() const { return demand.sum(); }
  /// Aggregation matrix E (zones x players) with E(z, i) = 1 iff player i sits in z.
  Matrix aggregation() const;
  std::vector<std::vector<std::size_t>> players_by_zone() const;
  Vector zone_capacity() const;
  Vector slopes() const;
  Vector intercepts() const;
  Vector capacities() const;
};

/// Per-zone partition of players by dispatch state.
struct PlayerSets {
  std::vector<std::size_t> inactive;  ///< x = 0
  std::vector<std::size_t> marginal;  ///< 0 < x < Q
  std::vector<std::size_t> full;      ///< x = Q
};

struct Diagnostics {
  std::string algorithm;
  int iterations = 0;
  double solve_ms = 0.0;
  double indicator = 0.0;  ///< algorithm-specific convergence measure
  Status status = Status::optimal;
};

struct ClearingOutcome {
  Vector x;
  Vector y;
  Vector v;
  double total_cost = 0.0;
  double objective = 0.0;
  std::vector<PlayerSets> sets;
  std::vector<bool> empty_zone;
  Diagnostics diag;
};

struct ZonalPrices {
  Vector v;
  std::vector<bool> empty;  ///< zone had no active player; its price is 0
};

/// Returns every invariant violation found; an empty list means the
/// instance is valid and admits a feasible clearing.
std::vector<std::string> validate_instance(const MarketInstance& inst,
                                           const Settings& settings = {});

bool is_active(const PlayerOrder& p, double x, const Settings& settings = {});

/// Highest ask among active players of each zone.
ZonalPrices zonal_price_from_allocation(const MarketInstance& inst, const Vector& x,
                                        const Settings& settings = {});

double total_cost(const Vector& v, const Vector& y);

/// Players cleared with positive quantity whose ask exceeds their zone price.
std::vector<std::size_t> check_paradoxical_orders(const MarketInstance& inst,
                                                  const ClearingOutcome& outcome,
                                                  const Settings& settings = {});

/// Flow-based polytope in y: r <= PTDF (y - d) <= R plus the box
/// lo_frac * d <= y <= hi_frac * d.
Polytope assemble_polytope(const Matrix& ptdf, const Vector& ram_lb, const Vector& ram_ub,
                           const Vector& demand, double lo_frac = 0.4, double hi_frac = 1.6);

std::vector<PlayerSets> classify_players(const MarketInstance& inst, const Vector& x,
                                         const Settings& settings = {});

/// Builds an outcome record from an allocation: y = E x, prices from the
/// allocation, player sets and total cost.
ClearingOutcome make_outcome(const MarketInstance& inst, const Vector& x, double objective,
                             Diagnostics diag, const Settings& settings = {});

/// Checks the outcome invariants (capacity, balance, polytope, cost bookkeeping).
std::vector<std::string> check_outcome(const MarketInstance& inst, const ClearingOutcome& out,
                                       const Settings& settings = {});

/// The set of reachable zonal quantities: the network polytope with the
/// capacity box 0 <= y_z <= sum of zone capacities appended. Balance
/// 1'y = d is kept separately by callers. `network` replaces the
/// instance polytope when given.
Polytope reachable_region(const MarketInstance& inst, const Polytope* network = nullptr);

/// Clips tiny bound violations left by interior-point solves and rescales
/// so that 1'x = d holds to rounding.
Vector polish_allocation(const MarketInstance& inst, const Vector& x);

}  // namespace zc
