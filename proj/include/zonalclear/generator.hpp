#pragma once

#include "zonalclear/calibration.hpp"

#include <cstdint>
#include <utility>

namespace zc {

struct GeneratorSpec {
  std::size_t zones = 3;
  std::size_t players_min = 2;  ///< players per zone, drawn uniformly in [min, max]
  std::size_t players_max = 2;
  std::pair<double, double> m_range{0.2, 1.0};
  std::pair<double, double> a_range{0.5, 4.0};
  std::pair<double, double> Q_range{2.0, 8.0};
  std::pair<double, double> demand_range{3.0, 8.0};
  double density = 0.5;  ///< fraction of zone pairs that get a PTDF row
  std::pair<double, double> ram_range{1.0, 4.0};
  double box_lo = 0.4;
  double box_hi = 1.6;
  std::uint64_t seed = 1;
};

/// Draws instances until one passes validate_instance. Throws
/// InfeasibleError("spec infeasible") after 100 rejections.
MarketInstance generate_instance(const GeneratorSpec& spec);

/// Three zones, six players, demand (10, 6, 6); asks m = c0, a = 2 b0.
MarketInstance fixture_instance();
/// Cost coefficients (c0, b0) behind the fixture's asks.
Vector fixture_cost_c();
Vector fixture_cost_b();

/// Uniform-ish feasible y: random directions from the Chebyshev center of
/// the reachable region with balance, scaled to stay inside.
std::vector<Vector> sample_feasible_y(const MarketInstance& inst, std::size_t count, std::uint64_t seed);

/// Steps where every zone has a cheap base player at capacity and one
/// marginal peaker, with y pinned to demand. Targets are the clearing
/// prices at the hidden scales.
CalibrationSeries synthetic_series(std::size_t steps, const CostScales& hidden, std::uint64_t seed,
                                   const CalibrationOptions& opts = {});

}  // namespace zc
