#pragma once

#include "zonalclear/market.hpp"

namespace zc {

/// Social welfare clearing: minimise sum_i (1/2 m_i x_i^2 + a_i x_i) over
/// the capacity box, the balance row and the network polytope, then price
/// each zone at its highest active ask. Throws InfeasibleError when no
/// dispatch satisfies the constraints.
ClearingOutcome clear_swm(const MarketInstance& inst, const Settings& settings = {});

}  // namespace zc
