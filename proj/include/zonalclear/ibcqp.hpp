#pragma once

#include "zonalclear/convex.hpp"
#include "zonalclear/stack_curve.hpp"

#include <optional>

namespace zc {

struct IbcqpSettings {
  double cqp_tol = 1e-4;
  int max_outer = 200;
  std::optional<Vector> y0;  ///< start point; the Chebyshev center when absent
};

/// Convex QP in y over one stack segment per zone: piecewise-quadratic cost
/// restricted to the segment boxes, the network rows and the balance row.
/// A vertical segment pins y_z to its quantity and charges its lowest price.
QuadraticProgram build_sub_cqp(const MarketInstance& inst, const std::vector<StackSegment>& segments);

/// Allocation realising y on the given segments: full players at Q,
/// inactive at 0, marginal players at a common ask. Throws
/// std::logic_error when a marginal quantity falls outside [0, Q].
Vector recover_x(const MarketInstance& inst, const Vector& y, const std::vector<StackSegment>& segments);

/// Same, with each zone's segment looked up from y.
Vector recover_x(const MarketInstance& inst, const Vector& y, const std::vector<ZonalStackCurve>& curves);

ClearingOutcome run_ibcqp(const MarketInstance& inst, const IbcqpSettings& ib = {},
                          const Settings& settings = {});

}  // namespace zc
