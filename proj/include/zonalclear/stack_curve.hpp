#pragma once

#include "zonalclear/market.hpp"

#include <limits>
#include <vector>

namespace zc {

/// One price interval of a zonal stack. On a non-vertical segment the
/// price follows v = alpha (y - Q_s) + beta; a vertical segment holds
/// y = Q_s over the whole price interval.
struct StackSegment {
  double v_lo = 0.0;
  double v_hi = 0.0;
  double y_lo = 0.0;
  double y_hi = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double Q_s = 0.0;
  bool vertical = false;
  PlayerSets sets;  ///< global player indices

  /// Price at quantity y (v_lo on a vertical segment).
  double price(double y) const { return vertical ? v_lo : alpha * (y - Q_s) + beta; }
  /// Quantity at price v within [v_lo, v_hi].
  double quantity(double v) const { return vertical ? Q_s : (v - beta) / alpha + Q_s; }
  /// alpha y^2 + (beta - alpha Q_s) y, i.e. price(y) * y.
  double cost(double y) const { return price(y) * y; }
};

struct ZonalStackCurve {
  std::size_t zone = 0;
  std::vector<double> breakpoints;  ///< sorted distinct prices
  std::vector<StackSegment> segments;

  double capacity() const { return segments.empty() ? 0.0 : segments.back().y_hi; }
};

ZonalStackCurve build_stack_curve(const MarketInstance& inst, std::size_t zone);
std::vector<ZonalStackCurve> build_stack_curves(const MarketInstance& inst);

/// Index of the non-vertical segment holding y under [y_lo, y_hi); the
/// last one is closed. Throws std::out_of_range outside [0, capacity].
std::size_t segment_index(const ZonalStackCurve& curve, double y);
const StackSegment& segment_lookup(const ZonalStackCurve& curve, double y);

/// Lowest clearing price at which the zone produces y.
double stack_price(const ZonalStackCurve& curve, double y);

/// Sum over zones of stack_price(y_z) * y_z.
double stack_objective(const std::vector<ZonalStackCurve>& curves, const Vector& y);

}  // namespace zc
