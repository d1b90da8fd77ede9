#include "zonalclear/stack_curve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace zc {

ZonalStackCurve build_stack_curve(const MarketInstance& inst, std::size_t zone) {
  if (zone >= inst.num_zones()) throw std::out_of_range("build_stack_curve: zone index");
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < inst.players.size(); ++i)
    if (inst.players[i].zone == zone) members.push_back(i);
  if (members.empty()) throw std::invalid_argument("build_stack_curve: zone has no players");

  ZonalStackCurve curve;
  curve.zone = zone;
  std::vector<double> pts{0.0};
  double scale = 1.0;
  for (std::size_t i : members) {
    pts.push_back(inst.players[i].a);
    pts.push_back(inst.players[i].ask_at_capacity());
    scale = std::max(scale, inst.players[i].ask_at_capacity());
  }
  std::sort(pts.begin(), pts.end());
  const double merge = 1e-12 * scale;
  for (double p : pts)
    if (curve.breakpoints.empty() || p - curve.breakpoints.back() > merge) curve.breakpoints.push_back(p);

  auto make_segment = [&](double lo, double hi) {
    StackSegment s;
    s.v_lo = lo;
    s.v_hi = hi;
    const double mid = 0.5 * (lo + hi);
    double inv_m = 0.0, a_over_m = 0.0;
    for (std::size_t i : members) {
      const auto& p = inst.players[i];
      if (p.a > mid) {
        s.sets.inactive.push_back(i);
      } else if (p.ask_at_capacity() < mid) {
        s.sets.full.push_back(i);
        s.Q_s += p.Q;
      } else {
        s.sets.marginal.push_back(i);
        inv_m += 1.0 / p.m;
        a_over_m += p.a / p.m;
      }
    }
    if (s.sets.marginal.empty()) {
      s.vertical = true;
      s.y_lo = s.y_hi = s.Q_s;
    } else {
      s.alpha = 1.0 / inv_m;
      s.beta = s.alpha * a_over_m;
      s.y_lo = s.quantity(lo);
      s.y_hi = s.quantity(hi);
    }
    return s;
  };

  for (std::size_t k = 0; k + 1 < curve.breakpoints.size(); ++k)
    curve.segments.push_back(make_segment(curve.breakpoints[k], curve.breakpoints[k + 1]));
  // Above the last breakpoint every player is full.
  StackSegment top;
  top.v_lo = curve.breakpoints.back();
  top.v_hi = std::numeric_limits<double>::infinity();
  top.vertical = true;
  for (std::size_t i : members) {
    top.sets.full.push_back(i);
    top.Q_s += inst.players[i].Q;
  }
  top.y_lo = top.y_hi = top.Q_s;
  curve.segments.push_back(top);

  // Snap shared endpoints so the curve is continuous to rounding.
  for (std::size_t k = 1; k < curve.segments.size(); ++k) {
    auto& prev = curve.segments[k - 1];
    auto& cur = curve.segments[k];
    if (std::abs(cur.y_lo - prev.y_hi) <= 1e-12 * (1.0 + top.Q_s)) cur.y_lo = prev.y_hi;
  }
  return curve;
}

std::vector<ZonalStackCurve> build_stack_curves(const MarketInstance& inst) {
  std::vector<ZonalStackCurve> out;
  out.reserve(inst.num_zones());
  for (std::size_t z = 0; z < inst.num_zones(); ++z) out.push_back(build_stack_curve(inst, z));
  return out;
}

std::size_t segment_index(const ZonalStackCurve& curve, double y) {
  const double cap = curve.capacity();
  const double slack = 1e-12 * (1.0 + cap);
  if (y < -slack || y > cap + slack) {
    std::ostringstream os;
    os << "segment_lookup: y = " << y << " outside [0, " << cap << "]";
    throw std::out_of_range(os.str());
  }
  std::size_t last = curve.segments.size();
  for (std::size_t k = 0; k < curve.segments.size(); ++k) {
    const auto& s = curve.segments[k];
    if (s.vertical) continue;
    last = k;
    if (y >= s.y_lo - slack && y < s.y_hi) return k;
  }
  if (last == curve.segments.size()) throw std::logic_error("segment_lookup: curve has no sloped segment");
  return last;
}

const StackSegment& segment_lookup(const ZonalStackCurve& curve, double y) {
  return curve.segments[segment_index(curve, y)];
}

double stack_price(const ZonalStackCurve& curve, double y) {
  const double cap = curve.capacity();
  const double slack = 1e-12 * (1.0 + cap);
  if (y <= slack) return 0.0;
  // y(v) is non-decreasing, so the first segment reaching y gives the lowest price.
  for (const auto& s : curve.segments) {
    if (s.vertical) {
      if (std::abs(y - s.Q_s) <= slack) return s.v_lo;
      continue;
    }
    if (y <= s.y_hi + slack) return s.price(std::max(y, s.y_lo));
  }
  std::ostringstream os;
  os << "stack_price: y = " << y << " above zone capacity " << cap;
  throw std::out_of_range(os.str());
}

double stack_objective(const std::vector<ZonalStackCurve>& curves, const Vector& y) {
  double f = 0.0;
  for (std::size_t z = 0; z < curves.size(); ++z) {
    const double yz = y(static_cast<Eigen::Index>(z));
    f += stack_price(curves[z], yz) * yz;
  }
  return f;
}

}  // namespace zc
