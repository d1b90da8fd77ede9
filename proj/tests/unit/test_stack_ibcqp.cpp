#include "builders.hpp"
#include "oracles.hpp"

#include "zonalclear/generator.hpp"
#include "zonalclear/ibcqp.hpp"
#include "zonalclear/stack_curve.hpp"

#include <doctest.h>

#include <random>

using namespace zc;

namespace {

const StackSegment* find_segment(const ZonalStackCurve& c, double v_lo, double v_hi) {
  for (const auto& s : c.segments)
    if (std::abs(s.v_lo - v_lo) < 1e-12 && std::abs(s.v_hi - v_hi) < 1e-12) return &s;
  return nullptr;
}

}  // namespace

TEST_CASE("zone 2 stack of the fixture") {
  const ZonalStackCurve c = build_stack_curve(fixture_instance(), 2);
  const std::vector<double> bp{0.0, 0.4, 0.8, 1.9, 2.8};
  REQUIRE(c.breakpoints.size() == bp.size());
  for (std::size_t k = 0; k < bp.size(); ++k) CHECK(c.breakpoints[k] == doctest::Approx(bp[k]));
  const StackSegment* s = find_segment(c, 0.8, 1.9);
  REQUIRE(s);
  CHECK(s->alpha == doctest::Approx(0.25));
  CHECK(s->beta == doctest::Approx(0.6));
  CHECK(s->quantity(1.9) == doctest::Approx(5.2));
  CHECK(c.capacity() == doctest::Approx(7.0));
}

TEST_CASE("zone 0 two-marginal segment") {
  const ZonalStackCurve c = build_stack_curve(fixture_instance(), 0);
  bool seen = false;
  for (const auto& s : c.segments)
    if (!s.vertical && s.sets.marginal.size() == 2) {
      CHECK(s.alpha == doctest::Approx(0.25));
      CHECK(s.beta == doctest::Approx(2.8));
      seen = true;
    }
  CHECK(seen);
}

TEST_CASE("one player stack") {
  const MarketInstance inst = testutil::loose_single_zone(1.0, {{{2.0, 1.0, 3.0}}});
  const ZonalStackCurve c = build_stack_curve(inst, 0);
  int linear = 0;
  for (const auto& s : c.segments) {
    if (s.vertical) continue;
    ++linear;
    CHECK(s.alpha == doctest::Approx(2.0));
    CHECK(s.v_lo == doctest::Approx(1.0));
    CHECK(s.v_hi == doctest::Approx(7.0));
  }
  CHECK(linear == 1);
  CHECK(stack_price(c, 0.0) == 0.0);
  CHECK(stack_price(c, 1e-9) == doctest::Approx(1.0));
  CHECK(stack_price(c, 3.0) == doctest::Approx(7.0));
}

TEST_CASE("segment invariants on random instances") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GeneratorSpec spec;
    spec.seed = seed;
    spec.players_max = 4;
    const MarketInstance inst = generate_instance(spec);
    for (const auto& c : build_stack_curves(inst)) {
      double prev_y = 0.0, prev_v = -1.0;
      for (const auto& s : c.segments) {
        CHECK(s.y_lo <= s.y_hi + 1e-12);
        CHECK(s.y_lo == doctest::Approx(prev_y));
        CHECK(s.v_lo >= prev_v - 1e-12);
        if (!s.vertical) {
          CHECK(s.alpha > 0.0);
          CHECK(s.price(s.y_lo) == doctest::Approx(s.v_lo).epsilon(1e-10));
          CHECK(s.price(s.y_hi) == doctest::Approx(s.v_hi).epsilon(1e-10));
          const double y = 0.5 * (s.y_lo + s.y_hi);
          CHECK(s.alpha * y * y + (s.beta - s.alpha * s.Q_s) * y == doctest::Approx(s.cost(y)).epsilon(1e-8));
        }
        prev_y = s.y_hi;
        prev_v = s.v_hi;
      }
      CHECK(c.capacity() == doctest::Approx(inst.zone_capacity()(static_cast<Eigen::Index>(c.zone))));
    }
  }
}

TEST_CASE("half-open lookup") {
  const ZonalStackCurve c = build_stack_curve(fixture_instance(), 2);
  CHECK(segment_lookup(c, 5.2).y_lo == doctest::Approx(5.2));
  CHECK(segment_index(c, 0.0) == segment_index(c, 1e-9));
  CHECK(segment_lookup(c, 7.0).y_hi == doctest::Approx(7.0));
  CHECK_THROWS_AS(segment_lookup(c, 7.5), std::out_of_range);
  CHECK_THROWS_AS(segment_lookup(c, -0.1), std::out_of_range);
}

TEST_CASE("recover x on the two-marginal segment of zone 2") {
  const MarketInstance inst = fixture_instance();
  const auto curves = build_stack_curves(inst);
  Vector y(3);
  y << 8.0, 6.0, 4.0;
  const Vector x = recover_x(inst, y, curves);
  CHECK(x(4) == doctest::Approx(2.4));
  CHECK(x(5) == doctest::Approx(1.6));
  CHECK(inst.players[4].ask(x(4)) == doctest::Approx(1.6));
  CHECK(inst.players[5].ask(x(5)) == doctest::Approx(1.6));
}

TEST_CASE("single marginal player takes the reduced quantity") {
  const MarketInstance inst = testutil::loose_single_zone(5.0, {{{0.1, 0.1, 2}}, {{1.0, 5.0, 10}}});
  const auto curves = build_stack_curves(inst);
  const Vector x = recover_x(inst, Vector::Constant(1, 5.0), curves);
  CHECK(x(0) == doctest::Approx(2.0));
  CHECK(x(1) == doctest::Approx(3.0));
}

TEST_CASE("stack price agrees with the fixed-y LP") {
  const MarketInstance inst = fixture_instance();
  const auto curves = build_stack_curves(inst);
  const ActiveEstimate all = all_players(inst);
  for (const Vector& y : sample_feasible_y(inst, 200, 17)) {
    const FixedYResult r = cm_objective_given_y(inst, all, y);
    for (Eigen::Index z = 0; z < 3; ++z) CHECK(r.v(z) == doctest::Approx(stack_price(curves[static_cast<std::size_t>(z)], y(z))).epsilon(1e-6));
  }
}

TEST_CASE("fixture run at both tolerances") {
  const MarketInstance inst = fixture_instance();
  const ClearingOutcome tight = run_ibcqp(inst);
  CHECK(std::abs(tight.total_cost - 77.463) <= 0.01);
  CHECK(tight.total_cost >= oracle::fixture_optimum() - 1e-9);
  CHECK(check_outcome(inst, tight, Settings{1e-6, 1e-8, 1e-9, 1e-8, 200}).empty());
  IbcqpSettings loose;
  loose.cqp_tol = 1e-2;
  const ClearingOutcome rough = run_ibcqp(inst, loose);
  CHECK(std::abs(rough.total_cost - 77.512) <= 0.05);
}

TEST_CASE("terminal boxes are globally solved from other starts") {
  const MarketInstance inst = fixture_instance();
  IbcqpSettings s;
  s.cqp_tol = 1e-10;
  const ClearingOutcome base = run_ibcqp(inst, s);
  for (const Vector& y0 : sample_feasible_y(inst, 10, 23)) {
    s.y0 = y0;
    CHECK(run_ibcqp(inst, s).total_cost == doctest::Approx(base.total_cost).epsilon(1e-8));
  }
}

TEST_CASE("interior optimum needs one outer iteration") {
  const MarketInstance inst = testutil::loose_single_zone(4.0, {{{1.0, 1.0, 50}}, {{2.0, 1.0, 50}}});
  const ClearingOutcome out = run_ibcqp(inst);
  CHECK(out.diag.iterations == 1);
  CHECK(out.total_cost == doctest::Approx(4.0 * (2.0 / 3.0 * 4.0 + 1.0)));
}
