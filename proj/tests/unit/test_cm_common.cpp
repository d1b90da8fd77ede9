#include "builders.hpp"
#include "oracles.hpp"

#include "zonalclear/cm_common.hpp"
#include "zonalclear/generator.hpp"
#include "zonalclear/stack_curve.hpp"
#include "zonalclear/swm.hpp"

#include <doctest.h>

using namespace zc;
using testutil::loose_single_zone;

TEST_CASE("fixture estimate keeps all six players") {
  const ActiveEstimate est = estimate_active_set(fixture_instance());
  CHECK(est.count() == 6);
  CHECK(est.zones.size() == 3);
}

TEST_CASE("merit order keeps only the cheap player") {
  const MarketInstance inst = loose_single_zone(2.0, {{{0.1, 1.0, 10}}, {{0.1, 20.0, 10}}});
  const ActiveEstimate est = estimate_active_set(inst);
  REQUIRE(est.zones[0].size() == 1);
  CHECK(est.zones[0][0] == 0);
}

TEST_CASE("full dispatch keeps every player") {
  const MarketInstance inst = loose_single_zone(20.0, {{{0.1, 1.0, 10}}, {{0.1, 20.0, 10}}});
  CHECK(estimate_active_set(inst).count() == 2);
}

TEST_CASE("superset estimate includes cheap idle players") {
  // an idle player with intercept below the zone price is kept
  const MarketInstance inst = loose_single_zone(2.0, {{{0.1, 1.0, 10}}, {{0.1, 1.1, 10}}});
  const ClearingOutcome swm = clear_swm(inst);
  const ActiveEstimate est = estimate_active_set(inst);
  for (std::size_t i = 0; i < 2; ++i)
    if (inst.players[i].a < swm.v(0)) CHECK(std::find(est.zones[0].begin(), est.zones[0].end(), i) != est.zones[0].end());
}

TEST_CASE("quasi-LP at demand has nine variables and solves") {
  const MarketInstance inst = fixture_instance();
  const ActiveEstimate est = estimate_active_set(inst);
  const LinearProgram lp = build_mc_qlp(inst, est, inst.demand);
  CHECK(lp.c.size() == 9);
  const Solution s = solve_lp(lp);
  CHECK(s.status == Status::optimal);
}

TEST_CASE("one player: the price row binds") {
  const MarketInstance inst = loose_single_zone(3.0, {{{2.0, 1.0, 10}}});
  const ActiveEstimate est = all_players(inst);
  const Solution s = solve_lp(build_mc_qlp(inst, est, inst.demand));
  REQUIRE(s.status == Status::optimal);
  CHECK(s.x(1) == doctest::Approx(2.0 * s.x(0) + 1.0).epsilon(1e-7));
  CHECK(s.x(1) == doctest::Approx(7.0).epsilon(1e-7));
}

// Without the coupling y = E x the LP may shift production, so at the
// optimal quantities it only bounds the CM objective from below.
TEST_CASE("quasi-LP at the true quantities bounds the CM objective") {
  const MarketInstance inst = fixture_instance();
  const ActiveEstimate est = all_players(inst);
  const FixedYResult at = cm_objective_given_y(inst, est, oracle::fixture_optimal_y());
  const Solution s = solve_lp(build_mc_qlp(inst, est, inst.aggregation() * at.x));
  REQUIRE(s.status == Status::optimal);
  CHECK(s.objective <= at.objective + 1e-7);
  CHECK(mc_objective(inst, est, at.x) == doctest::Approx(at.objective).epsilon(1e-6));
}

TEST_CASE("fixed-y value at the optimum") {
  const MarketInstance inst = fixture_instance();
  const FixedYResult r = cm_objective_given_y(inst, all_players(inst), oracle::fixture_optimal_y());
  CHECK(r.objective == doctest::Approx(oracle::fixture_optimum()).epsilon(1e-8));
  CHECK(std::abs(r.objective - 77.463) <= 0.01);
}

TEST_CASE("fixed-y value on a single zone is the stack price") {
  const MarketInstance inst = loose_single_zone(7.0, {{{0.5, 1.0, 4}}, {{1.0, 2.0, 5}}, {{0.2, 6.0, 3}}});
  const ZonalStackCurve curve = build_stack_curve(inst, 0);
  for (double y : {1.0, 3.0, 7.0, 10.0}) {
    MarketInstance at = inst;
    at.demand(0) = y;
    // estimate: the players the stack dispatches at y
    const StackSegment& seg = segment_lookup(curve, y);
    ActiveEstimate est;
    est.zones = {seg.sets.marginal};
    est.zones[0].insert(est.zones[0].end(), seg.sets.full.begin(), seg.sets.full.end());
    const FixedYResult r = cm_objective_given_y(at, est, Vector::Constant(1, y));
    CHECK(r.v(0) == doctest::Approx(stack_price(curve, y)).epsilon(1e-6));
  }
}

TEST_CASE("fixed-y value agrees with the stack objective on random y") {
  const MarketInstance inst = fixture_instance();
  const auto curves = build_stack_curves(inst);
  const ActiveEstimate est = all_players(inst);
  for (const Vector& y : sample_feasible_y(inst, 50, 9)) {
    const double lp = cm_objective_given_y(inst, est, y).objective;
    CHECK(lp == doctest::Approx(stack_objective(curves, y)).epsilon(1e-6));
  }
}

TEST_CASE("y outside the polytope throws") {
  const MarketInstance inst = fixture_instance();
  Vector y(3);
  y << 2, 10, 10;  // below the zone-0 box
  CHECK_THROWS_AS(cm_objective_given_y(inst, all_players(inst), y), InfeasibleError);
}
