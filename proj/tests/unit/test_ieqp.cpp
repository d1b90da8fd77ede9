#include "builders.hpp"
#include "oracles.hpp"

#include "zonalclear/generator.hpp"
#include "zonalclear/ibcqp.hpp"
#include "zonalclear/ieqp.hpp"

#include <doctest.h>

#include <random>

using namespace zc;

TEST_CASE("fixture mc-QP block dimensions") {
  const MarketInstance inst = fixture_instance();
  const McQpForm f = build_mcqp(inst, estimate_active_set(inst));
  CHECK(f.A_I.rows() == 27);
  CHECK(f.A_I.cols() == 9);
  CHECK(f.b_I.size() == 27);
  CHECK(f.e_bar.cols() == 9);
  CHECK(f.d == doctest::Approx(22.0));
}

TEST_CASE("bilinear form reproduces v'Ex") {
  const MarketInstance inst = fixture_instance();
  const ActiveEstimate est = estimate_active_set(inst);
  const McQpForm f = build_mcqp(inst, est);
  const Matrix E = f.layout.aggregation(inst);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int k = 0; k < 100; ++k) {
    Vector z(9);
    for (Eigen::Index i = 0; i < 9; ++i) z(i) = g(rng);
    const Vector x = z.head(6), v = z.tail(3);
    CHECK(z.dot(f.G * z) == doctest::Approx(v.dot(E * x)).epsilon(1e-12));
  }
}

TEST_CASE("smallest case and regularisation") {
  const MarketInstance inst = testutil::loose_single_zone(2.0, {{{1.0, 0.5, 5}}});
  const McQpForm f = build_mcqp(inst, all_players(inst));
  REQUIRE(f.G.rows() == 2);
  CHECK(f.G(0, 1) == doctest::Approx(0.5));
  CHECK(f.G(1, 0) == doctest::Approx(0.5));
  CHECK(f.G(0, 0) == 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(f.G);
  CHECK(es.eigenvalues()(0) == doctest::Approx(-0.5));
  CHECK(es.eigenvalues()(1) == doctest::Approx(0.5));
  const McQpForm r = build_mcqp(inst, all_players(inst), Vector::Constant(2, 0.25));
  CHECK((r.G_hat - r.G - 0.25 * Matrix::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("fixture run reaches the reported value") {
  const MarketInstance inst = fixture_instance();
  IeqpTrace trace;
  const ClearingOutcome out = run_ieqp_wr(inst, estimate_active_set(inst), {}, {}, &trace);
  CHECK(std::abs(out.total_cost - 77.463) <= 0.05);
  CHECK(check_outcome(inst, out, Settings{1e-6, 1e-8, 1e-9, 1e-8, 200}).empty());
  CHECK(trace.max_equality_residual <= 1e-8);
  for (std::size_t k = 1; k < trace.equalities.size(); ++k) CHECK(trace.equalities[k] >= trace.equalities[k - 1]);
}

TEST_CASE("iterates lie in the previous Dikin ellipsoid") {
  const MarketInstance inst = fixture_instance();
  IeqpTrace trace;
  run_ieqp_wr(inst, estimate_active_set(inst), {}, {}, &trace);
  REQUIRE(trace.centers.size() >= 2);
  for (std::size_t k = 0; k + 1 < trace.centers.size(); ++k) {
    const Ellipsoid e = dikin_ellipsoid(trace.centers[k], trace.rows[k], trace.rhs[k]);
    CHECK(e.contains(trace.centers[k + 1], 1e-7));
    CHECK((trace.rows[k] * trace.centers[k] - trace.rhs[k]).maxCoeff() < 0.0);
  }
}

TEST_CASE("slack capacities: interior stationary point matches the stack solution") {
  const MarketInstance inst = testutil::loose_single_zone(4.0, {{{1.0, 1.0, 50}}, {{2.0, 1.0, 50}}});
  IeqpSettings s;
  s.delta = 1e-6;
  const ClearingOutcome out = run_ieqp_wr(inst, all_players(inst), s);
  IbcqpSettings ib;
  ib.cqp_tol = 1e-10;
  CHECK(out.total_cost == doctest::Approx(run_ibcqp(inst, ib).total_cost).epsilon(1e-4));
}
