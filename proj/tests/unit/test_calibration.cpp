#include "builders.hpp"

#include "zonalclear/calibration.hpp"
#include "zonalclear/generator.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace zc;

namespace {

CostScales uniform(std::size_t zones, double c, double b) {
  return CostScales{Vector::Constant(static_cast<Eigen::Index>(zones), c), Vector::Constant(static_cast<Eigen::Index>(zones), b)};
}

}  // namespace

TEST_CASE("fuel cost to order coefficients") {
  FuelCostSpec s{{30.0}, 0.5, 0.2};
  const OrderCoefficients o = orders_from_fuel(s, 10.0, 0);
  CHECK(o.b == doctest::Approx(24.0));
  CHECK(o.c == doctest::Approx(1.2));
  CHECK(o.c * 5.0 + o.b == doctest::Approx(30.0));
  s.n = 0.0;
  const OrderCoefficients flat = orders_from_fuel(s, 10.0, 0);
  CHECK(flat.b == doctest::Approx(30.0));
  CHECK(flat.c == 0.0);
  s.f = 1.0;
  CHECK_THROWS_AS(orders_from_fuel(s, 10.0, 0), std::invalid_argument);
  CHECK(orders_from_fuel(FuelCostSpec{{30.0}, 0.5, 0.2}, 10.0, 7).b == doctest::Approx(24.0));
  CHECK_THROWS_AS(orders_from_fuel(FuelCostSpec{{30.0, 31.0}, 0.5, 0.2}, 10.0, 2), std::invalid_argument);
}

TEST_CASE("technology table") {
  CHECK(fuel_type("gas", {40.0}).n == doctest::Approx(0.2));
  CHECK(fuel_type("coal", {20.0}).n == doctest::Approx(0.4));
  const FuelCostSpec nuc = fuel_type("nuclear");
  CHECK(nuc.k.at(0) == doctest::Approx(13.8));
  CHECK(nuc.n == doctest::Approx(0.8));
  CHECK(fuel_type("wind").k.at(0) == doctest::Approx(0.5));
  CHECK(fuel_type("solar").n == doctest::Approx(0.05));
  const FuelCostSpec ror = fuel_type("hydro_ror");
  CHECK(ror.k.at(0) == doctest::Approx(8.45));
  CHECK(ror.n == doctest::Approx(0.1));
  CHECK_THROWS_AS(fuel_type("peat"), std::invalid_argument);
}

TEST_CASE("Hessian block of a single observation") {
  // one player m = 1, a = 3 at x = 2, so m x = 2 and a = 3
  CalibrationSeries series;
  series.instances.push_back(testutil::loose_single_zone(2.0, {{{1.0, 3.0, 10.0}}}));
  series.targets.push_back(Vector::Constant(1, 4.0));
  const auto H = hessian_blocks(series, CostScales::ones(1));
  REQUIRE(H.size() == 1);
  Eigen::Matrix2d ref;
  ref << 4, 6, 6, 9;
  CHECK((H[0] - 2.0 * ref).norm() <= 1e-8);
  CHECK(std::abs(H[0].determinant()) <= 1e-8);
}

TEST_CASE("perfect fit has zero objective and gradient") {
  const CostScales hidden = uniform(3, 1.0, 1.0);
  const CalibrationSeries series = synthetic_series(5, hidden, 3);
  const ObjectiveGradient e = objective_and_gradient(series, hidden);
  CHECK(e.F <= 1e-16);
  CHECK(e.grad.norm() <= 1e-8);
  CHECK(e.skipped.empty());
  for (const auto& H : hessian_blocks(series, e)) CHECK(H.eigenvalues().real().minCoeff() >= -1e-12);

  CalibrationSeries doubled = series;
  for (auto& t : doubled.targets) t *= 2.0;
  CHECK(objective_and_gradient(doubled, hidden).F > e.F);
}

TEST_CASE("objective matches fresh clearings") {
  const CalibrationSeries series = synthetic_series(6, uniform(3, 1.2, 0.8), 4);
  const CostScales s = uniform(3, 1.0, 1.0);
  const ObjectiveGradient e = objective_and_gradient(series, s);
  double F = 0.0;
  for (std::size_t t = 0; t < series.steps(); ++t) {
    ClearOptions o;
    o.mechanism = Mechanism::swm;
    const ClearingOutcome out = clear(apply_scales(series.instances[t], s), o);
    F += (out.v - series.targets[t]).squaredNorm();
  }
  F /= static_cast<double>(series.steps());
  CHECK(e.F == doctest::Approx(F).epsilon(1e-10));
}

TEST_CASE("gradient matches central differences") {
  const CalibrationSeries series = synthetic_series(5, uniform(3, 1.25, 0.85), 5);
  const CostScales s = CostScales::ones(3);
  const ObjectiveGradient e = objective_and_gradient(series, s);
  const Vector base = s.stacked();
  const double h = 1e-6;
  for (Eigen::Index k = 0; k < base.size(); ++k) {
    Vector p = base, m = base;
    p(k) += h;
    m(k) -= h;
    const ObjectiveGradient ep = objective_and_gradient(series, CostScales::from_stacked(p));
    const ObjectiveGradient em = objective_and_gradient(series, CostScales::from_stacked(m));
    const double fd = (ep.F - em.F) / (2.0 * h);
    CHECK(std::abs(e.grad(k) - fd) / (1.0 + std::abs(e.grad(k))) < 1e-5);
  }
}

TEST_CASE("round trip recovers the hidden scales") {
  CostScales hidden{Vector(3), Vector(3)};
  hidden.s_c << 1.3, 1.1, 0.8;
  hidden.s_b << 0.9, 1.2, 1.05;
  const CalibrationSeries series = synthetic_series(30, hidden, 6);
  for (FitMethod m : {FitMethod::newton, FitMethod::gd}) {
    FitSettings fs;
    fs.method = m;
    fs.max_iters = m == FitMethod::gd ? 3000 : 200;
    const FitReport r = fit_scales(series, fs);
    const Vector got = r.scales.stacked(), want = hidden.stacked();
    for (Eigen::Index k = 0; k < got.size(); ++k) CHECK(std::abs(got(k) / want(k) - 1.0) <= 0.05);
    CHECK(r.F_trace.back() <= 1e-6);
    for (std::size_t k = 1; k < r.F_trace.size(); ++k) CHECK(r.F_trace[k] <= r.F_trace[k - 1]);
    CHECK(r.errors.relative.maxCoeff() <= 0.01);
  }
}

TEST_CASE("zero iteration budget keeps unit scales") {
  const CalibrationSeries series = synthetic_series(4, uniform(3, 1.3, 0.9), 7);
  FitSettings fs;
  fs.max_iters = 0;
  const FitReport r = fit_scales(series, fs);
  CHECK(r.iterations == 0);
  CHECK((r.scales.stacked() - Vector::Ones(6)).norm() == 0.0);
}

TEST_CASE("error metrics are MAE over the mean target") {
  CalibrationSeries series;
  series.instances.push_back(testutil::loose_single_zone(2.0, {{{1.0, 3.0, 10.0}}}));
  series.instances.push_back(testutil::loose_single_zone(2.0, {{{1.0, 3.0, 10.0}}}));
  series.targets = {Vector::Constant(1, 4.0), Vector::Constant(1, 6.0)};
  const ObjectiveGradient e = objective_and_gradient(series, CostScales::ones(1));
  const ErrorMetrics m = error_metrics(series, e.steps);
  // price is 5 both times
  CHECK(m.mae(0) == doctest::Approx(1.0));
  CHECK(m.relative(0) == doctest::Approx(0.2));
}

TEST_CASE("series checks and target files") {
  CalibrationSeries bad = synthetic_series(3, CostScales::ones(3), 8);
  bad.targets.pop_back();
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);

  const auto path = std::filesystem::temp_directory_path() / "zc_targets_test.csv";
  {
    std::ofstream out(path);
    out << "t,zone,price\n0,A,1.5\n0,B,2.5\n1,0,3.5\n1,1,4.5\n";
  }
  const auto t = read_targets_csv(path, {"A", "B"}, 2);
  REQUIRE(t.size() == 2);
  CHECK(t[0](1) == doctest::Approx(2.5));
  CHECK(t[1](0) == doctest::Approx(3.5));
  CHECK_THROWS(read_targets_csv(path, {"A", "B"}, 3));
  std::filesystem::remove(path);
}
