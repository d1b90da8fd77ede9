#include "zonalclear/generator.hpp"

#include "zonalclear/convex.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace zc {

namespace {

double draw(std::mt19937_64& rng, const std::pair<double, double>& r) {
  return std::uniform_real_distribution<double>(r.first, r.second)(rng);
}

MarketInstance draw_instance(const GeneratorSpec& spec, std::mt19937_64& rng) {
  MarketInstance inst;
  const auto nz = static_cast<Eigen::Index>(spec.zones);
  inst.demand = Vector(nz);
  for (std::size_t z = 0; z < spec.zones; ++z) {
    inst.zones.push_back("Z" + std::to_string(z));
    inst.demand(static_cast<Eigen::Index>(z)) = draw(rng, spec.demand_range);
    std::uniform_int_distribution<std::size_t> count(spec.players_min, spec.players_max);
    const std::size_t np = count(rng);
    for (std::size_t k = 0; k < np; ++k) {
      const double m = draw(rng, spec.m_range);
      const double a = draw(rng, spec.a_range);
      const double Q = draw(rng, spec.Q_range);
      inst.players.push_back(make_player("z" + std::to_string(z) + "p" + std::to_string(k), z, m, a, Q));
    }
  }
  std::vector<Vector> rows;
  std::vector<double> ram;
  std::bernoulli_distribution keep(spec.density);
  for (std::size_t i = 0; i < spec.zones; ++i)
    for (std::size_t j = i + 1; j < spec.zones; ++j) {
      if (!keep(rng)) continue;
      Vector row = Vector::Zero(nz);
      const double w = draw(rng, {0.5, 1.0});
      row(static_cast<Eigen::Index>(i)) = w;
      row(static_cast<Eigen::Index>(j)) = -w;
      rows.push_back(row);
      ram.push_back(draw(rng, spec.ram_range));
    }
  Matrix ptdf(static_cast<Eigen::Index>(rows.size()), nz);
  Vector R(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    ptdf.row(static_cast<Eigen::Index>(k)) = rows[k].transpose();
    R(static_cast<Eigen::Index>(k)) = ram[k];
  }
  inst.polytope = assemble_polytope(ptdf, -R, R, inst.demand, spec.box_lo, spec.box_hi);
  return inst;
}

}  // namespace

MarketInstance generate_instance(const GeneratorSpec& spec) {
  if (spec.zones == 0 || spec.players_min == 0 || spec.players_min > spec.players_max)
    throw std::invalid_argument("generate_instance: inconsistent zone or player counts");
  std::mt19937_64 rng(spec.seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    MarketInstance inst;
    try {
      inst = draw_instance(spec, rng);
    } catch (const std::invalid_argument&) {
      continue;
    }
    if (validate_instance(inst).empty()) return inst;
  }
  throw InfeasibleError("spec infeasible");
}

MarketInstance fixture_instance() {
  MarketInstance inst;
  inst.zones = {"Z0", "Z1", "Z2"};
  inst.demand = Vector(3);
  inst.demand << 10, 6, 6;
  const Vector c = fixture_cost_c(), b = fixture_cost_b();
  const double Q[] = {4.0, 5.5, 4.0, 4.0, 3.0, 4.0};
  for (std::size_t i = 0; i < 6; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    inst.players.push_back(make_player("p" + std::to_string(i), i / 2, c(k), 2.0 * b(k), Q[i]));
  }
  inst.polytope.M = Matrix(9, 3);
  inst.polytope.M << 1, -1, 0, 1, 0, -1, 0, 1, -1, 1, 0, 0, 0, 1, 0, 0, 0, 1, -1, 0, 0, 0, -1, 0, 0, 0, -1;
  inst.polytope.b = Vector(9);
  inst.polytope.b << 5, 5, 2.5, 12, 8, 8, -8, -4, -4;
  return inst;
}

Vector fixture_cost_c() {
  Vector c(6);
  c << 0.5, 0.5, 0.4, 0.4, 0.5, 0.5;
  return c;
}

Vector fixture_cost_b() {
  Vector b(6);
  b << 1.5, 1.3, 0.8, 0.63, 0.2, 0.4;
  return b;
}

std::vector<Vector> sample_feasible_y(const MarketInstance& inst, std::size_t count, std::uint64_t seed) {
  const Polytope P = reachable_region(inst);
  const auto nz = static_cast<Eigen::Index>(inst.num_zones());
  const Ball ball = chebyshev_center(P, Matrix::Ones(1, nz), Vector::Constant(1, inst.total_demand()));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vector> out;
  out.reserve(count);
  Vector y = ball.center;
  // hit-and-run inside the balance plane
  for (std::size_t s = 0; s < count; ++s) {
    Vector dir(nz);
    for (Eigen::Index z = 0; z < nz; ++z) dir(z) = gauss(rng);
    dir.array() -= dir.mean();
    if (dir.norm() > 0.0) dir.normalize();
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    const Vector Md = P.M * dir;
    const Vector slack = P.b - P.M * y;
    for (Eigen::Index k = 0; k < Md.size(); ++k) {
      const double sk = std::max(0.0, slack(k));
      if (Md(k) > 1e-14) hi = std::min(hi, sk / Md(k));
      else if (Md(k) < -1e-14) lo = std::max(lo, sk / Md(k));
    }
    if (std::isfinite(lo) && std::isfinite(hi) && hi > lo) y += (lo + (hi - lo) * unit(rng)) * dir;
    out.push_back(y);
  }
  return out;
}

CalibrationSeries synthetic_series(std::size_t steps, const CostScales& hidden, std::uint64_t seed,
                                   const CalibrationOptions& opts) {
  constexpr std::size_t nz = 3;
  std::mt19937_64 rng(seed);
  struct Zone {
    double m_base, a_base, m_peak, a_peak;
  };
  std::vector<Zone> zones;
  for (std::size_t z = 0; z < nz; ++z)
    zones.push_back({draw(rng, {0.05, 0.15}), draw(rng, {3.0, 6.0}), draw(rng, {0.3, 0.7}), draw(rng, {18.0, 25.0})});

  CalibrationSeries series;
  for (std::size_t t = 0; t < steps; ++t) {
    MarketInstance inst;
    inst.demand = Vector(static_cast<Eigen::Index>(nz));
    for (std::size_t z = 0; z < nz; ++z) {
      inst.zones.push_back("Z" + std::to_string(z));
      inst.demand(static_cast<Eigen::Index>(z)) = draw(rng, {12.0, 28.0});
      const std::string tag = "z" + std::to_string(z);
      inst.players.push_back(make_player(tag + "base", z, zones[z].m_base, zones[z].a_base, 10.0));
      inst.players.push_back(make_player(tag + "peak", z, zones[z].m_peak, zones[z].a_peak, 20.0));
    }
    inst.polytope = assemble_polytope(Matrix(0, static_cast<Eigen::Index>(nz)), Vector(0), Vector(0),
                                      inst.demand, 1.0, 1.0);
    ClearOptions co;
    co.mechanism = opts.mechanism;
    co.algorithm = opts.algorithm;
    co.settings = opts.settings;
    series.targets.push_back(clear(apply_scales(inst, hidden), co).v);
    series.instances.push_back(std::move(inst));
  }
  return series;
}

}  // namespace zc
