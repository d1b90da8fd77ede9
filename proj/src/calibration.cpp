#include "zonalclear/calibration.hpp"

#include "zonalclear/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace zc {

CostScales CostScales::ones(std::size_t zones) {
  const auto n = static_cast<Eigen::Index>(zones);
  return {Vector::Ones(n), Vector::Ones(n)};
}

Vector CostScales::stacked() const {
  Vector s(s_c.size() + s_b.size());
  s << s_c, s_b;
  return s;
}

CostScales CostScales::from_stacked(const Vector& s) {
  const Eigen::Index n = s.size() / 2;
  return {s.head(n), s.tail(n)};
}

void CalibrationSeries::check() const {
  if (instances.empty()) throw std::invalid_argument("calibration series is empty");
  if (instances.size() != targets.size())
    throw std::invalid_argument("calibration series: instance and target counts differ");
  const std::size_t nz = instances.front().num_zones();
  for (std::size_t t = 0; t < instances.size(); ++t) {
    if (instances[t].num_zones() != nz || static_cast<std::size_t>(targets[t].size()) != nz)
      throw std::invalid_argument("calibration series: zone count differs at step " + std::to_string(t));
    const auto issues = validate_instance(instances[t]);
    if (!issues.empty())
      throw std::invalid_argument("calibration series: step " + std::to_string(t) + ": " + issues.front());
  }
}

FuelCostSpec fuel_type(const std::string& type, std::vector<double> k) {
  FuelCostSpec s;
  double k_const = -1.0;
  if (type == "gas") s.n = 0.2;
  else if (type == "coal") s.n = 0.4;
  else if (type == "nuclear") s.n = 0.8, k_const = 13.8;
  else if (type == "wind" || type == "solar") s.n = 0.05, k_const = 0.5;
  else if (type == "hydro_ror") s.n = 0.1, k_const = 8.45;
  else throw std::invalid_argument("unknown technology '" + type + "'");
  if (!k.empty()) s.k = std::move(k);
  else if (k_const > 0.0) s.k = {k_const};
  else throw std::invalid_argument("technology '" + type + "' needs a base cost series");
  return s;
}

OrderCoefficients orders_from_fuel(const FuelCostSpec& spec, double Q, std::size_t t) {
  if (!(spec.f > 0.0 && spec.f < 1.0)) throw std::invalid_argument("orders_from_fuel: f must lie in (0, 1)");
  if (!(spec.n >= 0.0 && spec.n <= 1.0)) throw std::invalid_argument("orders_from_fuel: n must lie in [0, 1]");
  if (!(Q > 0.0)) throw std::invalid_argument("orders_from_fuel: Q must be positive");
  if (spec.k.empty()) throw std::invalid_argument("orders_from_fuel: empty cost series");
  // constant series apply to every step
  if (spec.k.size() > 1 && t >= spec.k.size()) throw std::invalid_argument("orders_from_fuel: step out of range");
  const double k = spec.k.size() == 1 ? spec.k.front() : spec.k[t];
  return {k * (1.0 - spec.n * spec.f / (1.0 - spec.f)), spec.n * k / ((1.0 - spec.f) * Q)};
}

MarketInstance apply_scales(const MarketInstance& inst, const CostScales& s) {
  MarketInstance out = inst;
  for (auto& p : out.players) {
    const auto z = static_cast<Eigen::Index>(p.zone);
    p.m *= s.s_c(z);
    p.a *= s.s_b(z);
  }
  return out;
}

namespace {

StepResult clear_step(const MarketInstance& base, const CostScales& s, const CalibrationOptions& opts) {
  StepResult r;
  try {
    const MarketInstance inst = apply_scales(base, s);
    ClearOptions co;
    co.mechanism = opts.mechanism;
    co.algorithm = opts.algorithm;
    co.settings = opts.settings;
    const ClearingOutcome out = clear(inst, co);
    r.x = out.x;
    r.v = out.v;
    r.marginal.assign(inst.num_zones(), -1);
    std::vector<double> best(inst.num_zones(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < inst.num_players(); ++i) {
      const auto& p = inst.players[i];
      const double xi = out.x(static_cast<Eigen::Index>(i));
      if (!is_active(p, xi, opts.settings)) continue;
      if (p.ask(xi) > best[p.zone]) {
        best[p.zone] = p.ask(xi);
        r.marginal[p.zone] = static_cast<long>(i);
      }
    }
    r.ok = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

// d v_z / d (s_c, s_b) with the marginal player frozen.
Eigen::Vector2d price_sensitivity(const MarketInstance& inst, const StepResult& r, std::size_t z) {
  const long k = r.marginal[z];
  if (k < 0) return Eigen::Vector2d::Zero();
  const auto& p = inst.players[static_cast<std::size_t>(k)];
  return {p.m * r.x(k), p.a};
}

}  // namespace

ObjectiveGradient objective_and_gradient(const CalibrationSeries& series, const CostScales& s,
                                         const CalibrationOptions& opts) {
  series.check();
  const std::size_t T = series.steps();
  const std::size_t nz = series.instances.front().num_zones();
  const auto n = static_cast<Eigen::Index>(nz);
  ObjectiveGradient out;
  out.steps.resize(T);
  parallel_for(T, [&](std::size_t t) { out.steps[t] = clear_step(series.instances[t], s, opts); });

  out.grad = Vector::Zero(2 * n);
  double F = 0.0, comp = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const StepResult& r = out.steps[t];
    if (!r.ok) {
      out.skipped.push_back(t);
      continue;
    }
    for (std::size_t z = 0; z < nz; ++z) {
      const auto zi = static_cast<Eigen::Index>(z);
      const double res = r.v(zi) - series.targets[t](zi);
      // compensated sum
      const double yk = res * res - comp;
      const double tk = F + yk;
      comp = (tk - F) - yk;
      F = tk;
      const Eigen::Vector2d dv = price_sensitivity(series.instances[t], r, z);
      out.grad(zi) += 2.0 * res * dv(0);
      out.grad(n + zi) += 2.0 * res * dv(1);
    }
  }
  out.F = F / static_cast<double>(T);
  out.grad /= static_cast<double>(T);
  return out;
}

std::vector<Eigen::Matrix2d> hessian_blocks(const CalibrationSeries& series, const ObjectiveGradient& eval) {
  const std::size_t T = series.steps();
  const std::size_t nz = series.instances.front().num_zones();
  std::vector<Eigen::Matrix2d> H(nz, Eigen::Matrix2d::Zero());
  for (std::size_t t = 0; t < T; ++t) {
    if (!eval.steps[t].ok) continue;
    for (std::size_t z = 0; z < nz; ++z) {
      const Eigen::Vector2d dv = price_sensitivity(series.instances[t], eval.steps[t], z);
      H[z] += dv * dv.transpose();
    }
  }
  for (auto& h : H) h *= 2.0 / static_cast<double>(T);
  return H;
}

std::vector<Eigen::Matrix2d> hessian_blocks(const CalibrationSeries& series, const CostScales& s,
                                            const CalibrationOptions& opts) {
  return hessian_blocks(series, objective_and_gradient(series, s, opts));
}

ErrorMetrics error_metrics(const CalibrationSeries& series, const std::vector<StepResult>& steps) {
  const auto n = static_cast<Eigen::Index>(series.instances.front().num_zones());
  ErrorMetrics e{Vector::Zero(n), Vector::Zero(n)};
  Vector mean_target = Vector::Zero(n);
  double used = 0.0;
  for (std::size_t t = 0; t < series.steps(); ++t) {
    if (!steps[t].ok) continue;
    e.mae += (steps[t].v - series.targets[t]).cwiseAbs();
    mean_target += series.targets[t];
    used += 1.0;
  }
  if (used == 0.0) return e;
  e.mae /= used;
  mean_target /= used;
  for (Eigen::Index z = 0; z < n; ++z)
    e.relative(z) = mean_target(z) != 0.0 ? e.mae(z) / std::abs(mean_target(z))
                                          : std::numeric_limits<double>::infinity();
  return e;
}

FitReport fit_scales(const CalibrationSeries& series, const FitSettings& fit) {
  series.check();
  const std::size_t nz = series.instances.front().num_zones();
  const auto n = static_cast<Eigen::Index>(nz);
  FitReport rep;
  Vector s = CostScales::ones(nz).stacked();
  ObjectiveGradient cur = objective_and_gradient(series, CostScales::from_stacked(s), fit.calib);
  rep.F_trace.push_back(cur.F);
  double step0 = 1.0;
  int rising = 0;

  for (int it = 0; it < fit.max_iters; ++it) {
    if (!std::isfinite(cur.F)) {
      rep.status = Status::stalled;
      rep.message = "objective is not finite";
      break;
    }
    if (cur.grad.norm() <= fit.grad_tol * (1.0 + cur.F) || cur.F == 0.0) break;

    Vector p = -cur.grad;
    if (fit.method == FitMethod::newton) {
      const auto H = hessian_blocks(series, cur);
      for (std::size_t z = 0; z < nz; ++z) {
        const auto zi = static_cast<Eigen::Index>(z);
        Eigen::Matrix2d h = H[z];
        h.diagonal().array() += 1e-12 * (1.0 + h.trace());
        const Eigen::Vector2d g(cur.grad(zi), cur.grad(n + zi));
        const Eigen::Vector2d d = -h.ldlt().solve(g);
        if (d.allFinite() && d.dot(g) < 0.0) {
          p(zi) = d(0);
          p(n + zi) = d(1);
        }
      }
      step0 = 1.0;
    }

    const double slope = cur.grad.dot(p);
    double alpha = step0;
    bool accepted = false;
    ObjectiveGradient trial;
    Vector s_new;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      s_new = (s + alpha * p).cwiseMax(fit.min_scale);
      trial = objective_and_gradient(series, CostScales::from_stacked(s_new), fit.calib);
      // Armijo on the projected step
      if (std::isfinite(trial.F) && trial.F <= cur.F + 1e-4 * cur.grad.dot(s_new - s)) {
        accepted = true;
        break;
      }
    }
    if (!accepted || slope >= 0.0) {
      rep.status = Status::stalled;
      rep.message = "line search found no decrease";
      break;
    }
    rising = trial.F > cur.F ? rising + 1 : 0;
    if (rising >= 10) {
      rep.status = Status::stalled;
      rep.message = "objective rose for 10 accepted steps";
      break;
    }
    const double F_old = cur.F;
    s = s_new;
    cur = std::move(trial);
    rep.F_trace.push_back(cur.F);
    rep.iterations = it + 1;
    if (fit.method == FitMethod::gd) step0 = std::min(1e6, 2.0 * alpha);
    if (F_old - cur.F <= 1e-15 * (1.0 + F_old)) break;
  }
  if (rep.status == Status::optimal && rep.iterations == fit.max_iters && fit.max_iters > 0 &&
      cur.grad.norm() > fit.grad_tol * (1.0 + cur.F)) {
    rep.status = Status::stalled;
    rep.message = "iteration budget exhausted";
  }
  rep.scales = CostScales::from_stacked(s);
  rep.errors = error_metrics(series, cur.steps);
  rep.skipped = cur.skipped;
  return rep;
}

std::vector<Vector> read_targets_csv(const std::filesystem::path& path, const std::vector<std::string>& zones,
                                     std::size_t steps) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  const auto nz = static_cast<Eigen::Index>(zones.size());
  std::vector<Vector> out(steps, Vector::Constant(nz, std::numeric_limits<double>::quiet_NaN()));
  std::string line;
  std::getline(in, line);
  if (line.rfind("t,zone,price", 0) != 0) throw InputError(path.string() + ": expected header t,zone,price");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string ts, zs, ps;
    if (!std::getline(ss, ts, ',') || !std::getline(ss, zs, ',') || !std::getline(ss, ps))
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    const std::size_t t = std::stoul(ts);
    if (t >= steps) throw InputError(path.string() + ":" + std::to_string(lineno) + ": step out of range");
    Eigen::Index z = -1;
    const auto label = std::find(zones.begin(), zones.end(), zs);
    if (label != zones.end()) z = label - zones.begin();
    else z = static_cast<Eigen::Index>(std::stol(zs));
    if (z < 0 || z >= nz) throw InputError(path.string() + ":" + std::to_string(lineno) + ": unknown zone");
    out[t](z) = std::stod(ps);
  }
  for (std::size_t t = 0; t < steps; ++t)
    if (!out[t].allFinite()) throw InputError(path.string() + ": missing target at step " + std::to_string(t));
  return out;
}

}  // namespace zc
