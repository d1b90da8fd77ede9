#include "oracles.hpp"

#include "zonalclear/bbtree.hpp"
#include "zonalclear/calibration.hpp"
#include "zonalclear/generator.hpp"
#include "zonalclear/harness.hpp"
#include "zonalclear/ibcqp.hpp"
#include "zonalclear/ieqlp.hpp"
#include "zonalclear/ieqp.hpp"
#include "zonalclear/parallel.hpp"
#include "zonalclear/stack_curve.hpp"
#include "zonalclear/swm.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <string>

using namespace zc;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "first failure: " << what << "; ";
      pass = false;
    }
  }
};

int failures = 0;

void report(int id, const std::string& name, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto t0 = Clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << "exception: " << e.what();
  }
  if (!v.pass) ++failures;
  std::printf("%s %d %s (%.1f s) %s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), ms_since(t0) / 1000.0,
              v.detail.str().c_str());
  std::fflush(stdout);
}

std::string num(double x) {
  std::ostringstream s;
  s.precision(10);
  s << x;
  return s.str();
}

// 200 seeded instances: 3-5 zones, 2-4 players per zone.
const std::vector<MarketInstance>& suite() {
  static const std::vector<MarketInstance> s = [] {
    std::vector<MarketInstance> out;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
      GeneratorSpec spec;
      spec.zones = 3 + seed % 3;
      spec.players_min = 2;
      spec.players_max = 4;
      spec.seed = seed;
      out.push_back(generate_instance(spec));
    }
    return out;
  }();
  return s;
}

void fixture_table(Verdict& v) {
  const MarketInstance inst = fixture_instance();
  const ActiveEstimate est = estimate_active_set(inst);

  auto t0 = Clock::now();
  const BBTreeResult bb = run_bbtree(inst, est);
  const double t_bb = ms_since(t0);
  v.require(std::abs(bb.outcome.total_cost - 77.463) <= 0.01, "bbtree " + num(bb.outcome.total_cost));
  v.require(bb.gap < 1e-5, "bbtree gap " + num(bb.gap));

  t0 = Clock::now();
  const ClearingOutcome ib = run_ibcqp(inst);
  const double t_ib = ms_since(t0);
  v.require(std::abs(ib.total_cost - 77.463) <= 0.01, "ibcqp " + num(ib.total_cost));

  t0 = Clock::now();
  const ClearingOutcome ie = run_ieqp_wr(inst, est);
  const double t_ie = ms_since(t0);
  v.require(std::abs(ie.total_cost - 77.463) <= 0.05, "ieqp " + num(ie.total_cost));

  IeqlpSettings ls;
  ls.start = StartMode::chebyshev;
  t0 = Clock::now();
  const IeqlpResult lp = ieqlp_solve(inst, est, ls);
  const double t_lp = ms_since(t0);
  v.require(lp.f_best >= 77.453 && lp.f_best <= 79.1, "ieqlp-ma " + num(lp.f_best));

  for (double t : {t_bb, t_ib, t_ie, t_lp}) v.require(t < 10000.0, "solve over 10 s");
  v.detail << "bbtree " << num(bb.outcome.total_cost) << " gap " << bb.gap << ", ibcqp " << num(ib.total_cost)
           << ", ieqp " << num(ie.total_cost) << ", ieqlp-ma " << num(lp.f_best) << "; ms " << t_bb << "/" << t_ib
           << "/" << t_ie << "/" << t_lp;
}

void cost_dominance(Verdict& v) {
  const auto& s = suite();
  std::vector<double> cm(s.size()), sw(s.size());
  std::vector<std::string> err(s.size());
  const auto t0 = Clock::now();
  parallel_for(s.size(), [&](std::size_t k) {
    try {
      sw[k] = clear_swm(s[k]).total_cost;
      BBTreeSettings bs;
      bs.gap = 1e-4;
      cm[k] = run_bbtree(s[k], estimate_active_set(s[k]), bs).outcome.total_cost;
    } catch (const std::exception& e) {
      err[k] = e.what();
    }
  });
  const double wall = ms_since(t0);
  int worse = 0;
  double ratio = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    v.require(err[k].empty(), "instance " + std::to_string(k + 1) + ": " + err[k]);
    if (!err[k].empty()) continue;
    const bool ok = cm[k] <= sw[k] + 1e-6 * (1.0 + std::abs(sw[k]));
    if (!ok) ++worse;
    v.require(ok, "seed " + std::to_string(k + 1) + " CM " + num(cm[k]) + " > SWM " + num(sw[k]));
    ratio += cm[k] / sw[k];
  }
  v.require(wall < 30.0 * 60.0 * 1000.0, "runtime over 30 min");
  v.detail << s.size() << " instances, " << worse << " violations, mean CM/SWM " << ratio / double(s.size())
           << ", " << wall / 1000.0 << " s";
}

void swm_prices(Verdict& v) {
  int checked = 0;
  for (const auto& inst : suite()) {
    const ClearingOutcome out = clear_swm(inst);
    v.require(check_paradoxical_orders(inst, out).empty(), "paradoxical order");
    for (std::size_t z = 0; z < inst.num_zones(); ++z) {
      double top = 0.0;
      for (std::size_t i = 0; i < inst.num_players(); ++i)
        if (inst.players[i].zone == z && is_active(inst.players[i], out.x(static_cast<Eigen::Index>(i))))
          top = std::max(top, inst.players[i].ask(out.x(static_cast<Eigen::Index>(i))));
      v.require(std::abs(out.v(static_cast<Eigen::Index>(z)) - top) <= 1e-9 * (1.0 + top), "price is not the top ask");
      ++checked;
    }
  }
  v.detail << checked << " zone prices checked";
}

void stack_equivalence(Verdict& v) {
  std::vector<MarketInstance> all = suite();
  all.push_back(fixture_instance());
  std::vector<std::string> err(all.size());
  std::vector<int> bad(all.size(), 0), samples(all.size(), 0);
  parallel_for(all.size(), [&](std::size_t k) {
    const MarketInstance& inst = all[k];
    try {
      const auto curves = build_stack_curves(inst);
      for (const auto& c : curves) {
        // graph continuity and monotone prices
        for (std::size_t s = 1; s < c.segments.size(); ++s) {
          const auto &a = c.segments[s - 1], &b = c.segments[s];
          if (std::abs(a.y_hi - b.y_lo) > 1e-12 * (1.0 + b.y_lo) || std::abs(a.v_hi - b.v_lo) > 1e-12 * (1.0 + b.v_lo) ||
              b.v_lo < a.v_lo)
            ++bad[k];
        }
        double prev = -1.0;
        for (int g = 0; g <= 400; ++g) {
          const double p = stack_price(c, c.capacity() * g / 400.0);
          if (p < prev - 1e-12) ++bad[k];
          prev = p;
        }
      }
      const bool fixture = k + 1 == all.size();
      const ActiveEstimate everyone = all_players(inst);
      for (const Vector& y : sample_feasible_y(inst, 200, 1000 + k)) {
        ++samples[k];
        const double stack = stack_objective(curves, y);
        // independent estimate: players dispatched at the bisection price
        ActiveEstimate est;
        est.zones.resize(inst.num_zones());
        for (std::size_t z = 0; z < inst.num_zones(); ++z) {
          const double p = oracle::merit_price(inst, z, y(static_cast<Eigen::Index>(z)));
          est.zones[z] = oracle::dispatched_at(inst, z, p);
          if (std::abs(p - stack_price(curves[z], y(static_cast<Eigen::Index>(z)))) > 1e-8 * (1.0 + p)) ++bad[k];
        }
        const double lp = cm_objective_given_y(inst, est, y).objective;
        if (std::abs(lp - stack) > 1e-6 * std::max(1.0, std::abs(lp))) ++bad[k];
        if (fixture && std::abs(cm_objective_given_y(inst, everyone, y).objective - stack) > 1e-6 * std::max(1.0, stack))
          ++bad[k];
      }
    } catch (const std::exception& e) {
      err[k] = e.what();
    }
  });
  int total_bad = 0, total = 0;
  for (std::size_t k = 0; k < all.size(); ++k) {
    v.require(err[k].empty(), "instance " + std::to_string(k) + ": " + err[k]);
    v.require(bad[k] == 0, "instance " + std::to_string(k) + " has " + std::to_string(bad[k]) + " mismatches");
    v.require(samples[k] == 200, "instance " + std::to_string(k) + " has " + std::to_string(samples[k]) + " samples");
    total_bad += bad[k];
    total += samples[k];
  }
  v.detail << all.size() << " instances, " << total << " sampled y, " << total_bad << " mismatches";
}

void sandwich(Verdict& v) {
  const MarketInstance inst = fixture_instance();
  const double fstar = oracle::fixture_optimum();
  const BBTreeResult r = run_bbtree(inst, estimate_active_set(inst));
  v.require(!r.trace.empty(), "empty trace");
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    v.require(r.trace[k].f_lb <= fstar + 1e-9, "LB " + num(r.trace[k].f_lb) + " above f*");
    v.require(r.trace[k].f_ub >= fstar - 1e-9, "UB " + num(r.trace[k].f_ub) + " below f*");
    if (k) {
      v.require(r.trace[k].f_ub <= r.trace[k - 1].f_ub, "UB rose");
      v.require(r.trace[k].f_lb >= r.trace[k - 1].f_lb, "LB fell");
    }
  }
  v.detail << r.trace.size() << " iterations around f* = " << num(fstar) << ", final [" << num(r.f_lb) << ", "
           << num(r.f_ub) << "]";
}

void dikin(Verdict& v) {
  std::vector<MarketInstance> insts{fixture_instance()};
  for (std::size_t k = 0; k < 20; ++k) insts.push_back(suite()[k]);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  std::size_t ellipsoids = 0;
  double worst = 0.0;
  for (const auto& inst : insts) {
    IeqpTrace trace;
    run_ieqp_wr(inst, estimate_active_set(inst), {}, {}, &trace);
    for (std::size_t k = 0; k < trace.centers.size(); ++k) {
      const Ellipsoid e = dikin_ellipsoid(trace.centers[k], trace.rows[k], trace.rhs[k]);
      const Eigen::Index n = e.A_s.cols();
      const Eigen::PartialPivLU<Matrix> lu(e.A_s);
      for (int s = 0; s < 1000; ++s) {
        Vector u(n);
        for (Eigen::Index i = 0; i < n; ++i) u(i) = g(rng);
        const Vector z = lu.solve(e.p_s + e.radius * u / u.norm());
        worst = std::max(worst, (trace.rows[k] * z - trace.rhs[k]).maxCoeff());
      }
      ++ellipsoids;
    }
  }
  v.require(ellipsoids > 0, "no ellipsoid built");
  v.require(worst <= 1e-9, "violation " + num(worst));
  v.detail << ellipsoids << " ellipsoids x 1000 samples, worst slack " << worst;
}

void trust_region(Verdict& v) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  double worst_obj = 0.0, worst_kkt = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + trial % 5;
    Matrix S(n, n), L(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) S(i, j) = g(rng), L(i, j) = 0.3 * g(rng);
    const Matrix G = 0.5 * (S + S.transpose());
    const Matrix As = L * L.transpose() + Matrix::Identity(n, n);
    Vector p(n);
    for (Eigen::Index i = 0; i < n; ++i) p(i) = g(rng);
    const Ellipsoid ell{As, p, 0.5 + std::abs(g(rng))};
    Matrix Me(0, n);
    Vector be(0);
    if (trial % 3 == 1) {
      Me = Matrix::Ones(1, n);
      be = Vector::Constant(1, (Me * ell.center())(0) + 0.1 * g(rng));
    }
    const TrustRegionResult r = trust_region_solve(G, Me, be, ell);
    v.require(r.status == Status::optimal, "trial " + std::to_string(trial) + " status " + to_string(r.status));
    const double ref = oracle::trust_region_oracle(G, Me, be, As, p, ell.radius);
    worst_obj = std::max(worst_obj, std::abs(r.objective - ref));
    worst_kkt = std::max({worst_kkt, r.stationarity, r.complementarity});
    v.require(ell.contains(r.z, 1e-8), "iterate outside ellipsoid");
    if (Me.rows()) v.require((Me * r.z - be).norm() <= 1e-8, "equality violated");
  }
  v.require(worst_obj <= 1e-4, "objective gap " + num(worst_obj));
  v.require(worst_kkt <= 1e-8, "KKT residual " + num(worst_kkt));
  v.detail << "50 problems, worst objective gap " << worst_obj << ", worst KKT " << worst_kkt;
}

void calibration(Verdict& v) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.7, 1.4);
  CostScales hidden{Vector(3), Vector(3)};
  for (Eigen::Index z = 0; z < 3; ++z) hidden.s_c(z) = u(rng), hidden.s_b(z) = u(rng);
  const CalibrationSeries series = synthetic_series(50, hidden, 8);
  const FitReport fit = fit_scales(series);
  const Vector got = fit.scales.stacked(), want = hidden.stacked();
  double worst = 0.0;
  for (Eigen::Index k = 0; k < got.size(); ++k) worst = std::max(worst, std::abs(got(k) / want(k) - 1.0));
  v.require(worst <= 0.05, "scale error " + num(worst));

  // gradient at unit scales, skipping coordinates whose perturbation moves a marginal player
  const CostScales s = CostScales::ones(3);
  const ObjectiveGradient e = objective_and_gradient(series, s);
  const double h = 1e-6;
  int used = 0, excluded = 0;
  double worst_fd = 0.0;
  for (Eigen::Index k = 0; k < 6; ++k) {
    Vector pp = s.stacked(), pm = pp;
    pp(k) += h;
    pm(k) -= h;
    const ObjectiveGradient ep = objective_and_gradient(series, CostScales::from_stacked(pp));
    const ObjectiveGradient em = objective_and_gradient(series, CostScales::from_stacked(pm));
    bool stable = true;
    for (std::size_t t = 0; t < series.steps(); ++t)
      stable = stable && ep.steps[t].marginal == e.steps[t].marginal && em.steps[t].marginal == e.steps[t].marginal;
    if (!stable) {
      ++excluded;
      continue;
    }
    ++used;
    const double fd = (ep.F - em.F) / (2.0 * h);
    worst_fd = std::max(worst_fd, std::abs(e.grad(k) - fd) / (1.0 + std::abs(e.grad(k))));
  }
  v.require(used > 0, "no stable coordinate");
  v.require(worst_fd <= 1e-5, "gradient mismatch " + num(worst_fd));
  v.detail << "hidden scales recovered within " << worst * 100.0 << "% after " << fit.iterations
           << " Newton steps; FD check on " << used << " coordinates (" << excluded << " excluded), worst " << worst_fd;
}

void sweeps(Verdict& v) {
  const MarketInstance inst = fixture_instance();
  ClearOptions bb;
  bb.algorithm = CmAlgorithm::bbtree;
  bb.bbtree.gap = 1e-7;
  ClearOptions ib;
  ib.algorithm = CmAlgorithm::ibcqp;
  ib.ibcqp.cqp_tol = 1e-8;
  int agree = 0, total = 0;
  double t_bb = 0.0, t_ib = 0.0;
  for (const auto& [km, ka] : {std::pair{1.35, 1.02}, std::pair{2.0, 1.0}}) {
    for (std::size_t p = 0; p < 6; ++p) {
      const SweepSpec spec = fixture_sweep(p, km, ka, 20);
      const SweepResult rb = profit_sweep(inst, spec, bb);
      const SweepResult ri = profit_sweep(inst, spec, ib);
      t_bb += rb.wall_ms;
      t_ib += ri.wall_ms;
      for (std::size_t k = 0; k < spec.points; ++k) {
        const auto &a = rb.points[k], &b = ri.points[k];
        const double scale = std::max({std::abs(a.profit), std::abs(b.profit), 1e-12});
        agree += a.ok && b.ok && std::abs(a.profit - b.profit) <= 1e-3 * scale;
        ++total;
      }
    }
  }
  const double share = double(agree) / total;
  v.require(share >= 0.9, "agreement " + num(share));
  v.require(t_bb >= 10.0 * t_ib, "time ratio " + num(t_bb / t_ib));
  v.detail << agree << "/" << total << " points agree, BBTree " << t_bb / 1000.0 << " s vs ib-CQP " << t_ib / 1000.0
           << " s (ratio " << t_bb / t_ib << ")";
}

}  // namespace

int main() {
  report(1, "fixture objectives", fixture_table);
  report(2, "CM cost at most SWM cost on the random suite", cost_dominance);
  report(3, "SWM prices are the top active ask, no paradoxical orders", swm_prices);
  report(4, "stack curves match the fixed-y LP", stack_equivalence);
  report(5, "BBTree bounds sandwich the fixture optimum", sandwich);
  report(6, "Dikin ellipsoids stay inside their polytopes", dikin);
  report(7, "trust-region subproblem against the eigen oracle", trust_region);
  report(8, "calibration round trip and gradient check", calibration);
  report(9, "profit sweeps agree between BBTree and ib-CQP", sweeps);
  std::printf("%s: %d failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
