#include "zonalclear/harness.hpp"

#include "zonalclear/generator.hpp"
#include "zonalclear/parallel.hpp"
#include "zonalclear/stack_curve.hpp"
#include "zonalclear/swm.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace zc {

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(12);
  return out;
}

BenchmarkRow run_row(const MarketInstance& inst, const ClearOptions& opts, const std::string& name) {
  BenchmarkRow row;
  row.algo = name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const ClearingOutcome out = clear(inst, opts);
    row.objective = opts.mechanism == Mechanism::swm ? out.objective : out.total_cost;
    row.total_cost = out.total_cost;
    row.indicator = out.diag.indicator;
    row.iterations = out.diag.iterations;
    row.status = out.diag.status;
    const auto issues = check_outcome(inst, out, opts.settings);
    if (!issues.empty()) row.error = "outcome check: " + issues.front();
  } catch (const std::exception& e) {
    row.error = e.what();
    row.status = Status::stalled;
  }
  row.time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

}  // namespace

BenchmarkReport run_benchmark(const MarketInstance& inst, const std::vector<CmAlgorithm>& algos,
                              const ClearOptions& opts) {
  BenchmarkReport rep;
  ClearOptions o = opts;
  o.mechanism = Mechanism::swm;
  rep.rows.push_back(run_row(inst, o, "swm"));
  o.mechanism = Mechanism::cm;
  for (CmAlgorithm a : algos) {
    o.algorithm = a;
    std::string name = to_string(a);
    if (a == CmAlgorithm::ieqlp && o.ieqlp.alpha_y > 0.0) name = "ieqlp-ma";
    rep.rows.push_back(run_row(inst, o, name));
  }

  const BenchmarkRow& swm = rep.rows.front();
  const BenchmarkRow* bb = nullptr;
  for (const auto& r : rep.rows)
    if (r.algo == "bbtree" && r.error.empty()) bb = &r;
  if (bb && swm.error.empty()) {
    const double scale = std::max(1.0, std::abs(swm.total_cost));
    rep.cm_vs_swm = swm.total_cost != 0.0 ? bb->total_cost / swm.total_cost : 0.0;
    if (bb->total_cost > swm.total_cost + 1e-6 * scale) rep.problems.push_back("bbtree cost exceeds swm cost");
    for (const auto& r : rep.rows)
      // the incumbent is only certified up to the closing gap
      if (r.error.empty() && &r != &swm && bb->objective > r.objective + std::max(1e-6, bb->indicator) * scale)
        rep.problems.push_back("bbtree objective above " + r.algo);
  }
  return rep;
}

SweepSpec fixture_sweep(std::size_t player, double k_m, double k_a, std::size_t points) {
  static const double nu[] = {3.4, 3.4, 1.815, 1.815, 1.55, 1.55};
  static const double mu[] = {1.89, 2.1, 1.27, 1.38, 1.35, 1.15};
  if (player >= 6) throw std::invalid_argument("fixture_sweep: player index out of range");
  SweepSpec s;
  s.player = player;
  s.cost_c = fixture_cost_c();
  s.cost_b = fixture_cost_b();
  s.m_lo = 0.5 * s.cost_c(static_cast<Eigen::Index>(player));
  s.m_hi = s.cost_c(static_cast<Eigen::Index>(player));
  s.points = points;
  s.nu = nu[player];
  s.mu = mu[player];
  s.opp_m = k_m * s.cost_c;
  s.opp_a = k_a * s.cost_b;
  return s;
}

SweepResult profit_sweep(const MarketInstance& inst, const SweepSpec& sweep, const ClearOptions& opts) {
  const auto np = static_cast<Eigen::Index>(inst.num_players());
  if (sweep.player >= inst.num_players()) throw std::invalid_argument("profit_sweep: player index out of range");
  if (!(sweep.m_lo > 0.0) || sweep.points < 2) throw std::invalid_argument("profit_sweep: need m_lo > 0 and at least 2 points");
  if (sweep.opp_m.size() != np || sweep.opp_a.size() != np || sweep.cost_c.size() != np || sweep.cost_b.size() != np)
    throw std::invalid_argument("profit_sweep: per-player vectors must match the player count");

  MarketInstance base = inst;
  for (Eigen::Index i = 0; i < np; ++i) {
    base.players[static_cast<std::size_t>(i)].m = sweep.opp_m(i);
    base.players[static_cast<std::size_t>(i)].a = sweep.opp_a(i);
  }
  const auto k = static_cast<Eigen::Index>(sweep.player);
  SweepResult res;
  res.points.resize(sweep.points);
  const auto t0 = std::chrono::steady_clock::now();
  parallel_for(sweep.points, [&](std::size_t j) {
    SweepPoint& pt = res.points[j];
    pt.m = sweep.m_lo + (sweep.m_hi - sweep.m_lo) * static_cast<double>(j) / static_cast<double>(sweep.points - 1);
    pt.a = sweep.nu - sweep.mu * pt.m;
    try {
      MarketInstance local = base;
      local.players[sweep.player] = make_player(inst.players[sweep.player].id, inst.players[sweep.player].zone,
                                                pt.m, pt.a, inst.players[sweep.player].Q);
      const ClearingOutcome out = clear(local, opts);
      pt.x = out.x(k);
      pt.v = out.v(static_cast<Eigen::Index>(local.players[sweep.player].zone));
      pt.profit = pt.v * pt.x - (0.5 * sweep.cost_c(k) * pt.x * pt.x + sweep.cost_b(k) * pt.x);
      pt.ok = true;
    } catch (const std::exception& e) {
      pt.error = e.what();
    }
  });
  res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

void write_benchmark_csv(const BenchmarkReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  write_benchmark_csv(report, out);
}

void write_benchmark_csv(const BenchmarkReport& report, std::ostream& out) {
  out.precision(12);
  out << "algo,objective,time_ms,indicator\n";
  for (const auto& r : report.rows) {
    if (!r.error.empty()) {
      out << r.algo << ",nan," << r.time_ms << ",nan\n";
      continue;
    }
    out << r.algo << ',' << r.objective << ',' << r.time_ms << ',' << r.indicator << '\n';
  }
}

void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path) {
  auto out = open_csv(path);
  write_sweep_csv(sweep, out);
}

void write_sweep_csv(const SweepResult& sweep, std::ostream& out) {
  out.precision(12);
  out << "m,profit,x,v,ok\n";
  for (const auto& p : sweep.points)
    out << p.m << ',' << p.profit << ',' << p.x << ',' << p.v << ',' << (p.ok ? 1 : 0) << '\n';
}

std::vector<std::filesystem::path> write_stack_csv(const MarketInstance& inst, const std::filesystem::path& prefix) {
  std::vector<std::filesystem::path> written;
  for (const auto& curve : build_stack_curves(inst)) {
    std::filesystem::path path = prefix;
    path += "_" + inst.zones[curve.zone] + ".csv";
    auto out = open_csv(path);
    out << "v,y\n";
    for (const auto& s : curve.segments) {
      if (s.vertical && !std::isfinite(s.v_hi)) {
        out << s.v_lo << ',' << s.y_lo << '\n';
        continue;
      }
      out << s.v_lo << ',' << s.y_lo << '\n' << s.v_hi << ',' << s.y_hi << '\n';
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace zc
