#include "zonalclear/calibration.hpp"
#include "zonalclear/clearing.hpp"
#include "zonalclear/generator.hpp"
#include "zonalclear/harness.hpp"
#include "zonalclear/instance_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace zc;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kSolverFailure = 2;
constexpr int kInfeasible = 3;

MarketInstance load(const std::string& path) {
  MarketInstance inst = path.empty() ? fixture_instance() : read_instance(path);
  const auto issues = validate_instance(inst);
  if (!issues.empty()) {
    std::ostringstream msg;
    msg << "invalid instance:";
    for (const auto& s : issues) msg << "\n  " << s;
    throw InputError(msg.str());
  }
  return inst;
}

void emit(const json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << j.dump(2) << '\n';
}

int status_code(Status s) {
  if (s == Status::optimal) return kOk;
  std::cerr << "warning: solver finished with status " << to_string(s) << '\n';
  return kSolverFailure;
}

struct ClearArgs {
  std::string mechanism = "cm";
  std::string algo = "ibcqp";
  double alpha_y = 0.5;
  int max_iters = -1;
  double tol = -1.0;
  std::string y0 = "demand";
  double gap = 1e-5;
  unsigned long seed = 42;
  long max_nodes = 10000;
  std::string node_csv;
  double cqp_tol = 1e-4;
  double delta = 2e-3;
  double delta_b = 1e-6;
  double eta = 0.0;
};

void add_clear_flags(CLI::App* cmd, ClearArgs& a) {
  cmd->add_option("--mechanism", a.mechanism, "swm or cm")->check(CLI::IsMember({"swm", "cm"}));
  cmd->add_option("--algo", a.algo, "ieqlp, ieqp, bbtree or ibcqp")
      ->check(CLI::IsMember({"ieqlp", "ieqp", "bbtree", "ibcqp"}));
  cmd->add_option("--alpha-y", a.alpha_y, "ieqlp damping weight");
  cmd->add_option("--max-iters", a.max_iters, "iteration cap (ieqlp, ieqp)");
  cmd->add_option("--tol", a.tol, "ieqlp stopping tolerance");
  cmd->add_option("--y0", a.y0, "ieqlp start")->check(CLI::IsMember({"demand", "chebyshev"}));
  cmd->add_option("--gap", a.gap, "bbtree relative gap");
  cmd->add_option("--seed", a.seed, "bbtree node-selection seed");
  cmd->add_option("--max-nodes", a.max_nodes, "bbtree node cap");
  cmd->add_option("--node-csv", a.node_csv, "bbtree node trace");
  cmd->add_option("--cqp-tol", a.cqp_tol, "ibcqp sub-problem tolerance");
  cmd->add_option("--delta", a.delta, "ieqp stopping tolerance");
  cmd->add_option("--delta-b", a.delta_b, "ieqp boundary tolerance");
  cmd->add_option("--eta", a.eta, "ieqp regularisation");
}

ClearOptions to_options(const ClearArgs& a) {
  ClearOptions o;
  o.mechanism = mechanism_from_string(a.mechanism);
  o.algorithm = algorithm_from_string(a.algo);
  o.ieqlp.alpha_y = a.alpha_y;
  o.ieqlp.start = a.y0 == "chebyshev" ? StartMode::chebyshev : StartMode::demand;
  if (a.tol > 0.0) o.ieqlp.tol = a.tol;
  if (a.max_iters > 0) {
    o.ieqlp.max_iters = a.max_iters;
    o.ieqp.max_iters = a.max_iters;
  }
  o.bbtree.gap = a.gap;
  o.bbtree.seed = a.seed;
  o.bbtree.max_nodes = a.max_nodes;
  o.bbtree.node_csv = a.node_csv;
  o.ibcqp.cqp_tol = a.cqp_tol;
  o.ieqp.delta = a.delta;
  o.ieqp.delta_b = a.delta_b;
  o.ieqp.eta = a.eta;
  return o;
}

std::vector<CmAlgorithm> parse_algos(const std::string& list) {
  std::vector<CmAlgorithm> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(algorithm_from_string(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zonal electricity market clearing: SWM and cost-minimising CM"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "write a random feasible instance (or the 3-zone fixture)");
  GeneratorSpec gs;
  bool fixture = false;
  std::string gen_out;
  gen->add_flag("--fixture", fixture, "emit the 3-zone, 6-player fixture");
  gen->add_option("--seed", gs.seed);
  gen->add_option("--zones", gs.zones);
  gen->add_option("--players-min", gs.players_min);
  gen->add_option("--players-max", gs.players_max);
  gen->add_option("--density", gs.density, "fraction of zone pairs with a line");
  gen->add_option("--q-range", gs.Q_range, "capacity range");
  gen->add_option("--demand-range", gs.demand_range);
  gen->add_option("--out", gen_out, "output file (stdout when absent)");

  // clear
  auto* clr = app.add_subcommand("clear", "clear one instance");
  std::string instance;
  std::string out;
  ClearArgs ca;
  clr->add_option("--instance", instance, "instance JSON (the fixture when absent)");
  clr->add_option("--out", out, "outcome JSON (stdout when absent)");
  add_clear_flags(clr, ca);

  // bench
  auto* bench = app.add_subcommand("bench", "SWM and CM algorithms side by side");
  std::string algos = "ieqlp,ieqp,bbtree,ibcqp";
  bench->add_option("--instance", instance);
  bench->add_option("--algos", algos, "comma-separated CM algorithms");
  bench->add_option("--out", out, "CSV algo,objective,time_ms,indicator (stdout when absent)");
  add_clear_flags(bench, ca);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "profit curve of one player over its bid slope");
  std::size_t player = 0;
  std::string profile = "I";
  std::size_t points = 20;
  std::optional<double> nu, mu, m_lo, m_hi;
  sweep->add_option("--instance", instance, "instance JSON; asks double as true costs and opponent bids");
  sweep->add_option("--player", player);
  sweep->add_option("--profile", profile, "fixture opponents: I = (1.35c0, 1.02b0), II = (2c0, b0)")
      ->check(CLI::IsMember({"I", "II"}));
  sweep->add_option("--points", points);
  sweep->add_option("--nu", nu);
  sweep->add_option("--mu", mu);
  sweep->add_option("--m-lo", m_lo);
  sweep->add_option("--m-hi", m_hi);
  sweep->add_option("--out", out, "CSV m,profit,x,v,ok (stdout when absent)");
  add_clear_flags(sweep, ca);

  // stacks
  auto* stacks = app.add_subcommand("stacks", "zonal stack curves as v,y CSV");
  std::string prefix = "stack";
  stacks->add_option("--instance", instance);
  stacks->add_option("--prefix", prefix, "files <prefix>_<zone>.csv");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "fit per-zone cost scales to target prices");
  std::string series_path, targets_path, cal_mech = "swm", method = "newton", cal_out = "calibration";
  int cal_iters = 500;
  cal->add_option("--series", series_path, "directory of per-step JSON files or one JSON array")->required();
  cal->add_option("--targets", targets_path, "CSV t,zone,price")->required();
  cal->add_option("--mechanism", cal_mech)->check(CLI::IsMember({"swm", "cm"}));
  cal->add_option("--method", method)->check(CLI::IsMember({"gd", "newton"}));
  cal->add_option("--max-iters", cal_iters);
  cal->add_option("--out", cal_out, "writes <out>_scales.json and <out>_trace.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // usage errors count as bad input
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInfeasible;
  }

  try {
    if (*gen) {
      const MarketInstance inst = fixture ? fixture_instance() : generate_instance(gs);
      emit(instance_to_json(inst), gen_out);
      return kOk;
    }
    if (*clr) {
      const MarketInstance inst = load(instance);
      const ClearOptions opts = to_options(ca);
      const ClearingOutcome res = clear(inst, opts);
      json j = outcome_to_json(inst, res);
      j["mechanism"] = ca.mechanism;
      if (opts.mechanism == Mechanism::cm && opts.algorithm == CmAlgorithm::bbtree) j["seed"] = ca.seed;
      const auto issues = check_outcome(inst, res, opts.settings);
      if (!issues.empty()) j["issues"] = issues;
      emit(j, out);
      return issues.empty() ? status_code(res.diag.status) : kSolverFailure;
    }
    if (*bench) {
      const MarketInstance inst = load(instance);
      const BenchmarkReport rep = run_benchmark(inst, parse_algos(algos), to_options(ca));
      if (out.empty()) write_benchmark_csv(rep, std::cout);
      else write_benchmark_csv(rep, std::filesystem::path(out));
      int code = kOk;
      for (const auto& r : rep.rows)
        if (!r.error.empty()) {
          std::cerr << r.algo << ": " << r.error << '\n';
          code = kSolverFailure;
        }
      for (const auto& p : rep.problems) std::cerr << "check failed: " << p << '\n';
      return code;
    }
    if (*sweep) {
      SweepSpec spec;
      MarketInstance inst = load(instance);
      if (instance.empty()) {
        spec = profile == "I" ? fixture_sweep(player, 1.35, 1.02, points) : fixture_sweep(player, 2.0, 1.0, points);
      } else {
        if (!nu || !mu || !m_lo || !m_hi) throw InputError("sweep on a custom instance needs --nu --mu --m-lo --m-hi");
        spec.player = player;
        spec.points = points;
        spec.opp_m = spec.cost_c = inst.slopes();
        spec.opp_a = spec.cost_b = inst.intercepts();
      }
      if (nu) spec.nu = *nu;
      if (mu) spec.mu = *mu;
      if (m_lo) spec.m_lo = *m_lo;
      if (m_hi) spec.m_hi = *m_hi;
      const SweepResult res = profit_sweep(inst, spec, to_options(ca));
      if (out.empty()) write_sweep_csv(res, std::cout);
      else write_sweep_csv(res, std::filesystem::path(out));
      int code = kOk;
      for (std::size_t j = 0; j < res.points.size(); ++j)
        if (!res.points[j].ok) {
          std::cerr << "point " << j << ": " << res.points[j].error << '\n';
          code = kSolverFailure;
        }
      return code;
    }
    if (*stacks) {
      for (const auto& p : write_stack_csv(load(instance), prefix)) std::cout << p.string() << '\n';
      return kOk;
    }
    if (*cal) {
      CalibrationSeries series;
      series.instances = read_instance_series(series_path);
      if (series.instances.empty()) throw InputError("empty series");
      series.targets = read_targets_csv(targets_path, series.instances.front().zones, series.instances.size());
      FitSettings fit;
      fit.method = method == "gd" ? FitMethod::gd : FitMethod::newton;
      fit.max_iters = cal_iters;
      fit.calib.mechanism = mechanism_from_string(cal_mech);
      const FitReport rep = fit_scales(series, fit);
      json j;
      j["s_c"] = std::vector<double>(rep.scales.s_c.data(), rep.scales.s_c.data() + rep.scales.s_c.size());
      j["s_b"] = std::vector<double>(rep.scales.s_b.data(), rep.scales.s_b.data() + rep.scales.s_b.size());
      j["iterations"] = rep.iterations;
      j["status"] = to_string(rep.status);
      j["message"] = rep.message;
      j["F"] = rep.F_trace.back();
      j["mae"] = std::vector<double>(rep.errors.mae.data(), rep.errors.mae.data() + rep.errors.mae.size());
      j["relative_error"] =
          std::vector<double>(rep.errors.relative.data(), rep.errors.relative.data() + rep.errors.relative.size());
      j["skipped_steps"] = rep.skipped;
      emit(j, cal_out + "_scales.json");
      std::ofstream trace(cal_out + "_trace.csv");
      if (!trace) throw std::runtime_error("cannot write " + cal_out + "_trace.csv");
      trace.precision(15);
      trace << "iter,F\n";
      for (std::size_t k = 0; k < rep.F_trace.size(); ++k) trace << k << ',' << rep.F_trace[k] << '\n';
      return status_code(rep.status);
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInfeasible;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed input: " << e.what() << '\n';
    return kInfeasible;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInfeasible;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kOk;
}
