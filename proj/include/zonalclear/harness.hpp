#pragma once

#include "zonalclear/clearing.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace zc {

struct BenchmarkRow {
  std::string algo;
  double objective = 0.0;
  double total_cost = 0.0;
  double time_ms = 0.0;
  double indicator = 0.0;
  int iterations = 0;
  Status status = Status::optimal;
  std::string error;  ///< nonempty when the run failed
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  double cm_vs_swm = 0.0;  ///< BBTree total cost over SWM total cost, 0 when either is missing
  std::vector<std::string> problems;  ///< failed cross-checks
};

/// Runs SWM and then each CM algorithm; failures are recorded per row.
BenchmarkReport run_benchmark(const MarketInstance& inst, const std::vector<CmAlgorithm>& algos,
                              const ClearOptions& opts = {});

/// One player's bid sweep. The player's slope runs over [m_lo, m_hi] with
/// a = nu - mu m; every other player bids (opp_m, opp_a).
struct SweepSpec {
  std::size_t player = 0;
  double m_lo = 0.0;
  double m_hi = 0.0;
  std::size_t points = 20;
  double nu = 0.0;
  double mu = 0.0;
  Vector opp_m;  ///< per player; the swept entry is ignored
  Vector opp_a;
  Vector cost_c;  ///< true cost 1/2 c x^2 + b x per player
  Vector cost_b;
};

/// Sweep over fixture player i with opponents at (k_m c0, k_a b0) and
/// m in [0.5 c_i, c_i].
SweepSpec fixture_sweep(std::size_t player, double k_m, double k_a, std::size_t points = 20);

struct SweepPoint {
  double m = 0.0;
  double a = 0.0;
  double profit = 0.0;
  double x = 0.0;
  double v = 0.0;
  bool ok = false;
  std::string error;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double wall_ms = 0.0;
};

/// Points run on the worker pool; results keep grid order.
SweepResult profit_sweep(const MarketInstance& inst, const SweepSpec& sweep, const ClearOptions& opts = {});

void write_benchmark_csv(const BenchmarkReport& report, std::ostream& out);
void write_benchmark_csv(const BenchmarkReport& report, const std::filesystem::path& path);
void write_sweep_csv(const SweepResult& sweep, std::ostream& out);
void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path);
/// Per-zone `v,y` breakpoints of the stack curves, one file per zone
/// named <prefix>_<zone>.csv. Returns the written paths.
std::vector<std::filesystem::path> write_stack_csv(const MarketInstance& inst, const std::filesystem::path& prefix);

}  // namespace zc
