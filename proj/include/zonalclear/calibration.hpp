#pragma once

#include "zonalclear/clearing.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace zc {

/// Per-zone multipliers applied to the asks: m -> s_c m, a -> s_b a.
struct CostScales {
  Vector s_c;
  Vector s_b;

  static CostScales ones(std::size_t zones);
  /// Stacked as (s_c, s_b).
  Vector stacked() const;
  static CostScales from_stacked(const Vector& s);
};

struct CalibrationSeries {
  std::vector<MarketInstance> instances;
  std::vector<Vector> targets;  ///< target zonal prices per step

  std::size_t steps() const { return instances.size(); }
  /// Throws std::invalid_argument on length or zone-count mismatch, or
  /// an invalid instance.
  void check() const;
};

/// Base cost series k(t) of one technology. The ask equals k at quantity
/// f Q and grows with factor n across the capacity.
struct FuelCostSpec {
  std::vector<double> k;
  double f = 0.5;
  double n = 0.2;
};

/// Technologies with a known n (and k when it does not follow a fuel price):
/// gas, coal, nuclear, wind, solar, hydro_ror. `k` fills the series for
/// fuel-driven types; constant types ignore it unless it is nonempty.
FuelCostSpec fuel_type(const std::string& type, std::vector<double> k = {});

struct OrderCoefficients {
  double b = 0.0;  ///< intercept
  double c = 0.0;  ///< slope
};

/// A one-entry k series applies to every t. Throws std::invalid_argument
/// unless 0 < f < 1, 0 <= n <= 1, Q > 0 and t is in range.
OrderCoefficients orders_from_fuel(const FuelCostSpec& spec, double Q, std::size_t t);

struct CalibrationOptions {
  Mechanism mechanism = Mechanism::swm;
  CmAlgorithm algorithm = CmAlgorithm::ibcqp;
  Settings settings;
};

MarketInstance apply_scales(const MarketInstance& inst, const CostScales& s);

/// Clearing of one step at given scales.
struct StepResult {
  bool ok = false;
  std::string error;
  Vector v;
  std::vector<long> marginal;  ///< marginal player per zone, -1 when the zone is empty
  Vector x;
};

struct ObjectiveGradient {
  double F = 0.0;
  Vector grad;  ///< stacked like CostScales::stacked()
  std::vector<StepResult> steps;
  std::vector<std::size_t> skipped;  ///< steps whose clearing failed
};

/// F = (1/N_T) sum_t sum_z (v_zt - P_zt)^2 over the steps that cleared, and
/// its gradient with the marginal player and its quantity held fixed.
ObjectiveGradient objective_and_gradient(const CalibrationSeries& series, const CostScales& s,
                                         const CalibrationOptions& opts = {});

/// Gauss-Newton 2x2 blocks per zone (order s_c, s_b), scaled by 2/N_T.
std::vector<Eigen::Matrix2d> hessian_blocks(const CalibrationSeries& series, const ObjectiveGradient& eval);
std::vector<Eigen::Matrix2d> hessian_blocks(const CalibrationSeries& series, const CostScales& s,
                                            const CalibrationOptions& opts = {});

enum class FitMethod { gd, newton };

struct FitSettings {
  FitMethod method = FitMethod::newton;
  int max_iters = 500;
  double grad_tol = 1e-10;
  double min_scale = 1e-6;  ///< projection floor for the scales
  CalibrationOptions calib;
};

struct ErrorMetrics {
  Vector mae;       ///< mean |v - P| per zone
  Vector relative;  ///< mae over mean target
};

ErrorMetrics error_metrics(const CalibrationSeries& series, const std::vector<StepResult>& steps);

struct FitReport {
  CostScales scales;
  std::vector<double> F_trace;  ///< F at the start and after each accepted step
  int iterations = 0;
  Status status = Status::optimal;
  std::string message;
  ErrorMetrics errors;
  std::vector<std::size_t> skipped;
};

FitReport fit_scales(const CalibrationSeries& series, const FitSettings& fit = {});

/// CSV with header `t,zone,price`; zone is an index or a zone label.
/// Throws InputError on unreadable or malformed files.
std::vector<Vector> read_targets_csv(const std::filesystem::path& path, const std::vector<std::string>& zones,
                                     std::size_t steps);

}  // namespace zc
