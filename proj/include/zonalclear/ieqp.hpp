#pragma once

#include "zonalclear/cm_common.hpp"

namespace zc {

/// mc-QP over z = (x over estimated players, v over priced zones):
/// min z' G_hat z  s.t.  A_I z <= b_I,  1'x = d.
struct McQpForm {
  McLayout layout;
  Matrix G;      ///< z'Gz = v'Ex
  Matrix G_hat;  ///< G + diag(eta)
  Matrix A_I;    ///< [D_m, -E'; -I, 0; I, 0; M_p E, 0]
  Vector b_I;    ///< [-a; 0; Q; b_p]
  Matrix e_bar;  ///< 1 x dim, ones on the x block
  double d = 0.0;
};

/// `eta` may be empty (no regularisation) or have one entry per variable.
McQpForm build_mcqp(const MarketInstance& inst, const ActiveEstimate& est, const Vector& eta = Vector());

struct IeqpSettings {
  int max_iters = 100;
  double delta = 2e-3;    ///< stop when ||z* - z_c|| < delta * ||z_c||
  double delta_b = 1e-6;  ///< rows with slack below delta_b * (1 + |b_l|) turn into equalities
  double eta = 0.0;       ///< uniform regularisation; > 0 enables the interior candidate
};

struct IeqpTrace {
  std::vector<double> objective;      ///< v'Ex at each accepted iterate
  std::vector<std::size_t> equalities;  ///< accumulated equality rows after each iteration
  std::vector<Vector> centers;  ///< ellipsoid center per iteration
  std::vector<Matrix> rows;     ///< inequality rows that generated it
  std::vector<Vector> rhs;
  double max_equality_residual = 0.0;
  double final_violation = 0.0;  ///< largest inequality violation of the returned point
};

ClearingOutcome run_ieqp_wr(const MarketInstance& inst, const ActiveEstimate& est,
                            const IeqpSettings& ie = {}, const Settings& settings = {},
                            IeqpTrace* trace = nullptr);

}  // namespace zc
