#pragma once

#include "zonalclear/market.hpp"
#include "zonalclear/settings.hpp"

namespace zc {

/// min c'x  s.t.  A_ineq x <= b_ineq,  A_eq x = b_eq.
struct LinearProgram {
  Vector c;
  Matrix A_ineq;
  Vector b_ineq;
  Matrix A_eq;
  Vector b_eq;
};

/// min 1/2 x'Hx + g'x  s.t.  A_ineq x <= b_ineq,  A_eq x = b_eq.
struct QuadraticProgram {
  Matrix H;
  Vector g;
  Matrix A_ineq;
  Vector b_ineq;
  Matrix A_eq;
  Vector b_eq;
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iters = 200;
};

struct Solution {
  Vector x;
  double objective = 0.0;
  Status status = Status::stalled;
  int iterations = 0;
  Vector ineq_dual;  ///< >= 0, one per inequality row
  Vector eq_dual;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity = 0.0;
};

/// Dense primal-dual interior point (Mehrotra predictor-corrector).
/// Throws std::invalid_argument on inconsistent dimensions.
Solution solve_lp(const LinearProgram& lp, const SolverOptions& opts = {});

/// Same kernel with a quadratic term. Throws SolverError when H is not
/// positive semidefinite on the null space of the equality rows.
Solution solve_cqp(const QuadraticProgram& qp, const SolverOptions& opts = {});

struct Ball {
  Vector center;
  double radius = 0.0;
};

/// Largest inscribed ball of {y : M y <= b}, optionally restricted to the
/// affine set {A_eq y = b_eq}. Row weights are the row norms (projected
/// onto the affine directions when equalities are given). Throws
/// InfeasibleError for an empty region.
Ball chebyshev_center(const Polytope& P, const Matrix& A_eq = Matrix(),
                      const Vector& b_eq = Vector(), const SolverOptions& opts = {});

/// {z : ||A_s z - p_s||_2 <= r}
struct Ellipsoid {
  Matrix A_s;
  Vector p_s;
  double radius = 1.0;

  double norm_at(const Vector& z) const { return (A_s * z - p_s).norm(); }
  bool contains(const Vector& z, double tol = 0.0) const { return norm_at(z) <= radius + tol; }
  Vector center() const;
};

/// Log-barrier Hessian ellipsoid at a strictly interior point of {M z <= b}.
Ellipsoid dikin_ellipsoid(const Vector& z_center, const Matrix& M, const Vector& b);

struct BorderedSolution {
  Vector primal;
  Vector multiplier;
  double residual = 0.0;
};

/// Solves [G  M'; M  0] [z; gamma] = rhs. Throws SolverError (with a
/// condition estimate in the message) when the system is singular.
BorderedSolution bordered_kkt_solve(const Matrix& G, const Matrix& M_e, const Vector& rhs);

struct TrustRegionOptions {
  double tol = 1e-10;
  int max_iters = 100;
  bool try_interior = true;
};

struct TrustRegionResult {
  Vector z;
  double multiplier = 0.0;  ///< mu >= 0 on the ellipsoid constraint
  Vector eq_multiplier;
  Status status = Status::stalled;
  bool on_boundary = false;
  bool hard_case = false;
  int iterations = 0;
  double objective = 0.0;         ///< z' G z
  double stationarity = 0.0;      ///< relative ||2Gz + 2 mu A'(Az - p) + M'gamma||
  double complementarity = 0.0;   ///< |mu (||Az - p||^2 - r^2)|
};

/// min z' G z  s.t.  ||A_s z - p_s|| <= r,  M_e z = b_e.
TrustRegionResult trust_region_solve(const Matrix& G, const Matrix& M_e, const Vector& b_e,
                                     const Ellipsoid& ell, const TrustRegionOptions& opts = {});

}  // namespace zc
