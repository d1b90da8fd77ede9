#include "zonalclear/convex.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

#include <cmath>
#include <sstream>

namespace zc {

Ball chebyshev_center(const Polytope& P, const Matrix& A_eq, const Vector& b_eq,
                      const SolverOptions& opts) {
  const Eigen::Index n = static_cast<Eigen::Index>(P.dim());
  const Eigen::Index m = static_cast<Eigen::Index>(P.rows());
  const Eigen::Index q = A_eq.rows();
  if (q > 0 && (A_eq.cols() != n || b_eq.size() != q))
    throw std::invalid_argument("chebyshev_center: equality block dimensions do not match");

  // Row weights measure distance inside the affine set.
  Matrix proj = Matrix::Identity(n, n);
  if (q > 0) {
    const Matrix pinv = A_eq.completeOrthogonalDecomposition().pseudoInverse();
    proj -= pinv * A_eq;
  }
  Vector w(m);
  for (Eigen::Index k = 0; k < m; ++k) w(k) = (proj * P.M.row(k).transpose()).norm();
  for (Eigen::Index k = 0; k < m; ++k)
    if (w(k) <= 1e-12 * (1.0 + P.M.row(k).norm())) w(k) = 0.0;

  // Affine set is a single point: no room for a ball.
  if (q > 0 && (m == 0 || w.maxCoeff() == 0.0)) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A_eq);
    if (cod.rank() == n) {
      Ball ball;
      ball.center = cod.solve(b_eq);
      const double tol = 1e-9 * (1.0 + b_eq.lpNorm<Eigen::Infinity>());
      if ((A_eq * ball.center - b_eq).lpNorm<Eigen::Infinity>() > tol ||
          (m > 0 && (P.M * ball.center - P.b).maxCoeff() > tol * (1.0 + P.b.lpNorm<Eigen::Infinity>())))
        throw InfeasibleError("chebyshev_center: empty polytope");
      return ball;
    }
  }

  LinearProgram lp;
  lp.c = Vector::Zero(n + 1);
  lp.c(n) = -1.0;
  lp.A_ineq = Matrix::Zero(m + 1, n + 1);
  lp.A_ineq.topLeftCorner(m, n) = P.M;
  lp.A_ineq.block(0, n, m, 1) = w;
  lp.A_ineq(m, n) = -1.0;
  lp.b_ineq = Vector::Zero(m + 1);
  lp.b_ineq.head(m) = P.b;
  if (q > 0) {
    lp.A_eq = Matrix::Zero(q, n + 1);
    lp.A_eq.leftCols(n) = A_eq;
    lp.b_eq = b_eq;
  }
  const Solution sol = solve_lp(lp, opts);
  if (sol.status == Status::infeasible) throw InfeasibleError("chebyshev_center: empty polytope");
  if (sol.status == Status::unbounded) throw SolverError("chebyshev_center: unbounded polytope");
  if (sol.status != Status::optimal)
    throw SolverError(std::string("chebyshev_center: LP ") + to_string(sol.status));
  Ball ball;
  ball.center = sol.x.head(n);
  ball.radius = std::max(0.0, sol.x(n));
  if (ball.radius < 1e-9 * (1.0 + ball.center.lpNorm<Eigen::Infinity>())) ball.radius = 0.0;
  return ball;
}

Vector Ellipsoid::center() const {
  return A_s.triangularView<Eigen::Upper>().solve(p_s);
}

Ellipsoid dikin_ellipsoid(const Vector& z_center, const Matrix& M, const Vector& b) {
  const Eigen::Index n = z_center.size();
  if (M.cols() != n || M.rows() != b.size())
    throw std::invalid_argument("dikin_ellipsoid: dimensions do not match");
  const Vector slack = b - M * z_center;
  for (Eigen::Index k = 0; k < slack.size(); ++k) {
    if (!(slack(k) > 0.0)) {
      std::ostringstream os;
      os << "dikin_ellipsoid: center is not strictly interior (row " << k << ", slack "
         << slack(k) << ")";
      throw std::invalid_argument(os.str());
    }
  }
  const Vector g = slack.cwiseInverse();
  const Matrix GM = g.asDiagonal() * M;
  Matrix H = GM.transpose() * GM;

  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success) {
    const double reg = 1e-12 * H.trace() / static_cast<double>(n);
    H.diagonal().array() += reg;
    llt.compute(H);
    if (llt.info() != Eigen::Success || !(reg > 0.0))
      throw SolverError("dikin_ellipsoid: barrier Hessian is singular");
  }
  Ellipsoid ell;
  ell.A_s = llt.matrixU();
  ell.p_s = ell.A_s * z_center;
  ell.radius = 1.0;
  return ell;
}

BorderedSolution bordered_kkt_solve(const Matrix& G, const Matrix& M_e, const Vector& rhs) {
  const Eigen::Index n = G.rows();
  const Eigen::Index q = M_e.rows();
  if (G.cols() != n || (q > 0 && M_e.cols() != n) || rhs.size() != n + q)
    throw std::invalid_argument("bordered_kkt_solve: dimensions do not match");
  Matrix K = Matrix::Zero(n + q, n + q);
  K.topLeftCorner(n, n) = G;
  if (q > 0) {
    K.topRightCorner(n, q) = M_e.transpose();
    K.bottomLeftCorner(q, n) = M_e;
  }
  Eigen::FullPivLU<Matrix> lu(K);
  const double scale = K.cwiseAbs().maxCoeff();
  lu.setThreshold(1e-12);
  if (!lu.isInvertible() || scale == 0.0) {
    std::ostringstream os;
    os << "bordered_kkt_solve: singular saddle-point system (rank " << lu.rank() << " of "
       << n + q << ")";
    throw SolverError(os.str());
  }
  const double rcond = lu.rcond();
  if (rcond < 1e-14) {
    std::ostringstream os;
    os << "bordered_kkt_solve: singular saddle-point system (rcond " << rcond << ")";
    throw SolverError(os.str());
  }
  Vector sol = lu.solve(rhs);
  sol += lu.solve(rhs - K * sol);
  BorderedSolution out;
  out.primal = sol.head(n);
  out.multiplier = sol.tail(q);
  out.residual = (K * sol - rhs).norm();
  return out;
}

}  // namespace zc
