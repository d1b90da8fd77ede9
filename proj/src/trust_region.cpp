// Ellipsoidal trust-region subproblem with linear equality constraints:
//   min z'Gz  s.t.  ||A_s z - p_s|| <= r,  M_e z = b_e.
//
// The equality set is parametrised through an orthonormal null-space basis,
// and the ellipsoid is mapped onto a Euclidean ball of radius rho. The
// reduced problem min 1/2 w'Bw + g'w, ||w|| <= rho is solved in the
// eigenbasis of B with a safeguarded Newton iteration on the secular
// function phi(t) = 1/||w(t)||^2 - 1/rho^2.

#include "zonalclear/convex.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace zc {
namespace {

struct Reduced {
  Matrix T;   // z = zb + T w
  Vector zb;
  double rho = 0.0;
};

Reduced reduce(const Matrix& M_e, const Vector& b_e, const Ellipsoid& ell, double tol) {
  const Eigen::Index n = ell.A_s.cols();
  Vector z0 = Vector::Zero(n);
  Matrix N;
  if (M_e.rows() == 0) {
    N = Matrix::Identity(n, n);
  } else {
    if (M_e.cols() != n || b_e.size() != M_e.rows())
      throw std::invalid_argument("trust_region_solve: equality block dimensions do not match");
    Eigen::ColPivHouseholderQR<Matrix> rank_qr(M_e.transpose());
    rank_qr.setThreshold(1e-10);
    if (rank_qr.rank() < M_e.rows())
      throw SolverError("trust_region_solve: equality rows are rank deficient");
    z0 = M_e.completeOrthogonalDecomposition().solve(b_e);
    if ((M_e * z0 - b_e).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + b_e.lpNorm<Eigen::Infinity>()))
      throw SolverError("trust_region_solve: equality system is inconsistent");
    Eigen::HouseholderQR<Matrix> qr(M_e.transpose());
    const Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
    N = Q.rightCols(n - M_e.rows());
  }

  Reduced red;
  const Vector c0 = ell.A_s * z0 - ell.p_s;
  if (N.cols() == 0) {
    red.T = Matrix::Zero(n, 0);
    red.zb = z0;
    const double excess = c0.norm() - ell.radius;
    if (excess > tol * (1.0 + ell.radius))
      throw SolverError("trust_region_solve: ellipsoid does not meet the equality set");
    red.rho = 0.0;
    return red;
  }
  const Matrix C = ell.A_s * N;
  Eigen::HouseholderQR<Matrix> cqr(C);
  const Eigen::Index k = N.cols();
  const Matrix Qc = cqr.householderQ() * Matrix::Identity(C.rows(), k);
  const Matrix Rc = cqr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Vector qv = Qc.transpose() * c0;
  const double perp2 = std::max(0.0, c0.squaredNorm() - qv.squaredNorm());
  const double rho2 = ell.radius * ell.radius - perp2;
  if (rho2 < -tol * (1.0 + ell.radius * ell.radius))
    throw SolverError("trust_region_solve: ellipsoid does not meet the equality set");
  red.rho = std::sqrt(std::max(0.0, rho2));
  // T = N Rc^{-1}
  red.T = Rc.transpose().triangularView<Eigen::Lower>().solve(N.transpose()).transpose();
  red.zb = z0 - red.T * qv;
  return red;
}

}  // namespace

TrustRegionResult trust_region_solve(const Matrix& G, const Matrix& M_e, const Vector& b_e,
                                     const Ellipsoid& ell, const TrustRegionOptions& opts) {
  const Eigen::Index n = ell.A_s.cols();
  if (G.rows() != n || G.cols() != n || ell.p_s.size() != n)
    throw std::invalid_argument("trust_region_solve: dimensions do not match");
  const Matrix Gs = 0.5 * (G + G.transpose());
  const Reduced red = reduce(M_e, b_e, ell, opts.tol);
  const Eigen::Index k = red.T.cols();

  TrustRegionResult res;
  res.status = Status::optimal;
  Vector w = Vector::Zero(k);
  double theta = 0.0;  // multiplier of 1/2 (||w||^2 - rho^2)

  if (k > 0) {
    const Matrix B = 2.0 * red.T.transpose() * Gs * red.T;
    const Vector g = 2.0 * red.T.transpose() * Gs * red.zb;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (B + B.transpose()));
    const Vector lam = es.eigenvalues();
    const Matrix V = es.eigenvectors();
    const Vector gt = V.transpose() * g;
    const double rho = red.rho;
    const double lmin = lam(0);
    const double bscale = 1.0 + lam.cwiseAbs().maxCoeff();
    const double gscale = 1.0 + g.norm();

    auto wnorm2 = [&](double t) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < k; ++i) s += gt(i) * gt(i) / ((lam(i) + t) * (lam(i) + t));
      return s;
    };
    auto w_of = [&](double t) {
      Vector wt(k);
      for (Eigen::Index i = 0; i < k; ++i) wt(i) = -gt(i) / (lam(i) + t);
      return Vector(V * wt);
    };

    bool interior = false;
    if (opts.try_interior && lmin > 1e-12 * bscale) {
      // Interior stationary point from the bordered system.
      Vector rhs(n + M_e.rows());
      rhs.head(n).setZero();
      if (M_e.rows() > 0) rhs.tail(M_e.rows()) = b_e;
      try {
        const BorderedSolution bs = bordered_kkt_solve(2.0 * Gs, M_e, rhs);
        if (ell.norm_at(bs.primal) <= ell.radius * (1.0 + opts.tol)) {
          res.z = bs.primal;
          res.eq_multiplier = bs.multiplier;
          res.multiplier = 0.0;
          res.on_boundary = false;
          interior = true;
        }
      } catch (const SolverError&) {
        interior = false;
      }
    }

    if (!interior) {
      res.on_boundary = true;
      // Components along the bottom eigenspace decide the hard case.
      const double deg_tol = 1e-10 * bscale;
      double g_low = 0.0;
      for (Eigen::Index i = 0; i < k; ++i)
        if (lam(i) <= lmin + deg_tol) g_low = std::max(g_low, std::abs(gt(i)));
      const double t_low = std::max(0.0, -lmin);
      bool hard = false;
      if (rho <= 0.0) {
        // Ellipsoid touches the equality set in a single point.
        hard = true;
        w.setZero();
        theta = 0.0;
      } else if (lmin <= 0.0 && g_low <= 1e-12 * gscale) {
        Vector wt = Vector::Zero(k);
        for (Eigen::Index i = 0; i < k; ++i)
          if (lam(i) > lmin + deg_tol) wt(i) = -gt(i) / (lam(i) + t_low);
        if (wt.squaredNorm() < rho * rho) {
          // Multiplier sits at the bottom eigenvalue; fill up with the eigenvector.
          hard = true;
          wt(0) += std::sqrt(rho * rho - wt.squaredNorm());
          w = V * wt;
          theta = t_low;
          res.hard_case = true;
        }
      }
      if (!hard) {
        // Newton on phi(t) = 1/||w(t)||^2 - 1/rho^2, increasing on (t_low, inf).
        const double inv_r2 = 1.0 / (rho * rho);
        auto phi = [&](double t) { return 1.0 / wnorm2(t) - inv_r2; };
        double lo = t_low;
        double hi = std::max(1.0, t_low + 1.0);
        while (!(phi(hi) > 0.0) && hi < 1e300) hi *= 2.0;
        if (lmin > 0.0 && !(phi(0.0) < 0.0)) {
          // Unconstrained minimiser already feasible; the boundary is not active.
          hi = 0.0;
          lo = 0.0;
        }
        double t = hi;
        int it = 0;
        for (; it < opts.max_iters && hi > lo; ++it) {
          const double s2 = wnorm2(t);
          double ds2 = 0.0;
          for (Eigen::Index i = 0; i < k; ++i) {
            const double den = lam(i) + t;
            ds2 += -2.0 * gt(i) * gt(i) / (den * den * den);
          }
          const double f = 1.0 / s2 - inv_r2;
          if (std::abs(std::sqrt(s2) - rho) <= 1e-15 * (1.0 + rho)) break;
          if (f > 0.0) hi = t; else lo = t;
          if (hi - lo <= 1e-15 * (1.0 + hi)) break;
          const double df = -ds2 / (s2 * s2);
          double next = t - f / df;
          if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
          if (std::abs(next - t) <= 1e-16 * (1.0 + std::abs(t))) {
            t = next;
            break;
          }
          t = next;
        }
        res.iterations = it;
        theta = t;
        w = w_of(theta);
        if (theta > 0.0 && std::abs(w.norm() - rho) > 1e-8 * (1.0 + rho)) res.status = Status::stalled;
        if (theta == 0.0) res.on_boundary = false;
      }
      res.z = red.zb + red.T * w;
      res.multiplier = 0.5 * theta;
    }
  } else {
    res.z = red.zb;
    res.multiplier = 0.0;
    res.on_boundary = false;
  }

  // KKT bookkeeping: 2Gz + 2 mu A'(Az - p) + M'gamma = 0.
  const Vector grad =
      2.0 * Gs * res.z + 2.0 * res.multiplier * ell.A_s.transpose() * (ell.A_s * res.z - ell.p_s);
  if (M_e.rows() > 0) {
    if (res.eq_multiplier.size() != M_e.rows())
      res.eq_multiplier = M_e.transpose().completeOrthogonalDecomposition().solve(-grad);
  } else {
    res.eq_multiplier.resize(0);
  }
  Vector stat = grad;
  if (M_e.rows() > 0) stat += M_e.transpose() * res.eq_multiplier;
  const double scale = 1.0 + (2.0 * Gs * res.z).norm() +
                       (2.0 * res.multiplier * ell.A_s.transpose() * (ell.A_s * res.z - ell.p_s)).norm();
  res.stationarity = stat.norm() / scale;
  const double nr = ell.norm_at(res.z);
  res.complementarity = std::abs(res.multiplier * (nr * nr - ell.radius * ell.radius));
  res.objective = res.z.dot(Gs * res.z);
  return res;
}

}  // namespace zc
