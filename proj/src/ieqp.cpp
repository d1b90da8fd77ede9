#include "zonalclear/ieqp.hpp"

#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <limits>

namespace zc {

McQpForm build_mcqp(const MarketInstance& inst, const ActiveEstimate& est, const Vector& eta) {
  McQpForm f;
  f.layout = make_layout(inst, est);
  const McLayout& L = f.layout;
  const Eigen::Index nx = L.nx(), nv = L.nv(), n = L.dim();
  const Matrix E = L.aggregation(inst);

  // v'Ex split symmetrically over the two off-diagonal blocks.
  f.G = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < nx; ++k) {
    const auto z = inst.players[L.players[static_cast<std::size_t>(k)]].zone;
    const Eigen::Index s = nx + L.zone_slot[z];
    f.G(k, s) = 0.5;
    f.G(s, k) = 0.5;
  }
  f.G_hat = f.G;
  if (eta.size() == n) f.G_hat.diagonal() += eta;
  else if (eta.size() != 0) throw std::invalid_argument("build_mcqp: eta length differs from variable count");

  const Eigen::Index nr = inst.polytope.M.rows();
  f.A_I = Matrix::Zero(3 * nx + nr, n);
  f.b_I = Vector::Zero(3 * nx + nr);
  for (Eigen::Index k = 0; k < nx; ++k) {
    const auto& p = inst.players[L.players[static_cast<std::size_t>(k)]];
    f.A_I(k, k) = p.m;
    f.A_I(k, nx + L.zone_slot[p.zone]) = -1.0;
    f.b_I(k) = -p.a;
    f.A_I(nx + k, k) = -1.0;
    f.A_I(2 * nx + k, k) = 1.0;
    f.b_I(2 * nx + k) = p.Q;
  }
  if (nr > 0) {
    f.A_I.block(3 * nx, 0, nr, nx) = inst.polytope.M * E;
    f.b_I.tail(nr) = inst.polytope.b;
  }
  f.e_bar = Matrix::Zero(1, n);
  f.e_bar.leftCols(nx).setOnes();
  f.d = inst.total_demand();
  (void)nv;
  return f;
}

namespace {

Eigen::Index matrix_rank(const Matrix& A) {
  if (A.rows() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  qr.setThreshold(1e-10);
  return qr.rank();
}

}  // namespace

ClearingOutcome run_ieqp_wr(const MarketInstance& inst, const ActiveEstimate& est,
                            const IeqpSettings& ie, const Settings& settings, IeqpTrace* trace) {
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index n0 = make_layout(inst, est).dim();
  const McQpForm f = build_mcqp(inst, est, ie.eta > 0.0 ? Vector::Constant(n0, ie.eta) : Vector());
  const McLayout& L = f.layout;
  const Eigen::Index n = L.dim();

  // Remaining inequality rows and accumulated equality rows.
  Matrix A = f.A_I;
  Vector b = f.b_I;
  Matrix Me = f.e_bar;
  Vector be = Vector::Constant(1, f.d);

  // The price block is unbounded above; cap it for the centering LP only.
  const Vector vcap = price_caps(inst, est);
  Polytope centering{Matrix::Zero(A.rows() + L.nv(), n), Vector::Zero(A.rows() + L.nv())};
  centering.M.topRows(A.rows()) = A;
  centering.b.head(A.rows()) = b;
  for (Eigen::Index s = 0; s < L.nv(); ++s) {
    centering.M(A.rows() + s, L.nx() + s) = 1.0;
    centering.b(A.rows() + s) = vcap(static_cast<Eigen::Index>(L.zones[static_cast<std::size_t>(s)]));
  }
  SolverOptions lp_opts;
  lp_opts.tol = settings.solver_tol;
  Ball ball = chebyshev_center(centering, Me, be, lp_opts);
  Vector zc = ball.center;

  auto move_rows = [&](const Vector& z, double thresh_scale) {
    const Vector slack = b - A * z;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index l = 0; l < A.rows(); ++l) {
      if (slack(l) < thresh_scale * (1.0 + std::abs(b(l)))) {
        Matrix trial(Me.rows() + 1, n);
        trial << Me, A.row(l);
        if (matrix_rank(trial) > Me.rows()) {
          Me = trial;
          Vector nb(be.size() + 1);
          nb << be, b(l);
          be = nb;
        }
      } else {
        keep.push_back(l);
      }
    }
    Matrix A2(static_cast<Eigen::Index>(keep.size()), n);
    Vector b2(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      A2.row(static_cast<Eigen::Index>(k)) = A.row(keep[k]);
      b2(static_cast<Eigen::Index>(k)) = b(keep[k]);
    }
    A = A2;
    b = b2;
  };

  if (ball.radius <= 0.0) {
    // No interior point: rows pinned at the center become equalities first.
    move_rows(zc, 1e-9);
    Polytope rest{A, b};
    ball = chebyshev_center(rest, Me, be, lp_opts);
    zc = ball.center;
    if (ball.radius <= 0.0) throw SolverError("ieqp: feasible set has no relative interior");
  }

  TrustRegionOptions tr_opts;
  tr_opts.try_interior = ie.eta > 0.0;
  Vector z_best = zc;
  double f_best = zc.dot(f.G * zc);
  Status status = Status::stalled;
  double indicator = 0.0;
  int it = 0;
  for (it = 1; it <= ie.max_iters; ++it) {
    const Ellipsoid ell = dikin_ellipsoid(zc, A, b);
    if (trace) {
      trace->centers.push_back(zc);
      trace->rows.push_back(A);
      trace->rhs.push_back(b);
    }
    TrustRegionResult tr;
    try {
      tr = trust_region_solve(f.G_hat, Me, be, ell, tr_opts);
    } catch (const SolverError&) {
      status = Status::stalled;
      break;
    }
    const Vector z = tr.z;
    const double dz = (z - zc).norm();
    indicator = dz / std::max(1e-300, zc.norm());
    const double fz = z.dot(f.G * z);
    if (trace) {
      trace->objective.push_back(fz);
      trace->equalities.push_back(static_cast<std::size_t>(Me.rows()));
      trace->max_equality_residual =
          std::max(trace->max_equality_residual, (Me * z - be).lpNorm<Eigen::Infinity>());
    }
    if (fz < f_best || it == 1) {
      f_best = fz;
      z_best = z;
    }
    if (tr.status != Status::optimal) {
      status = tr.status;
      break;
    }
    if (indicator < ie.delta) {
      status = Status::optimal;
      break;
    }
    zc = z;
    move_rows(zc, ie.delta_b);
    if (matrix_rank(Me) == n) {
      const Vector zl = Me.colPivHouseholderQr().solve(be);
      z_best = zl;
      f_best = zl.dot(f.G * zl);
      indicator = (zl - zc).norm() / std::max(1e-300, zc.norm());
      status = Status::optimal;
      break;
    }
  }
  if (it > ie.max_iters) it = ie.max_iters;

  if (trace) {
    const Vector viol = f.A_I * z_best - f.b_I;
    trace->final_violation = std::max(0.0, viol.maxCoeff());
  }
  const Vector x = polish_allocation(inst, L.expand_x(inst, z_best.head(L.nx())));
  Diagnostics diag;
  diag.algorithm = "ieqp-wr";
  diag.iterations = it;
  diag.indicator = indicator;
  diag.status = status;
  diag.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return make_outcome(inst, x, mc_objective(inst, est, x), std::move(diag), settings);
}

}  // namespace zc
