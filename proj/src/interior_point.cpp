// Dense primal-dual interior point method for LPs and convex QPs.
//
// Canonical form handled by the kernel:
//   min 1/2 x'Hx + g'x   s.t.  A x + s = b, s >= 0,  B x = e.
// Rows are normalised, paired opposite inequalities are merged into
// equalities and dependent equalities are dropped before iterating.

#include "zonalclear/convex.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace zc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Canonical {
  Matrix H;
  bool quadratic = false;
  Vector g;
  Matrix A;
  Vector b;
  Matrix B;
  Vector e;
};

// Provenance of presolved rows so duals can be mapped back.
struct RowMap {
  std::vector<int> ineq_src;      // kept inequality -> original inequality
  std::vector<double> ineq_norm;
  struct EqSrc {
    bool from_pair = false;
    int first = -1;   // original eq row, or the "+" inequality of a pair
    int second = -1;  // the "-" inequality of a pair
    double norm_first = 1.0;
    double norm_second = 1.0;
  };
  std::vector<EqSrc> eq_src;
};

struct Presolved {
  Canonical prob;
  RowMap map;
  bool infeasible = false;
};

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

Presolved presolve(const Canonical& in, double tol) {
  Presolved out;
  const Eigen::Index n = in.g.size();
  out.prob.H = in.H;
  out.prob.quadratic = in.quadratic;
  out.prob.g = in.g;

  // Normalise inequality rows.
  std::vector<Vector> rows;
  std::vector<double> rhs;
  std::vector<int> src;
  std::vector<double> norms;
  for (Eigen::Index i = 0; i < in.A.rows(); ++i) {
    const double nrm = in.A.row(i).norm();
    if (nrm < 1e-14) {
      if (in.b(i) < -tol * (1.0 + std::abs(in.b(i)))) out.infeasible = true;
      continue;
    }
    rows.emplace_back(in.A.row(i).transpose() / nrm);
    rhs.push_back(in.b(i) / nrm);
    src.push_back(static_cast<int>(i));
    norms.push_back(nrm);
  }

  // Opposite pairs a'x <= b1, -a'x <= b2 with b1 + b2 ~ 0 pin a'x.
  std::vector<bool> merged(rows.size(), false);
  std::vector<Vector> eq_rows;
  std::vector<double> eq_rhs;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (merged[i]) continue;
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      if (merged[j]) continue;
      if ((rows[i] + rows[j]).lpNorm<Eigen::Infinity>() > 1e-12) continue;
      const double width = rhs[i] + rhs[j];
      const double scale = 1.0 + std::abs(rhs[i]);
      if (width < -1e-9 * scale) {
        out.infeasible = true;
      } else if (width > 1e-10 * scale) {
        continue;
      }
      merged[i] = merged[j] = true;
      eq_rows.push_back(rows[i]);
      eq_rhs.push_back(0.5 * (rhs[i] - rhs[j]));
      RowMap::EqSrc es;
      es.from_pair = true;
      es.first = src[i];
      es.second = src[j];
      es.norm_first = norms[i];
      es.norm_second = norms[j];
      out.map.eq_src.push_back(es);
      break;
    }
  }

  std::size_t kept = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) kept += merged[i] ? 0 : 1;
  out.prob.A.resize(static_cast<Eigen::Index>(kept), n);
  out.prob.b.resize(static_cast<Eigen::Index>(kept));
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (merged[i]) continue;
    out.prob.A.row(r) = rows[i].transpose();
    out.prob.b(r) = rhs[i];
    out.map.ineq_src.push_back(src[i]);
    out.map.ineq_norm.push_back(norms[i]);
    ++r;
  }

  for (Eigen::Index i = 0; i < in.B.rows(); ++i) {
    const double nrm = in.B.row(i).norm();
    if (nrm < 1e-14) {
      if (std::abs(in.e(i)) > tol * (1.0 + std::abs(in.e(i)))) out.infeasible = true;
      continue;
    }
    eq_rows.emplace_back(in.B.row(i).transpose() / nrm);
    eq_rhs.push_back(in.e(i) / nrm);
    RowMap::EqSrc es;
    es.first = static_cast<int>(i);
    es.norm_first = nrm;
    out.map.eq_src.push_back(es);
  }

  // Drop dependent equalities; inconsistent ones mean infeasibility.
  const Eigen::Index p = static_cast<Eigen::Index>(eq_rows.size());
  if (p == 0) {
    out.prob.B.resize(0, n);
    out.prob.e.resize(0);
    return out;
  }
  Matrix Bfull(p, n);
  Vector efull(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    Bfull.row(i) = eq_rows[static_cast<std::size_t>(i)].transpose();
    efull(i) = eq_rhs[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(Bfull.transpose());
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  std::vector<int> keep;
  for (Eigen::Index k = 0; k < rank; ++k) keep.push_back(qr.colsPermutation().indices()(k));
  std::sort(keep.begin(), keep.end());
  out.prob.B.resize(rank, n);
  out.prob.e.resize(rank);
  std::vector<RowMap::EqSrc> eq_src;
  for (Eigen::Index k = 0; k < rank; ++k) {
    out.prob.B.row(k) = Bfull.row(keep[static_cast<std::size_t>(k)]);
    out.prob.e(k) = efull(keep[static_cast<std::size_t>(k)]);
    eq_src.push_back(out.map.eq_src[static_cast<std::size_t>(keep[static_cast<std::size_t>(k)])]);
  }
  if (rank < p) {
    const Vector xls = out.prob.B.completeOrthogonalDecomposition().solve(out.prob.e);
    const double resid = inf_norm(Bfull * xls - efull);
    if (resid > 1e-9 * (1.0 + inf_norm(efull))) out.infeasible = true;
  }
  out.map.eq_src = std::move(eq_src);
  return out;
}

// Largest step in (0, 1] keeping v + alpha * dv >= 0.
double max_step(const Vector& v, const Vector& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  }
  return alpha;
}

struct Iterate {
  Vector x, s, lam, y;
};

struct IpmResult {
  Iterate it;
  Status status = Status::stalled;
  int iterations = 0;
  bool diverged = false;
  double rp = kInf, re = kInf, rd = kInf, gap = kInf;
};

double objective_of(const Canonical& p, const Vector& x) {
  double f = p.g.dot(x);
  if (p.quadratic) f += 0.5 * x.dot(p.H * x);
  return f;
}

// Equality-only problem: solve the KKT system directly.
IpmResult solve_equality_only(const Canonical& p, double tol) {
  const Eigen::Index n = p.g.size();
  const Eigen::Index q = p.B.rows();
  Matrix K = Matrix::Zero(n + q, n + q);
  if (p.quadratic) K.topLeftCorner(n, n) = p.H;
  K.topRightCorner(n, q) = p.B.transpose();
  K.bottomLeftCorner(q, n) = p.B;
  Vector rhs(n + q);
  rhs << -p.g, p.e;
  const Vector sol = K.completeOrthogonalDecomposition().solve(rhs);
  IpmResult res;
  res.it.x = sol.head(n);
  res.it.y = sol.tail(q);
  res.it.s.resize(0);
  res.it.lam.resize(0);
  const Vector r = K * sol - rhs;
  res.rd = inf_norm(r.head(n)) / (1.0 + inf_norm(p.g));
  res.re = q > 0 ? inf_norm(r.tail(q)) / (1.0 + inf_norm(p.e)) : 0.0;
  res.rp = 0.0;
  res.gap = 0.0;
  if (res.re > tol) {
    res.status = Status::infeasible;
  } else if (res.rd > tol) {
    res.status = Status::unbounded;
  } else {
    res.status = Status::optimal;
  }
  return res;
}

IpmResult run_ipm(const Canonical& p, const SolverOptions& opts, bool reg_by_max = false) {
  const Eigen::Index n = p.g.size();
  const Eigen::Index m = p.A.rows();
  const Eigen::Index q = p.B.rows();
  if (m == 0) return solve_equality_only(p, opts.tol);

  const double bnorm = 1.0 + inf_norm(p.b);
  const double enorm = 1.0 + inf_norm(p.e);
  const double gnorm = 1.0 + inf_norm(p.g);

  Iterate it;
  it.x = Vector::Zero(n);
  if (q > 0) it.x = p.B.completeOrthogonalDecomposition().solve(p.e);
  it.s = (p.b - p.A * it.x).cwiseMax(1.0);
  it.lam = Vector::Ones(m);
  it.y = Vector::Zero(q);

  IpmResult best;
  double best_merit = kInf;
  int tiny_steps = 0;
  int no_progress = 0;

  Eigen::PartialPivLU<Matrix> lu;
  Matrix KKT(n + q, n + q);

  for (int k = 0; k < opts.max_iters; ++k) {
    Vector Hx = p.quadratic ? Vector(p.H * it.x) : Vector::Zero(n);
    const Vector r_d = Hx + p.g + p.A.transpose() * it.lam + p.B.transpose() * it.y;
    const Vector r_p = p.A * it.x + it.s - p.b;
    const Vector r_e = p.B * it.x - p.e;
    const double mu = it.s.dot(it.lam) / static_cast<double>(m);
    const double obj = objective_of(p, it.x);

    const double rp = inf_norm(r_p) / bnorm;
    const double re = inf_norm(r_e) / enorm;
    const double rd = inf_norm(r_d) / (gnorm + inf_norm(Hx));
    const double gap = it.s.dot(it.lam) / (1.0 + std::abs(obj));
    const double merit = std::max({rp, re, rd, gap});
    if (merit < 0.9 * best_merit) {
      no_progress = 0;
    } else if (++no_progress >= 15) {
      break;
    }
    if (merit < best_merit) {
      best_merit = merit;
      best.it = it;
      best.rp = rp;
      best.re = re;
      best.rd = rd;
      best.gap = gap;
      best.iterations = k;
    }
    if (rp <= opts.tol && re <= opts.tol && rd <= opts.tol && gap <= opts.tol) {
      best.status = Status::optimal;
      best.iterations = k;
      return best;
    }
    if (inf_norm(it.x) > 1e13) {
      best.diverged = true;
      break;
    }
    if (inf_norm(it.lam) > 1e14 || inf_norm(it.y) > 1e14) break;

    const Vector W = it.lam.cwiseQuotient(it.s);
    Matrix K = p.A.transpose() * W.asDiagonal() * p.A;
    if (p.quadratic) K += p.H;
    const Vector kd = K.diagonal().cwiseAbs();
    const double reg = 1e-13 * (1.0 + (reg_by_max ? kd.maxCoeff() : kd.minCoeff()));
    KKT.setZero();
    KKT.topLeftCorner(n, n) = K;
    KKT.topLeftCorner(n, n).diagonal().array() += reg;
    KKT.topRightCorner(n, q) = p.B.transpose();
    KKT.bottomLeftCorner(q, n) = p.B;
    if (q > 0) KKT.bottomRightCorner(q, q).diagonal().array() -= reg * 1e-3;
    lu.compute(KKT);

    auto solve_dir = [&](const Vector& rsl, Vector& dx, Vector& dy, Vector& ds, Vector& dl) {
      Vector rhs(n + q);
      rhs.head(n) = -r_d - p.A.transpose() * (W.cwiseProduct(r_p) - rsl.cwiseQuotient(it.s));
      rhs.tail(q) = -r_e;
      Vector sol = lu.solve(rhs);
      // Refine against the unregularised system.
      Vector exact(n + q);
      double last = kInf;
      for (int r = 0; r < 6; ++r) {
        exact.head(n) = K * sol.head(n) + p.B.transpose() * sol.tail(q);
        exact.tail(q) = p.B * sol.head(n);
        const Vector res = rhs - exact;
        const double rn = inf_norm(res);
        if (rn >= 0.5 * last || rn <= 1e-15 * (1.0 + inf_norm(rhs))) break;
        last = rn;
        sol += lu.solve(res);
      }
      dx = sol.head(n);
      dy = sol.tail(q);
      dl = W.cwiseProduct(p.A * dx + r_p) - rsl.cwiseQuotient(it.s);
      ds = -r_p - p.A * dx;
    };

    Vector dx, dy, ds, dl;
    const Vector rsl_aff = it.s.cwiseProduct(it.lam);
    solve_dir(rsl_aff, dx, dy, ds, dl);
    const double ap_aff = max_step(it.s, ds);
    const double ad_aff = max_step(it.lam, dl);
    const double a_aff = std::min(ap_aff, ad_aff);
    const double mu_aff =
        (it.s + a_aff * ds).dot(it.lam + a_aff * dl) / static_cast<double>(m);
    const double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);

    const Vector rsl = rsl_aff + ds.cwiseProduct(dl) - Vector::Constant(m, sigma * mu);
    solve_dir(rsl, dx, dy, ds, dl);
    double ap = std::min(1.0, 0.995 * max_step(it.s, ds));
    double ad = std::min(1.0, 0.995 * max_step(it.lam, dl));
    if (p.quadratic) ap = ad = std::min(ap, ad);
    if (std::min(ap, ad) < 1e-12) {
      if (++tiny_steps >= 5) break;
    } else {
      tiny_steps = 0;
    }
    it.x += ap * dx;
    it.s += ap * ds;
    it.lam += ad * dl;
    it.y += ad * dy;
    it.s = it.s.cwiseMax(1e-300);
    it.lam = it.lam.cwiseMax(1e-300);
  }
  // Rounding can stall the last digits; a nearly converged iterate is kept.
  best.status = best_merit <= 100.0 * opts.tol ? Status::optimal : Status::stalled;
  return best;
}

// Elastic feasibility problem; always feasible and bounded below by 0.
bool phase_one_feasible(const Canonical& p, const SolverOptions& opts) {
  const Eigen::Index n = p.g.size();
  const Eigen::Index m = p.A.rows();
  const Eigen::Index q = p.B.rows();
  const Eigen::Index nv = n + 1 + 2 * q;
  Canonical ph;
  ph.quadratic = false;
  ph.g = Vector::Zero(nv);
  ph.g(n) = 1.0;
  ph.g.tail(2 * q).setOnes();
  ph.A = Matrix::Zero(m + 1 + 2 * q, nv);
  ph.b = Vector::Zero(m + 1 + 2 * q);
  ph.A.topLeftCorner(m, n) = p.A;
  ph.A.block(0, n, m, 1).setConstant(-1.0);
  ph.b.head(m) = p.b;
  ph.A(m, n) = -1.0;
  for (Eigen::Index k = 0; k < 2 * q; ++k) ph.A(m + 1 + k, n + 1 + k) = -1.0;
  ph.B = Matrix::Zero(q, nv);
  ph.B.leftCols(n) = p.B;
  ph.B.block(0, n + 1, q, q) = Matrix::Identity(q, q);
  ph.B.block(0, n + 1 + q, q, q) = -Matrix::Identity(q, q);
  ph.e = p.e;
  SolverOptions o = opts;
  o.max_iters = std::max(opts.max_iters, 100);
  const IpmResult r = run_ipm(ph, o);
  const double value = objective_of(ph, r.it.x);
  return value <= std::max(1e-7, 100.0 * opts.tol) * (1.0 + inf_norm(p.b) + inf_norm(p.e));
}

void check_dims(const Vector& c, const Matrix& A, const Vector& b, const Matrix& B,
                const Vector& e) {
  const Eigen::Index n = c.size();
  if (A.rows() != b.size() || (A.rows() > 0 && A.cols() != n))
    throw std::invalid_argument("inequality block dimensions do not match");
  if (B.rows() != e.size() || (B.rows() > 0 && B.cols() != n))
    throw std::invalid_argument("equality block dimensions do not match");
}

Solution finish(const Canonical& original, const Presolved& pre, const IpmResult& r,
                Status status) {
  Solution sol;
  const Eigen::Index n = original.g.size();
  sol.x = r.it.x.size() == n ? r.it.x : Vector::Zero(n);
  sol.status = status;
  sol.iterations = r.iterations;
  sol.objective = objective_of(original, sol.x);
  sol.ineq_dual = Vector::Zero(original.A.rows());
  sol.eq_dual = Vector::Zero(original.B.rows());
  for (std::size_t k = 0; k < pre.map.ineq_src.size() && static_cast<Eigen::Index>(k) < r.it.lam.size(); ++k) {
    sol.ineq_dual(pre.map.ineq_src[k]) = r.it.lam(static_cast<Eigen::Index>(k)) / pre.map.ineq_norm[k];
  }
  for (std::size_t k = 0; k < pre.map.eq_src.size() && static_cast<Eigen::Index>(k) < r.it.y.size(); ++k) {
    const auto& es = pre.map.eq_src[k];
    const double yk = r.it.y(static_cast<Eigen::Index>(k));
    if (es.from_pair) {
      if (yk >= 0.0) {
        sol.ineq_dual(es.first) += yk / es.norm_first;
      } else {
        sol.ineq_dual(es.second) += -yk / es.norm_second;
      }
    } else {
      sol.eq_dual(es.first) = yk / es.norm_first;
    }
  }
  // Residuals on the caller's data.
  double rp = 0.0;
  if (original.A.rows() > 0) rp = std::max(0.0, (original.A * sol.x - original.b).maxCoeff());
  if (original.B.rows() > 0) rp = std::max(rp, inf_norm(original.B * sol.x - original.e));
  sol.primal_residual = rp;
  Vector grad = original.g;
  if (original.quadratic) grad += original.H * sol.x;
  Vector rd = grad;
  if (original.A.rows() > 0) rd += original.A.transpose() * sol.ineq_dual;
  if (original.B.rows() > 0) rd += original.B.transpose() * sol.eq_dual;
  sol.dual_residual = inf_norm(rd);
  if (original.A.rows() > 0) {
    sol.complementarity =
        inf_norm((original.b - original.A * sol.x).cwiseMax(0.0).cwiseProduct(sol.ineq_dual));
  }
  return sol;
}

Solution solve_canonical(const Canonical& prob, const SolverOptions& opts) {
  const Presolved pre = presolve(prob, opts.tol);
  if (pre.infeasible) {
    IpmResult empty;
    empty.it.x = Vector::Zero(prob.g.size());
    return finish(prob, pre, empty, Status::infeasible);
  }
  if (prob.quadratic && prob.H.size() > 0) {
    // Convexity on the feasible affine hull.
    const Eigen::Index n = prob.g.size();
    Matrix N;
    if (pre.prob.B.rows() == 0) {
      N = Matrix::Identity(n, n);
    } else {
      Eigen::HouseholderQR<Matrix> qr(pre.prob.B.transpose());
      const Matrix Qfull = qr.householderQ() * Matrix::Identity(n, n);
      N = Qfull.rightCols(n - pre.prob.B.rows());
    }
    if (N.cols() > 0) {
      const Matrix Hs = 0.5 * (prob.H + prob.H.transpose());
      Eigen::SelfAdjointEigenSolver<Matrix> es(N.transpose() * Hs * N, Eigen::EigenvaluesOnly);
      const double scale = 1.0 + Hs.cwiseAbs().maxCoeff();
      if (es.eigenvalues().minCoeff() < -1e-9 * scale)
        throw SolverError("quadratic term is not positive semidefinite on the feasible affine hull");
    }
  }
  IpmResult r = run_ipm(pre.prob, opts);
  if (r.status == Status::stalled && !r.diverged) {
    // Degenerate problems sometimes need the heavier regulariser instead.
    IpmResult r2 = run_ipm(pre.prob, opts, true);
    if (r2.status == Status::optimal) r = std::move(r2);
  }
  Status status = r.status;
  if (status == Status::stalled) {
    if (!phase_one_feasible(pre.prob, opts)) {
      status = Status::infeasible;
    } else if (r.diverged) {
      status = Status::unbounded;
    }
  }
  return finish(prob, pre, r, status);
}

}  // namespace

Solution solve_lp(const LinearProgram& lp, const SolverOptions& opts) {
  check_dims(lp.c, lp.A_ineq, lp.b_ineq, lp.A_eq, lp.b_eq);
  Canonical c;
  c.quadratic = false;
  c.g = lp.c;
  const Eigen::Index n = lp.c.size();
  c.A = lp.A_ineq.rows() > 0 ? lp.A_ineq : Matrix(0, n);
  c.b = lp.b_ineq;
  c.B = lp.A_eq.rows() > 0 ? lp.A_eq : Matrix(0, n);
  c.e = lp.b_eq;
  return solve_canonical(c, opts);
}

Solution solve_cqp(const QuadraticProgram& qp, const SolverOptions& opts) {
  check_dims(qp.g, qp.A_ineq, qp.b_ineq, qp.A_eq, qp.b_eq);
  const Eigen::Index n = qp.g.size();
  if (qp.H.rows() != n || qp.H.cols() != n)
    throw std::invalid_argument("quadratic term dimensions do not match");
  Canonical c;
  c.quadratic = true;
  c.H = 0.5 * (qp.H + qp.H.transpose());
  c.g = qp.g;
  c.A = qp.A_ineq.rows() > 0 ? qp.A_ineq : Matrix(0, n);
  c.b = qp.b_ineq;
  c.B = qp.A_eq.rows() > 0 ? qp.A_eq : Matrix(0, n);
  c.e = qp.b_eq;
  return solve_canonical(c, opts);
}

}  // namespace zc
