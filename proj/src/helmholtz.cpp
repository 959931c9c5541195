#include "thinshell/helmholtz.hpp"

#include <cmath>
#include <iostream>

namespace thinshell {

ScalarField tangential_gradient_adjoint(const SurfaceGrid& g, const VecField& u) {
  require_shape(g.shape(), u.shape(), "tangential_gradient_adjoint");
  const Grid2 inv_phi2 = 1.0 / (g.phi_field().v * g.phi_field().v);
  Grid2 us = Grid2::Zero(g.ns(), g.ntheta());
  Grid2 ut = Grid2::Zero(g.ns(), g.ntheta());
  for (int c = 0; c < 3; ++c) {
    us += u.comp(c) * g.tangent_s().comp(c);
    ut += u.comp(c) * g.tangent_theta().comp(c);
  }
  return ScalarField(g.ds_adjoint(us) + g.dtheta_adjoint(Grid2(ut * inv_phi2)));
}

// ---------------------------------------------------------------------------
// EllipticSolver
// ---------------------------------------------------------------------------

EllipticSolver::EllipticSolver(const SurfaceGrid& g, const ScalarField& c, const ScalarField& z,
                               bool deflate)
    : g_(g), c_(c), z_(z), deflate_(deflate) {
  require_shape(g.shape(), c.shape(), "EllipticSolver");
  require_shape(g.shape(), z.shape(), "EllipticSolver");
  const Grid2& m = g.mass().v;
  const Grid2& phi = g.phi_field().v;
  mc_ = m * c.v;
  mct_ = m * c.v / (phi * phi);
  mz_ = m * z.v;

  // Theta-averaged coefficients for the mode-decoupled preconditioner.
  const int ns = g.ns(), M = g.ntheta() / 2;
  Eigen::VectorXd cbar(ns), zbar(ns), mw(ns), ph(ns);
  for (int k = 0; k < ns; ++k) {
    cbar[k] = c.v.row(k).mean();
    zbar[k] = z.v.row(k).mean();
    mw[k] = m.row(k).sum();  // = w_k phi_k * 2 pi
    ph[k] = phi(k, 0);
  }
  // The s-constant Nyquist-cos mode is invisible to the collocation
  // derivatives (sin(M theta_j) = 0 at the nodes), which would leave the weak
  // form with a spurious kernel. Reinstate its quadratic form with the true
  // multiplier M; the blocks below use t = m for all modes to match.
  nyq_coef_ = Eigen::VectorXd(ns);
  nyq_cos_ = Eigen::VectorXd(g.ntheta());
  for (int j = 0; j < g.ntheta(); ++j) nyq_cos_[j] = (j % 2 == 0) ? 1.0 : -1.0;
  for (int k = 0; k < ns; ++k) {
    const double mct_bar = mct_.row(k).mean();
    nyq_coef_[k] = static_cast<double>(M) * M * mct_bar;
  }

  const bool periodic = g.surface().periodic_profile();
  Eigen::MatrixXd Dp = g.ds_matrix_mode(1.0);
  Eigen::MatrixXd Dm = periodic ? Dp : g.ds_matrix_mode(-1.0);
  lu_.reserve(M + 1);
  for (int mmode = 0; mmode <= M; ++mmode) {
    const Eigen::MatrixXd& D = (periodic || mmode % 2 == 0) ? Dp : Dm;
    const double t = mmode;
    Eigen::MatrixXd A = D.transpose() * (mw.array() * cbar.array()).matrix().asDiagonal() * D;
    A.diagonal() += (mw.array() * (cbar.array() * t * t / (ph.array() * ph.array()) + zbar.array()))
                        .matrix();
    if (mmode == 0 && deflate_) {
      // rank-one shift removes the constant kernel; harmless on mean-zero data
      const double beta = (mw.array() * cbar.array()).sum() / mw.sum() / mw.sum();
      A += beta * mw * mw.transpose();
    }
    lu_.emplace_back(A);
  }
}

ScalarField EllipticSolver::apply(const ScalarField& q) const {
  VecField flux = tangential_gradient(g_, q);
  flux.x *= mc_;
  flux.y *= mc_;
  flux.z *= mc_;
  // assemble via the exact transpose so the operator stays symmetric
  const Grid2 inv_phi2 = 1.0 / (g_.phi_field().v * g_.phi_field().v);
  Grid2 us = Grid2::Zero(g_.ns(), g_.ntheta());
  Grid2 ut = Grid2::Zero(g_.ns(), g_.ntheta());
  for (int c = 0; c < 3; ++c) {
    us += flux.comp(c) * g_.tangent_s().comp(c);
    ut += flux.comp(c) * g_.tangent_theta().comp(c);
  }
  Grid2 out = g_.ds_adjoint(us) + g_.dtheta_adjoint(Grid2(ut * inv_phi2));
  out += mz_ * q.v;
  // Nyquist-mode quadratic form (see constructor)
  const Eigen::VectorXd aM = (q.v.matrix() * nyq_cos_) / g_.ntheta();
  out += ((nyq_coef_.array() * aM.array()).matrix() * nyq_cos_.transpose()).array();
  return ScalarField(out);
}

void EllipticSolver::remove_mean(ScalarField& q) const {
  const double mean = (g_.mass().v * q.v).sum() / g_.mass().v.sum();
  q.v -= mean;
}

ScalarField EllipticSolver::precondition(const ScalarField& r) const {
  Grid2 rc, rs;
  g_.theta_modes(r.v, rc, rs);
  const int M = g_.ntheta() / 2;
  Grid2 qc(g_.ns(), M + 1), qs(g_.ns(), M + 1);
  for (int m = 0; m <= M; ++m) {
    const Eigen::VectorXd solc = lu_[m].solve(rc.col(m).matrix());
    qc.col(m) = solc.array();
    if (m == 0 || m == M) {
      qs.col(m).setZero();
    } else {
      const Eigen::VectorXd sols = lu_[m].solve(rs.col(m).matrix());
      qs.col(m) = sols.array();
    }
  }
  return ScalarField(g_.theta_synthesis(qc, qs));
}

EllipticSolver::Result EllipticSolver::solve_weak(const ScalarField& b, double tol,
                                                  int max_iter) const {
  require_shape(g_.shape(), b.shape(), "solve_weak");
  if (max_iter < 0) max_iter = 10 * g_.ns() * g_.ntheta();
  ScalarField rhs = b;
  if (deflate_) {
    // project the load off the constant kernel
    const double alpha = rhs.v.sum() / g_.mass().v.sum();
    rhs.v -= alpha * g_.mass().v;
  }
  Result res;
  res.q = ScalarField::zero(g_.shape());
  ScalarField r = rhs;
  const double bnorm = std::sqrt((rhs.v * rhs.v).sum());
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  ScalarField zf = precondition(r);
  if (deflate_) remove_mean(zf);
  ScalarField p = zf;
  double rz = (r.v * zf.v).sum();
  for (int it = 0; it < max_iter; ++it) {
    const ScalarField Ap = apply(p);
    const double pAp = (p.v * Ap.v).sum();
    if (!(pAp > 0)) throw NoConvergence("CG breakdown: operator not positive definite");
    const double alpha = rz / pAp;
    res.q.v += alpha * p.v;
    r.v -= alpha * Ap.v;
    res.iterations = it + 1;
    res.rel_residual = std::sqrt((r.v * r.v).sum()) / bnorm;
    if (res.rel_residual <= tol) {
      res.converged = true;
      break;
    }
    zf = precondition(r);
    if (deflate_) remove_mean(zf);
    const double rz_new = (r.v * zf.v).sum();
    p.v = zf.v + (rz_new / rz) * p.v;
    rz = rz_new;
  }
  if (!res.converged)
    throw NoConvergence("elliptic CG did not reach tolerance in " + std::to_string(max_iter) +
                        " iterations");
  if (deflate_) remove_mean(res.q);
  return res;
}

// ---------------------------------------------------------------------------
// Named solves
// ---------------------------------------------------------------------------

PoissonReport poisson_solve(const SurfaceGrid& g, const ScalarField& eta, double tol,
                            int max_iter) {
  require_shape(g.shape(), eta.shape(), "poisson_solve");
  PoissonReport rep;
  ScalarField rhs = eta;
  const double integral = (g.mass().v * eta.v).sum();
  const double l1 = (g.mass().v * eta.v.abs()).sum();
  if (std::abs(integral) > 1e-10 * std::max(l1, 1e-300)) {
    std::cerr << "[thinshell] poisson_solve: compatibility |int eta| = " << std::abs(integral)
              << " exceeds tolerance; subtracting the mean\n";
    rep.mean_compat_warned = true;
  }
  rhs.v -= integral / g.mass().v.sum();
  EllipticSolver solver(g, ScalarField::constant(g.shape(), 1.0), ScalarField::zero(g.shape()),
                        true);
  ScalarField b(Grid2(g.mass().v * rhs.v));
  auto r = solver.solve_weak(b, tol, max_iter);
  rep.q = r.q;
  rep.rel_residual = r.rel_residual;
  rep.iterations = r.iterations;
  rep.mean_q = weighted_mean(g, rep.q);
  return rep;
}

PoissonReport weighted_poisson_solve(const SurfaceGrid& g, const ScalarField& weight,
                                     const ScalarField& xi, double tol, int max_iter) {
  require_shape(g.shape(), weight.shape(), "weighted_poisson_solve");
  if (weight.v.minCoeff() <= 0.0)
    throw NonpositiveWeight("weighted_poisson_solve requires weight >= c > 0");
  PoissonReport rep;
  ScalarField rhs = xi;
  const double integral = (g.mass().v * xi.v).sum();
  const double l1 = (g.mass().v * xi.v.abs()).sum();
  if (std::abs(integral) > 1e-10 * std::max(l1, 1e-300)) {
    std::cerr << "[thinshell] weighted_poisson_solve: compatibility violated; subtracting mean\n";
    rep.mean_compat_warned = true;
  }
  rhs.v -= integral / g.mass().v.sum();
  EllipticSolver solver(g, weight, ScalarField::zero(g.shape()), true);
  ScalarField b(Grid2(g.mass().v * rhs.v));
  auto r = solver.solve_weak(b, tol, max_iter);
  rep.q = r.q;
  rep.rel_residual = r.rel_residual;
  rep.iterations = r.iterations;
  rep.mean_q = weighted_mean(g, rep.q);
  return rep;
}

Decomposition project_weighted_solenoidal(const SurfaceGrid& grid, const ScalarField& g,
                                          const VecField& v, double tol) {
  require_shape(grid.shape(), v.shape(), "project_weighted_solenoidal");
  if (g.v.minCoeff() <= 0.0) throw NonpositiveWeight("weight must be positive");
  // q solves (g^2 grad q, grad xi) = (g v, grad xi); correction g grad q is
  // the L2-orthogonal complement part.
  const ScalarField c(Grid2(g.v * g.v));
  EllipticSolver solver(grid, c, ScalarField::zero(grid.shape()), true);
  VecField gv = scale(g, v);
  gv.x *= grid.mass().v;
  gv.y *= grid.mass().v;
  gv.z *= grid.mass().v;
  const ScalarField b = tangential_gradient_adjoint(grid, gv);
  auto r = solver.solve_weak(b, tol);
  Decomposition d;
  d.q = r.q;
  d.iterations = r.iterations;
  d.orth_residual = r.rel_residual;
  const VecField corr = scale(g, tangential_gradient(grid, r.q));
  d.solenoidal = v - corr;
  return d;
}

namespace {

Decomposition decompose_impl(const SurfaceGrid& grid, const ScalarField& g, const VecField& v,
                             double tol) {
  const ScalarField g2(Grid2(g.v * g.v));
  const ScalarField z(Grid2(g2.v * grid.H_field().v * grid.H_field().v));
  EllipticSolver solver(grid, g2, z, false);
  // rhs: (g v, grad xi) + (g (v.n) H, xi)
  VecField gv = scale(g, v);
  gv.x *= grid.mass().v;
  gv.y *= grid.mass().v;
  gv.z *= grid.mass().v;
  ScalarField b = tangential_gradient_adjoint(grid, gv);
  const ScalarField vn = dot(v, grid.normal());
  b.v += grid.mass().v * g.v * grid.H_field().v * vn.v;
  auto r = solver.solve_weak(b, tol);
  Decomposition d;
  d.q = r.q;
  d.iterations = r.iterations;
  d.orth_residual = r.rel_residual;
  VecField grad = tangential_gradient(grid, r.q);
  for (int c = 0; c < 3; ++c)
    grad.comp(c) = g.v * (grad.comp(c) + r.q.v * grid.H_field().v * grid.normal().comp(c));
  d.solenoidal = v - grad;
  return d;
}

}  // namespace

Decomposition decompose_general(const SurfaceGrid& grid, const VecField& v, double tol) {
  return decompose_impl(grid, ScalarField::constant(grid.shape(), 1.0), v, tol);
}

Decomposition decompose_general_weighted(const SurfaceGrid& grid, const ScalarField& g,
                                         const VecField& v, double tol) {
  if (g.v.minCoeff() <= 0.0) throw NonpositiveWeight("weight must be positive");
  return decompose_impl(grid, g, v, tol);
}

double hminus1_proxy_norm(const SurfaceGrid& g, const ScalarField& eta, double tol) {
  PoissonReport rep = poisson_solve(g, eta, tol);
  return l2_norm(g, tangential_gradient(g, rep.q));
}

double weak_divergence_norm(const SurfaceGrid& grid, const ScalarField& g, const VecField& v) {
  VecField gv = scale(g, v);
  gv.x *= grid.mass().v;
  gv.y *= grid.mass().v;
  gv.z *= grid.mass().v;
  const ScalarField cov = tangential_gradient_adjoint(grid, gv);
  // Riesz representative w.r.t. the diagonal mass
  const ScalarField d(Grid2(cov.v / grid.mass().v));
  return l2_norm(grid, d);
}

}  // namespace thinshell
