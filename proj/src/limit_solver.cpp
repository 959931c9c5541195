#include "thinshell/limit_solver.hpp"

#include <cmath>

namespace thinshell {

double form_a_g(const SurfaceGrid& grid, const ScalarField& g, const VecField& v1,
                const VecField& v2, double nu, double gamma0, double gamma1) {
  const MatrixField d1 = strain_rate(grid, v1);
  const MatrixField d2 = strain_rate(grid, v2);
  double strain = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      strain += (grid.mass().v * g.v * d1.m[i][j] * d2.m[i][j]).sum();
  const VecField gg = tangential_gradient(grid, g);
  const ScalarField w1 = dot(v1, gg);
  const ScalarField w2 = dot(v2, gg);
  const double graddot = (grid.mass().v * w1.v * w2.v / g.v).sum();
  return 2.0 * nu * (strain + graddot) + (gamma0 + gamma1) * l2_inner(grid, v1, v2);
}

double form_b_g(const SurfaceGrid& grid, const ScalarField& g, const VecField& v1,
                const VecField& v2, const VecField& v3) {
  const MatrixField grad3 = tangential_gradient_matrix(grid, v3);
  Grid2 acc = Grid2::Zero(grid.ns(), grid.ntheta());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) acc += v1.comp(i) * v2.comp(j) * grad3.m[i][j];
  return -(grid.mass().v * g.v * acc).sum();
}

// ---------------------------------------------------------------------------

LimitSolver::LimitSolver(LimitConfig cfg) : cfg_(std::move(cfg)), g_(*cfg_.grid) {
  require_shape(g_.shape(), cfg_.g.shape(), "LimitSolver weight");
  if (cfg_.g.v.minCoeff() <= 0.0) throw NonpositiveWeight("limit solver weight g must be > 0");
  if (!(cfg_.dt > 0)) throw ConfigError("limit solver needs dt > 0");
  grad_g_ = tangential_gradient(g_, cfg_.g);

  e1_ = g_.tangent_s();
  e2_ = g_.tangent_theta();
  for (int c = 0; c < 3; ++c) e2_.comp(c) /= g_.phi_field().v;

  proj_ = std::make_unique<EllipticSolver>(g_, cfg_.g, ScalarField::zero(g_.shape()), true);

  // K_g basis: tangential rigid fields with w . grad g = 0, orthonormal in
  // the weighted inner product.
  const Eigen::Matrix<double, 6, 6> G = rigid_gram(g_, g_.normal()) + rigid_gram(g_, grad_g_);
  Eigen::Matrix<double, 6, 1> eigs;
  for (const RigidField& w : rigid_nullspace(G, 1e-8, eigs)) {
    VecField wf = g_.sample_vec([&](const Vec3& y) { return w.eval(y); });
    for (const VecField& prev : kfields_) {
      const double c = (g_.mass().v * cfg_.g.v *
                        (wf.x * prev.x + wf.y * prev.y + wf.z * prev.z))
                           .sum();
      wf = wf - c * prev;
    }
    const double nrm =
        std::sqrt((g_.mass().v * cfg_.g.v * (wf.x * wf.x + wf.y * wf.y + wf.z * wf.z)).sum());
    if (nrm > 1e-10) kfields_.push_back((1.0 / nrm) * wf);
  }

  mass_factor_ = 1.0;
  build_jacobi(mass_factor_);

  // initial state: v0 projected weighted-solenoidal at load
  st_.t = 0.0;
  st_.q = ScalarField::zero(g_.shape());
  VecField v0 = cfg_.v0.shape() == g_.shape() ? cfg_.v0 : VecField::zero(g_.shape());
  v0 = project_tangent(g_, v0);
  st_.v = project(v0, nullptr);
  refresh_diagnostics(forcing_at(0.0));
  st_.energy_residual = 0.0;
}

void LimitSolver::build_jacobi(double mass_factor) {
  // Diagonal estimate of mg*mass_factor + dt*(2 nu elliptic + gamma mass).
  const Grid2& m = g_.mass().v;
  const Grid2& phi = g_.phi_field().v;
  const double gam = cfg_.gamma0 + cfg_.gamma1;
  const Grid2 mg = m * cfg_.g.v;
  Grid2 ell = g_.ds_transpose_diag(Grid2(mg)) + mg * g_.dtheta_column_sq() / (phi * phi);
  jacobi_ = mass_factor * mg + cfg_.dt * (gam * m + 2.0 * cfg_.nu * ell);
}

LimitSolver::FrameVec LimitSolver::to_frame(const VecField& v) const {
  FrameVec f;
  f.a = v.x * e1_.x + v.y * e1_.y + v.z * e1_.z;
  f.b = v.x * e2_.x + v.y * e2_.y + v.z * e2_.z;
  return f;
}

VecField LimitSolver::from_frame(const FrameVec& f) const {
  VecField v(g_.ns(), g_.ntheta());
  for (int c = 0; c < 3; ++c) v.comp(c) = f.a * e1_.comp(c) + f.b * e2_.comp(c);
  return v;
}

VecField LimitSolver::viscous_covector(const VecField& v) const {
  // weak form of 2 nu[(g D(v), D(eta)) + (g^-1 (v.grad g), eta.grad g)]
  //            + (gamma0+gamma1)(v, eta)
  const MatrixField D = strain_rate(g_, v);
  VecField cov(g_.ns(), g_.ntheta());
  for (int j = 0; j < 3; ++j) {
    VecField u(g_.ns(), g_.ntheta());
    for (int i = 0; i < 3; ++i) u.comp(i) = g_.mass().v * cfg_.g.v * D.m[i][j];
    cov.comp(j) = tangential_gradient_adjoint(g_, u).v;
  }
  const ScalarField vdg = dot(v, grad_g_);
  const double gam = cfg_.gamma0 + cfg_.gamma1;
  for (int c = 0; c < 3; ++c) {
    cov.comp(c) = 2.0 * cfg_.nu *
                      (cov.comp(c) + g_.mass().v * vdg.v / cfg_.g.v * grad_g_.comp(c)) +
                  gam * g_.mass().v * v.comp(c);
  }
  return cov;
}

VecField LimitSolver::advection_covector(const VecField& v) const {
  // skew form 1/2 [ b_g(v,v,eta) - b_g(v,eta,v) ]
  VecField cov(g_.ns(), g_.ntheta());
  for (int j = 0; j < 3; ++j) {
    VecField u(g_.ns(), g_.ntheta());
    for (int i = 0; i < 3; ++i) u.comp(i) = g_.mass().v * cfg_.g.v * v.comp(i) * v.comp(j);
    cov.comp(j) = -tangential_gradient_adjoint(g_, u).v;  // from b_g(v,v,eta)
  }
  const MatrixField grad = tangential_gradient_matrix(g_, v);
  VecField conv(g_.ns(), g_.ntheta());  // (v . grad_G) v
  for (int j = 0; j < 3; ++j) {
    Grid2 acc = Grid2::Zero(g_.ns(), g_.ntheta());
    for (int i = 0; i < 3; ++i) acc += v.comp(i) * grad.m[i][j];
    conv.comp(j) = acc;
  }
  for (int c = 0; c < 3; ++c)
    cov.comp(c) = 0.5 * (cov.comp(c) + g_.mass().v * cfg_.g.v * conv.comp(c));
  return cov;
}

LimitSolver::FrameVec LimitSolver::apply_implicit(const FrameVec& x, double mass_factor) const {
  const VecField v = from_frame(x);
  VecField cov = viscous_covector(v);
  for (int c = 0; c < 3; ++c)
    cov.comp(c) = mass_factor * g_.mass().v * cfg_.g.v * v.comp(c) + cfg_.dt * cov.comp(c);
  return to_frame(cov);
}

VecField LimitSolver::solve_implicit(const VecField& rhs_cov, double mass_factor) const {
  const FrameVec b = to_frame(rhs_cov);
  const double bnorm = std::sqrt((b.a * b.a + b.b * b.b).sum());
  FrameVec x{Grid2::Zero(g_.ns(), g_.ntheta()), Grid2::Zero(g_.ns(), g_.ntheta())};
  if (bnorm == 0.0) return from_frame(x);
  FrameVec r = b;
  auto precond = [&](const FrameVec& rr) {
    return FrameVec{rr.a / jacobi_, rr.b / jacobi_};
  };
  FrameVec z = precond(r);
  FrameVec p = z;
  double rz = (r.a * z.a + r.b * z.b).sum();
  const int max_iter = 50000;
  for (int it = 0; it < max_iter; ++it) {
    const FrameVec Ap = apply_implicit(p, mass_factor);
    const double pAp = (p.a * Ap.a + p.b * Ap.b).sum();
    if (!(pAp > 0)) throw LinearSolveFailure("implicit viscous solve: CG breakdown");
    const double alpha = rz / pAp;
    x.a += alpha * p.a;
    x.b += alpha * p.b;
    r.a -= alpha * Ap.a;
    r.b -= alpha * Ap.b;
    const double rnorm = std::sqrt((r.a * r.a + r.b * r.b).sum());
    if (rnorm <= cfg_.lin_tol * bnorm) return from_frame(x);
    z = precond(r);
    const double rz_new = (r.a * z.a + r.b * z.b).sum();
    p.a = z.a + (rz_new / rz) * p.a;
    p.b = z.b + (rz_new / rz) * p.b;
    rz = rz_new;
  }
  throw LinearSolveFailure("implicit viscous solve did not converge");
}

VecField LimitSolver::project(VecField v, ScalarField* q_out) const {
  // q solves (g grad q, grad xi) = (g v, grad xi); correction is grad q.
  VecField gv = scale(cfg_.g, v);
  gv.x *= g_.mass().v;
  gv.y *= g_.mass().v;
  gv.z *= g_.mass().v;
  const ScalarField b = tangential_gradient_adjoint(g_, gv);
  auto r = proj_->solve_weak(b, cfg_.proj_tol);
  const VecField corr = tangential_gradient(g_, r.q);
  if (q_out) *q_out = r.q;
  return v - corr;
}

void LimitSolver::cfl_check(const VecField& v) const {
  const double vmax = v.max_norm();
  const double h = std::min(g_.surface().length() / g_.ns(),
                            2.0 * M_PI * g_.phi_field().v.maxCoeff() / g_.ntheta());
  if (vmax * cfg_.dt / h > cfg_.cfl_limit)
    throw CFLViolation("explicit advection exceeds the CFL bound max|v| dt/h");
}

VecField LimitSolver::forcing_at(double t) const {
  if (!cfg_.forcing) return VecField::zero(g_.shape());
  VecField f = project_tangent(g_, cfg_.forcing(t));
  if (cfg_.project_f_Kg && cfg_.gamma0 == 0.0 && cfg_.gamma1 == 0.0 && !kfields_.empty()) {
    for (const VecField& w : kfields_) {
      const double c = (g_.mass().v * cfg_.g.v * (f.x * w.x + f.y * w.y + f.z * w.z)).sum();
      f = f - c * w;
    }
  }
  return f;
}

double LimitSolver::energy(const VecField& v) const {
  return (g_.mass().v * cfg_.g.v * (v.x * v.x + v.y * v.y + v.z * v.z)).sum();
}

std::vector<double> LimitSolver::killing_amplitudes(const VecField& v) const {
  std::vector<double> amps;
  amps.reserve(kfields_.size());
  for (const VecField& w : kfields_)
    amps.push_back((g_.mass().v * cfg_.g.v * (v.x * w.x + v.y * w.y + v.z * w.z)).sum());
  return amps;
}

void LimitSolver::refresh_diagnostics(const VecField& f_used) {
  st_.energy = energy(st_.v);
  st_.dissipation = form_a_g(g_, cfg_.g, st_.v, st_.v, cfg_.nu, cfg_.gamma0, cfg_.gamma1);
  st_.div_residual = weak_divergence_norm(g_, cfg_.g, st_.v);
  st_.advection_defect = std::abs(form_b_g(g_, cfg_.g, st_.v, st_.v, st_.v));
  st_.killing_amps = killing_amplitudes(st_.v);
  (void)f_used;
}

LimitState LimitSolver::step() {
  cfl_check(st_.v);
  const double E_old = st_.energy;
  const VecField f_new = forcing_at(st_.t + cfg_.dt);
  const Grid2 mg = g_.mass().v * cfg_.g.v;

  VecField rhs(g_.ns(), g_.ntheta());
  double mass_factor = 1.0;
  const VecField adv_n = advection_covector(st_.v);
  if (cfg_.scheme == Scheme::ImexBdf2 && have_prev_) {
    mass_factor = 1.5;
    const VecField adv_p = advection_covector(v_prev_);
    for (int c = 0; c < 3; ++c)
      rhs.comp(c) = mg * (2.0 * st_.v.comp(c) - 0.5 * v_prev_.comp(c)) +
                    cfg_.dt * (mg * f_new.comp(c) - 2.0 * adv_n.comp(c) + adv_p.comp(c));
  } else {
    for (int c = 0; c < 3; ++c)
      rhs.comp(c) = mg * st_.v.comp(c) + cfg_.dt * (mg * f_new.comp(c) - adv_n.comp(c));
  }
  if (mass_factor != mass_factor_) {
    mass_factor_ = mass_factor;
    const_cast<LimitSolver*>(this)->build_jacobi(mass_factor);
  }

  VecField vtilde = solve_implicit(rhs, mass_factor);
  ScalarField q;
  VecField v_new = project(std::move(vtilde), &q);

  v_prev_ = st_.v;
  have_prev_ = true;
  st_.v = std::move(v_new);
  st_.q = ScalarField(Grid2(q.v / cfg_.dt));
  st_.t += cfg_.dt;
  ++steps_done_;
  refresh_diagnostics(f_new);
  const double fv = (mg * (f_new.x * st_.v.x + f_new.y * st_.v.y + f_new.z * st_.v.z)).sum();
  st_.energy_residual = st_.energy - E_old + 2.0 * cfg_.dt * st_.dissipation - 2.0 * cfg_.dt * fv;
  return st_;
}

std::vector<LimitState> LimitSolver::solve() {
  std::vector<LimitState> out;
  out.push_back(st_);
  const long nsteps = std::lround(cfg_.T / cfg_.dt);
  for (long n = 0; n < nsteps; ++n) {
    step();
    if ((n + 1) % std::max(1, cfg_.output_every) == 0 || n + 1 == nsteps) out.push_back(st_);
  }
  return out;
}

PressureRecovery LimitSolver::pressure_recover() const {
  // r = g f - g dv/dt - A_g v - g (cov. derivative of v along v)
  const VecField f = forcing_at(st_.t);
  VecField dvdt = VecField::zero(g_.shape());
  if (have_prev_) {
    dvdt = st_.v - v_prev_;
    for (int c = 0; c < 3; ++c) dvdt.comp(c) /= cfg_.dt;
  }
  // A_g v = -2 nu { P div_G[g D_G(v)] - (1/g)(grad g x grad g) v } + gamma v
  MatrixField gD = strain_rate(g_, st_.v);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) gD.m[i][j] *= cfg_.g.v;
  const VecField divgD = project_tangent(g_, tangential_divergence(g_, gD));
  const ScalarField vdg = dot(st_.v, grad_g_);
  const double gam = cfg_.gamma0 + cfg_.gamma1;
  VecField Agv(g_.ns(), g_.ntheta());
  for (int c = 0; c < 3; ++c)
    Agv.comp(c) = -2.0 * cfg_.nu * (divgD.comp(c) - vdg.v / cfg_.g.v * grad_g_.comp(c)) +
                  gam * st_.v.comp(c);

  const VecField conv = covariant_derivative(g_, st_.v, st_.v);
  VecField r(g_.ns(), g_.ntheta());
  for (int c = 0; c < 3; ++c)
    r.comp(c) = cfg_.g.v * f.comp(c) - cfg_.g.v * dvdt.comp(c) - Agv.comp(c) -
                cfg_.g.v * conv.comp(c);

  VecField mr = r;
  mr.x *= g_.mass().v;
  mr.y *= g_.mass().v;
  mr.z *= g_.mass().v;
  const ScalarField b = tangential_gradient_adjoint(g_, mr);
  auto sol = proj_->solve_weak(b, cfg_.proj_tol);
  PressureRecovery out;
  out.q = sol.q;
  out.iterations = sol.iterations;
  const VecField resid = r - scale(cfg_.g, tangential_gradient(g_, sol.q));
  out.residual_rel = l2_norm(g_, resid) / std::max(l2_norm(g_, r), 1e-300);
  return out;
}

}  // namespace thinshell
