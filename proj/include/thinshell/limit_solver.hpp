#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "thinshell/helmholtz.hpp"
#include "thinshell/surface_geometry.hpp"

namespace thinshell {

/// a_g(v1,v2) = 2 nu [ (g D_G(v1), D_G(v2)) + (g^-1 (v1.grad g), v2.grad g) ]
///              + (gamma0+gamma1)(v1,v2).
double form_a_g(const SurfaceGrid& grid, const ScalarField& g, const VecField& v1,
                const VecField& v2, double nu, double gamma0, double gamma1);

/// b_g(v1,v2,v3) = -(g (v1 x v2), grad_G v3).
double form_b_g(const SurfaceGrid& grid, const ScalarField& g, const VecField& v1,
                const VecField& v2, const VecField& v3);

enum class Scheme { ImexEuler, ImexBdf2 };

struct LimitConfig {
  const SurfaceGrid* grid = nullptr;
  ScalarField g;
  double nu = 0.1;
  double gamma0 = 0.0, gamma1 = 0.0;
  double dt = 1e-3;
  double T = 1.0;
  Scheme scheme = Scheme::ImexEuler;
  VecField v0;
  std::function<VecField(double)> forcing;  ///< may be empty (f = 0)
  bool project_f_Kg = true;
  double lin_tol = 1e-9;
  double proj_tol = 1e-10;
  double cfl_limit = 0.5;
  int output_every = 10;
};

struct LimitState {
  double t = 0;
  VecField v;
  ScalarField q;  ///< projection pressure of the last step, mean zero
  double energy = 0;
  double dissipation = 0;
  double div_residual = 0;       ///< weak ||div_G(g v)|| after projection
  double energy_residual = 0;    ///< E^{n+1}-E^n + 2 dt a_g - 2 dt (g f, v)
  double advection_defect = 0;   ///< |b_g(v,v,v)|, the antisymmetry defect scale
  std::vector<double> killing_amps;
};

struct PressureRecovery {
  ScalarField q;
  double residual_rel = 0;  ///< ||r - g grad q|| / ||r||
  int iterations = 0;
};

/// IMEX projection integrator for the weighted limit equations: viscous and
/// damping terms implicit, skew-symmetrized advection explicit, divergence
/// constraint restored by a weighted-mass-orthogonal projection (correction
/// is a plain gradient, matching the g grad q pressure force).
class LimitSolver {
 public:
  explicit LimitSolver(LimitConfig cfg);

  const LimitState& state() const { return st_; }
  const LimitConfig& config() const { return cfg_; }

  LimitState step();
  std::vector<LimitState> solve();  ///< states at the configured cadence

  PressureRecovery pressure_recover() const;
  std::vector<double> killing_amplitudes(const VecField& v) const;
  const std::vector<VecField>& killing_fields() const { return kfields_; }

  double energy(const VecField& v) const;  ///< ||g^(1/2) v||^2
  VecField forcing_at(double t) const;

 private:
  LimitConfig cfg_;
  const SurfaceGrid& g_;
  LimitState st_;
  VecField grad_g_;
  VecField e1_, e2_;  // orthonormal tangent frame
  VecField v_prev_;
  bool have_prev_ = false;
  int steps_done_ = 0;
  std::unique_ptr<EllipticSolver> proj_;
  std::vector<VecField> kfields_;  // weighted-orthonormal K_g basis
  Grid2 jacobi_;                   // preconditioner diagonal (per frame comp)
  double mass_factor_ = 1.0;       // 1 (euler) or 1.5 (bdf2), baked into jacobi_

  struct FrameVec {
    Grid2 a, b;
  };
  FrameVec to_frame(const VecField& v) const;
  VecField from_frame(const FrameVec& f) const;
  VecField viscous_covector(const VecField& v) const;
  VecField advection_covector(const VecField& v) const;
  FrameVec apply_implicit(const FrameVec& x, double mass_factor) const;
  VecField solve_implicit(const VecField& rhs_cov, double mass_factor) const;
  VecField project(VecField v, ScalarField* q_out) const;
  void cfl_check(const VecField& v) const;
  void refresh_diagnostics(const VecField& f_used);
  void build_jacobi(double mass_factor);
};

}  // namespace thinshell
