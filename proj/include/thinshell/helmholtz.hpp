#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "thinshell/surface_calculus.hpp"

namespace thinshell {

/// Adjoint (plain transpose) of the discrete tangential gradient:
/// maps a 3-vector nodal field u to ds^T(u.t_s) + dth^T(u.t_th / phi^2).
ScalarField tangential_gradient_adjoint(const SurfaceGrid& g, const VecField& u);

/// Weak elliptic operator a(q,xi) = int c grad_G q . grad_G xi + z q xi dH^2
/// on the collocation grid, solved by CG with mean-value deflation (when
/// z == 0) and a theta-mode-decoupled banded preconditioner built from
/// theta-averaged coefficients (exact for theta-independent coefficients).
class EllipticSolver {
 public:
  EllipticSolver(const SurfaceGrid& g, const ScalarField& c, const ScalarField& z, bool deflate);

  struct Result {
    ScalarField q;
    int iterations = 0;
    double rel_residual = 0;
    bool converged = false;
  };

  /// Solves A q = b for a nodal covector b (already mass-weighted); throws
  /// NoConvergence when the tolerance is not met within max_iter.
  Result solve_weak(const ScalarField& b, double tol = 1e-10, int max_iter = -1) const;

  ScalarField apply(const ScalarField& q) const;

 private:
  const SurfaceGrid& g_;
  ScalarField c_, z_;
  bool deflate_;
  Grid2 mc_, mct_, mz_;  // mass*c, mass*c/phi^2, mass*z
  Eigen::VectorXd nyq_coef_, nyq_cos_;
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lu_;  // per theta mode

  ScalarField precondition(const ScalarField& r) const;
  void remove_mean(ScalarField& q) const;
};

struct PoissonReport {
  ScalarField q;
  double rel_residual = 0;
  int iterations = 0;
  double mean_q = 0;
  bool mean_compat_warned = false;
};

/// -lap_G q = eta weakly, int q = 0. Enforces the compatibility condition by
/// subtracting the mean of eta (with a logged warning when it is violated).
PoissonReport poisson_solve(const SurfaceGrid& g, const ScalarField& eta, double tol = 1e-10,
                            int max_iter = -1);

/// -div_G(g grad_G q) = xi weakly, int q = 0. Throws NonpositiveWeight.
PoissonReport weighted_poisson_solve(const SurfaceGrid& g, const ScalarField& weight,
                                     const ScalarField& xi, double tol = 1e-10,
                                     int max_iter = -1);

struct Decomposition {
  VecField solenoidal;       ///< v_g (or v_sigma)
  ScalarField q;             ///< scalar potential
  double orth_residual = 0;  ///< relative weak residual of the potential solve
  int iterations = 0;
};

/// Weighted Helmholtz-Leray projection: the L2-orthogonal decomposition
/// v = v_g + g grad_G q with div_G(g v_g) = 0; q solves the g^2-weighted
/// Poisson problem div_G(g^2 grad q) = div_G(g v).
Decomposition project_weighted_solenoidal(const SurfaceGrid& grid, const ScalarField& g,
                                          const VecField& v, double tol = 1e-10);

/// General (not necessarily tangential) decomposition
/// v = v_sigma + grad_G q + q H n; q unique without a mean constraint.
Decomposition decompose_general(const SurfaceGrid& grid, const VecField& v, double tol = 1e-10);

/// Weighted variant v = v_g + g (grad_G q + q H n).
Decomposition decompose_general_weighted(const SurfaceGrid& grid, const ScalarField& g,
                                         const VecField& v, double tol = 1e-10);

/// Computable H^-1 proxy ||grad_G (-lap_G)^{-1} eta||_L2 for mean-zero eta.
double hminus1_proxy_norm(const SurfaceGrid& g, const ScalarField& eta, double tol = 1e-10);

/// L2 norm of the weak divergence functional xi -> -(g v, grad xi), i.e. of
/// its Riesz representative w.r.t. the diagonal mass.
double weak_divergence_norm(const SurfaceGrid& grid, const ScalarField& g, const VecField& v);

}  // namespace thinshell
