#pragma once

#include <vector>

#include "thinshell/surface_geometry.hpp"

namespace thinshell {

/// grad_G eta = (d_s eta) d_s(mu) + phi^-2 (d_th eta) d_th(mu); tangential by
/// construction (n . grad = 0 holds pointwise in exact arithmetic).
VecField tangential_gradient(const SurfaceGrid& g, const ScalarField& eta);

/// div_G v = tr[grad_G v] for a (not necessarily tangential) 3-vector field.
ScalarField tangential_divergence(const SurfaceGrid& g, const VecField& v);

/// [div_G A]_j = sum_i D_i A_ij for a matrix field.
VecField tangential_divergence(const SurfaceGrid& g, const MatrixField& A);

/// Full tangential gradient matrix (grad_G v)_ij = D_i v_j.
MatrixField tangential_gradient_matrix(const SurfaceGrid& g, const VecField& v);

/// D_G(v) = P (grad_G v)_S P, the surface strain rate.
MatrixField strain_rate(const SurfaceGrid& g, const VecField& v);

/// Covariant derivative of X along Y: P{(Y . grad_G) X}. X, Y tangential.
VecField covariant_derivative(const SurfaceGrid& g, const VecField& X, const VecField& Y);

/// Laplace-Beltrami in chart divergence form: (1/phi) d_s(phi d_s .) + phi^-2 d_th^2.
ScalarField laplace_beltrami(const SurfaceGrid& g, const ScalarField& eta);
VecField laplace_beltrami(const SurfaceGrid& g, const VecField& v);  ///< componentwise

/// Bochner Laplacian on tangent fields: P lap_G v + W^2 v.
VecField bochner_laplacian(const SurfaceGrid& g, const VecField& v);

// Pointwise helpers ---------------------------------------------------------

VecField project_tangent(const SurfaceGrid& g, const VecField& v);
double max_normal_component(const SurfaceGrid& g, const VecField& v);

// Inner products with the surface quadrature --------------------------------

double l2_inner(const SurfaceGrid& g, const ScalarField& a, const ScalarField& b);
double l2_inner(const SurfaceGrid& g, const VecField& a, const VecField& b);
double l2_norm(const SurfaceGrid& g, const ScalarField& a);
double l2_norm(const SurfaceGrid& g, const VecField& a);
double l2_norm(const SurfaceGrid& g, const MatrixField& a);
double h1_norm(const SurfaceGrid& g, const VecField& a);
double weighted_mean(const SurfaceGrid& g, const ScalarField& a);  ///< int a / int 1

// Korn-constant estimator ----------------------------------------------------

struct KornEstimate {
  double c_est = 0;       ///< 1 / smallest generalized eigenvalue of (A, B)
  double lambda_min = 0;  ///< smallest eigenvalue of A x = lambda B x
  int trial_dim = 0;
};

/// Trial space: gradients and rotated gradients of chart harmonics
/// S_p(s) * trig(q theta), p < ms, q < mtheta, pole-regularized by phi^min(q,3).
std::vector<VecField> korn_trial_space(const SurfaceGrid& g, int ms, int mtheta);

/// Estimate of the constant in ||grad_G v||^2 <= c (||D_G(v)||^2 + ||v||^2)
/// over an explicit trial space. Throws EigSolverFailure on a degenerate space.
KornEstimate korn_estimate_from_fields(const SurfaceGrid& g, const std::vector<VecField>& trial);
KornEstimate korn_constant_estimate(const SurfaceGrid& g, int ms = 6, int mtheta = 6);

}  // namespace thinshell
