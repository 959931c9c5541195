#pragma once

#include <functional>
#include <random>
#include <vector>

#include "thinshell/helmholtz.hpp"
#include "thinshell/surface_geometry.hpp"

namespace thinshell {

/// Thin-domain lattice: the surface grid times per-node radial Gauss-Legendre
/// nodes r in (eps g0(y), eps g1(y)), proportional across the fiber.
class ShellGrid {
 public:
  ShellGrid(const ThinDomainSpec& spec, int nr = 8);

  const ThinDomainSpec& spec() const { return *spec_; }
  const SurfaceGrid& surface_grid() const { return spec_->grid ? *spec_->grid : throw_grid(); }
  int nr() const { return nr_; }
  double ref_node(int q) const { return xq_[q]; }    ///< on (0,1)
  double ref_weight(int q) const { return wq_[q]; }  ///< sum to 1
  double r_node(int k, int j, int q) const {
    return spec_->eps * (spec_->g0(k, j) + spec_->g(k, j) * xq_[q]);
  }
  /// Derivative matrix of Lagrange interpolation at the reference nodes.
  const Eigen::MatrixXd& ref_diff() const { return Dref_; }

 private:
  const SurfaceGrid& throw_grid() const { throw GridMismatch("shell grid without surface grid"); }
  const ThinDomainSpec* spec_;
  int nr_;
  std::vector<double> xq_, wq_;
  Eigen::MatrixXd Dref_;
};

/// Radial slices: slice(q) is a surface field at the q-th radial node.
struct ShellScalar {
  std::vector<ScalarField> slice;
  int nr() const { return static_cast<int>(slice.size()); }
};
struct ShellVec {
  std::vector<VecField> slice;
  int nr() const { return static_cast<int>(slice.size()); }
};

// Operations -----------------------------------------------------------------

ShellScalar constant_extension(const ShellGrid& sg, const ScalarField& eta);
ShellVec constant_extension(const ShellGrid& sg, const VecField& v);

/// d/dr along the fiber via the radial collocation derivative (polynomial-exact).
ShellScalar normal_derivative(const ShellGrid& sg, const ShellScalar& u);
ShellVec normal_derivative(const ShellGrid& sg, const ShellVec& u);

/// M phi(y) = (1/(eps g)) int phi(y + r n) dr (exact for radial polynomials).
ScalarField average_M(const ShellGrid& sg, const ShellScalar& u);
VecField average_M(const ShellGrid& sg, const ShellVec& u);
/// M_tau u = P M u.
VecField average_Mtau(const ShellGrid& sg, const ShellVec& u);

/// Psi_eps(x) = [(d - eps g0) tau_eps^1 + (eps g1 - d) tau_eps^0] / g.
ShellVec impermeable_extension_aux(const ShellGrid& sg);

/// E_eps v = vbar + (vbar . Psi_eps) nbar; impermeable on both boundaries.
ShellVec impermeable_extension(const ShellGrid& sg, const VecField& v);

/// max over both boundaries and all nodes of |u . n_eps^i| evaluated at
/// r = eps g_i (boundary values extrapolated from the radial interpolant).
double boundary_impermeability_residual(const ShellGrid& sg, const ShellVec& u);

/// u = u_a + u_r with u_a = E_eps M_tau u.
struct AverageResidualSplit {
  ShellVec average;
  ShellVec residual;
};
AverageResidualSplit average_residual_split(const ShellGrid& sg, const ShellVec& u);

/// Full ambient gradient of a shell scalar assembled from lattice chart
/// derivatives, the radial derivative, and the resolvent (I - r W)^{-1}.
ShellVec ambient_gradient(const ShellGrid& sg, const ShellScalar& u);
ShellScalar ambient_divergence(const ShellGrid& sg, const ShellVec& u);

/// Volume integral over the shell with the change-of-variables Jacobian J(y,r).
double shell_integral(const ShellGrid& sg, const ShellScalar& u);
double shell_l2_norm(const ShellGrid& sg, const ShellScalar& u);
double shell_l2_norm(const ShellGrid& sg, const ShellVec& u);

struct AveragedGradientReport {
  double residual_rel = 0;  ///< |grad_G M phi - M(B grad phi) - M((d_n phi) psi_eps)| rel
  double lhs_norm = 0;
};
AveragedGradientReport averaged_gradient_check(const ShellGrid& sg, const ShellScalar& phi);

// Rate studies ----------------------------------------------------------------

enum class RateEstimate { CompN, ExTanDiv, LpETDSol, ADivTanLp, AveDiffDom };

struct RatePoint {
  double eps = 0;
  double quantity = 0;
  double reference = 0;
};

struct RateStudy {
  std::vector<RatePoint> points;
  double slope = 0;
  bool spatial_audit_ok = true;
  double spatial_audit_change = 0;  ///< relative change of the smallest-eps LHS on refinement
};

struct RateOptions {
  std::function<double(const Vec3&)> g0 = [](const Vec3&) { return 0.0; };
  std::function<double(const Vec3&)> g1 = [](const Vec3& y) { return 1.0 + 0.2 * y[2]; };
  int nr = 8;
  unsigned seed = 7;
  bool spatial_audit = true;
  double audit_tol = 0.01;
  double audit_refine = 1.5;
  double solver_tol = 1e-11;
};

/// Computes the estimate's left-hand quantity per epsilon and fits the
/// log-log slope by least squares. Requires >= 4 strictly decreasing epsilons,
/// all valid for the surface; optionally audits spatial resolution by one
/// refinement step at the smallest epsilon.
RateStudy epsilon_rate_study(const SurfaceGrid& grid, RateEstimate which,
                             const std::vector<double>& eps_list, const RateOptions& opt = {});

/// Least-squares slope of log(quantity) vs log(eps).
double fit_loglog_slope(const std::vector<RatePoint>& pts);

/// Seeded smooth tangential field: projection of a random low-degree ambient
/// polynomial vector field.
VecField random_smooth_tangent_field(const SurfaceGrid& g, unsigned seed);
ScalarField random_smooth_scalar_field(const SurfaceGrid& g, unsigned seed);

}  // namespace thinshell
