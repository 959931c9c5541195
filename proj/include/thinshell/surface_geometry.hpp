#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "thinshell/fields.hpp"

namespace thinshell {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Arc-length parametrized generatrix (phi(s), psi(s)) of a closed surface of
/// revolution about the x3-axis. Either periodic (torus-like) or with the
/// profile ending on the axis at both ends (sphere-like poles).
struct Profile {
  double length = 0.0;
  bool periodic = false;
  bool pole0 = false;  ///< phi vanishes at s = 0
  bool pole1 = false;  ///< phi vanishes at s = length
  std::function<double(double)> phi, dphi, d2phi;
  std::function<double(double)> psi, dpsi, d2psi;

  /// Checks |phi'|^2+|psi'|^2 = 1 on a sample of the chart, phi > 0 away from
  /// poles and psi' = 0 at poles. Throws ChartOutOfRange on violation.
  void validate(int nsample = 512, double tol = 1e-10) const;
};

Profile sphere_profile(double R);
Profile torus_profile(double R, double a);

/// Closed profile from a tangent-angle function: (phi', psi') = (cos a(s), sin a(s)).
/// Arc length holds by construction; phi/psi are recovered by panel quadrature.
/// `periodic` profiles need a winding consistent with a closed curve; pole-type
/// profiles need alpha(0) = 0 and alpha(L) = -pi.
Profile profile_from_tangent_angle(std::function<double(double)> alpha,
                                   std::function<double(double)> dalpha, double L, double R0,
                                   bool periodic);

/// Generic test surfaces exercising the revolution machinery beyond the presets.
Profile wavy_torus_profile(double R, double a, double delta, int ell);
Profile wavy_sphere_profile(double R, double delta, int ell);

/// CSV profile (columns s,phi,psi), cubic-spline interpolated. Derivative
/// accuracy is limited by the sampling; closed-form profiles are preferred
/// where available.
Profile profile_from_csv(const std::string& path);

/// All pointwise surface quantities at one chart location.
struct SurfacePoint {
  double s = 0, theta = 0;
  Vec3 pos = Vec3::Zero();
  Vec3 t_s = Vec3::Zero();   ///< d(mu)/ds, unit by arc length
  Vec3 t_th = Vec3::Zero();  ///< d(mu)/dtheta, |t_th| = phi
  double phi = 0;            ///< sqrt(det theta) of the chart metric
  Vec3 n = Vec3::Zero();     ///< unit outward normal
  Mat3 P = Mat3::Zero(), Q = Mat3::Zero(), W = Mat3::Zero();
  double H = 0, K = 0;
  double kappa_s = 0, kappa_th = 0;  ///< principal curvatures (analytic route)
  bool at_pole = false;
};

class Surface {
 public:
  enum class Kind { Sphere, Torus, Revolution };

  static Surface sphere(double R);
  static Surface torus(double R, double a);
  static Surface revolution(Profile p);

  /// surface_quantities: all pointwise quantities at (s, theta).
  /// W is assembled from chart derivatives of the analytic normal (generic
  /// route); kappa_s/kappa_th carry the closed-form principal curvatures.
  SurfacePoint at(double s, double theta) const;

  Kind kind() const { return kind_; }
  double length() const { return profile_.length; }
  bool periodic_profile() const { return profile_.periodic; }
  const Profile& profile() const { return profile_; }
  double radius() const { return R_; }
  double minor_radius() const { return a_; }

 private:
  Surface() = default;
  Kind kind_ = Kind::Revolution;
  Profile profile_;
  double R_ = 0, a_ = 0;
};

/// shell_jacobian: J(y,r) = det[I - r W] = (1 - r kappa1)(1 - r kappa2),
/// evaluated from the principal curvatures. Throws OutsideReach when J <= 0.
double shell_jacobian(const SurfacePoint& p, double r);

/// Chart grid: Gauss-Legendre nodes in s on (0, L), uniform periodic theta.
/// Caches all pointwise quantities and the chart differentiation tables.
class SurfaceGrid {
 public:
  SurfaceGrid(const Surface& surf, int ns, int ntheta);

  const Surface& surface() const { return surf_; }
  int ns() const { return ns_; }
  int ntheta() const { return nt_; }
  GridShape shape() const { return {ns_, nt_}; }
  double s_node(int k) const { return s_[k]; }
  double s_weight(int k) const { return w_[k]; }
  double theta_node(int j) const { return 2.0 * M_PI * j / nt_; }
  double dtheta_spacing() const { return 2.0 * M_PI / nt_; }

  const SurfacePoint& point(int k, int j) const { return pts_[k * nt_ + j]; }

  // Cached nodal geometry as fields.
  const ScalarField& mass() const { return mass_; }    ///< w_k * phi_k * dtheta
  const ScalarField& phi_field() const { return phi_; }
  const ScalarField& H_field() const { return Hf_; }
  const ScalarField& K_field() const { return Kf_; }
  const VecField& normal() const { return nrm_; }
  const VecField& tangent_s() const { return ts_; }
  const VecField& tangent_theta() const { return tth_; }  ///< unnormalized
  const MatrixField& weingarten() const { return Wf_; }

  // Chart differentiation (6th-order Fornberg stencils in s with pole
  // reflection / periodic wrap ghosts; spectral differentiation in theta).
  Grid2 ds(const Grid2& f) const;
  Grid2 ds_adjoint(const Grid2& f) const;  ///< plain transpose of ds
  Grid2 dtheta(const Grid2& f) const;
  Grid2 dtheta_adjoint(const Grid2& f) const;
  Grid2 dtheta2(const Grid2& f) const;

  /// Fourier analysis/synthesis in theta (cos/sin coefficients, m = 0..nt/2).
  void theta_modes(const Grid2& f, Grid2& fc, Grid2& fs) const;
  Grid2 theta_synthesis(const Grid2& fc, const Grid2& fs) const;

  /// 1-D s-derivative matrix for one theta Fourier mode; `sign` is the pole
  /// ghost reflection factor (-1)^m, ignored for periodic profiles.
  Eigen::MatrixXd ds_matrix_mode(double sign) const;

  /// Multiplier applied by dtheta to mode m (m, except 0 on the Nyquist mode).
  double theta_mode_multiplier(int m) const;

  /// Row-approximate diagonal of Ds^T diag(c) Ds (theta shifts of ghost rows
  /// ignored); used for preconditioning estimates only.
  Grid2 ds_transpose_diag(const Grid2& c) const;
  /// sum_l Dtheta(l,j)^2, identical for all j.
  double dtheta_column_sq() const;

  ScalarField sample(const std::function<double(const Vec3&)>& f) const;
  ScalarField sample_chart(const std::function<double(double, double)>& f) const;
  VecField sample_vec(const std::function<Vec3(const Vec3&)>& f) const;

 private:
  Surface surf_;
  int ns_, nt_;
  std::vector<double> s_, w_;
  std::vector<SurfacePoint> pts_;
  ScalarField mass_, phi_, Hf_, Kf_;
  VecField nrm_, ts_, tth_;
  MatrixField Wf_;

  // 7-point stencil weights per s-row over the ghost-extended row range
  // [k, k+6]; ghosts carry a row source and theta half-shift flag.
  struct GhostRow {
    int src_row;
    bool theta_shift;  // rotate columns by ntheta/2 (pole reflection)
  };
  std::vector<std::array<double, 7>> dsw_;
  std::vector<GhostRow> ghost_lo_, ghost_hi_;  // 3 each
  Eigen::MatrixXd dth_;                        // ntheta x ntheta
  Eigen::MatrixXd fc_, fs_;                    // ntheta x (nt/2+1) analysis tables

  Grid2 extend(const Grid2& f) const;
};

/// surface_integral: quadrature of field * sqrt(det theta) over the chart.
double surface_integral(const SurfaceGrid& g, const ScalarField& f);

/// offset_surface_integral: integral over the parametrized offset surface
/// Gamma_h pulled back to Gamma with density J(y,h) sqrt(1+|tau_h|^2).
double offset_surface_integral(const SurfaceGrid& g, const ScalarField& field_on_gamma_h,
                               const ScalarField& h);

/// Thin-domain data (g0, g1, eps) with derived width g = g1 - g0 and the
/// tangential gradients used by boundary frames and extensions.
struct ThinDomainSpec {
  const SurfaceGrid* grid = nullptr;
  double eps = 0;
  double safety = 0.5;  ///< validity bound eps*max|g_i|*max|kappa| < safety
  ScalarField g0, g1, g;
  VecField grad_g0, grad_g1, grad_g;

  static ThinDomainSpec make(const SurfaceGrid& grid, const std::function<double(const Vec3&)>& g0,
                             const std::function<double(const Vec3&)>& g1, double eps,
                             double safety = 0.5);
  static ThinDomainSpec make_from_fields(const SurfaceGrid& grid, const ScalarField& g0,
                                         const ScalarField& g1, double eps, double safety = 0.5);
};

struct BoundaryFrame {
  Vec3 tau;    ///< tau_eps^i, tangential
  Vec3 n_eps;  ///< unit outward normal of Gamma_eps^i
};

/// boundary_frame: tau_eps^i = (I - eps g_i W)^{-1} grad_G g_i and
/// n_eps^i = (-1)^{i+1} (n - eps tau) / sqrt(1 + eps^2 |tau|^2) at node (k,j).
BoundaryFrame boundary_frame(const ThinDomainSpec& spec, int k, int j, int side);

/// Rigid displacement w(x) = a x x + b.
struct RigidField {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  Vec3 eval(const Vec3& y) const { return a.cross(y) + b; }
};

struct RigidScanResult {
  int dim_R = 0, dim_R01 = 0, dim_Rg = 0;
  std::vector<RigidField> basis_R, basis_R01, basis_Rg;
  Eigen::Matrix<double, 6, 1> eig_R, eig_R01, eig_Rg;  ///< Gram eigenvalues, ascending
  double max_residual_R = 0;  ///< max_j max-pointwise |w_j . n| / ||w_j||_inf over basis_R
};

/// rigid_field_scan: null spaces of the 6x6 Gram matrices of
/// (a,b) -> int |w.n|^2, plus the g_i / g constraints for R0^R1 and R_g.
/// Eigenvalues below `rel_threshold` * max eigenvalue count as zero.
RigidScanResult rigid_field_scan(const SurfaceGrid& grid, const ThinDomainSpec* spec = nullptr,
                                 double rel_threshold = 1e-8);

/// Gram matrix of (a,b) -> int (w . f)^2 dH^2 over the 6-dim rigid space.
Eigen::Matrix<double, 6, 6> rigid_gram(const SurfaceGrid& g, const VecField& f);

/// Null space of a rigid-space Gram matrix by eigen-decomposition.
std::vector<RigidField> rigid_nullspace(const Eigen::Matrix<double, 6, 6>& G,
                                        double rel_threshold, Eigen::Matrix<double, 6, 1>& eigs);

struct KillingCheckResult {
  double max_collinearity_residual = 0;  ///< |W w - lambda w| / (|W||w|), w != 0
  double max_axis_residual = 0;          ///< |a x n + lambda w| / (|a| |w|)
  double lambda_equator = 0;             ///< lambda at the node of largest |w|
};

/// killing_eigen_check: the eigenrelation W(y) w(y) = lambda(y) w(y) with
/// lambda = (W w . w)/|w|^2, and a x n = -lambda w, at every grid node with
/// w(y) != 0. Throws NotTangential if w leaves the tangent bundle.
KillingCheckResult killing_eigen_check(const SurfaceGrid& grid, const RigidField& w,
                                       double tangency_tol = 1e-8);

}  // namespace thinshell
