#include "thinshell/surface_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "thinshell/surface_calculus.hpp"

namespace thinshell {

namespace {

// Gauss-Legendre nodes/weights on (-1,1) by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

// Fornberg weights for the m-th derivative at x0 from the given nodes.
std::vector<double> fornberg_weights(double x0, const std::vector<double>& x, int m) {
  const int n = static_cast<int>(x.size()) - 1;
  std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> wts(n + 1);
  for (int i = 0; i <= n; ++i) wts[i] = c[i][m];
  return wts;
}

Grid2 rotate_half(const Grid2& row_block) {
  // rotate columns by ntheta/2 (theta -> theta + pi)
  const int nt = static_cast<int>(row_block.cols());
  const int h = nt / 2;
  Grid2 out(row_block.rows(), nt);
  out.leftCols(nt - h) = row_block.rightCols(nt - h);
  out.rightCols(h) = row_block.leftCols(h);
  return out;
}

// Composite Gauss-Legendre antiderivative over [0, L] with cached panels.
class PanelIntegral {
 public:
  PanelIntegral(std::function<double(double)> f, double L, int npanel = 256, int order = 12)
      : f_(std::move(f)), L_(L), npanel_(npanel) {
    gauss_legendre(order, gx_, gw_);
    cum_.assign(npanel_ + 1, 0.0);
    const double h = L_ / npanel_;
    for (int p = 0; p < npanel_; ++p)
      cum_[p + 1] = cum_[p] + panel(p * h, (p + 1) * h);
  }
  double operator()(double s) const {
    const double h = L_ / npanel_;
    int p = std::clamp(static_cast<int>(s / h), 0, npanel_ - 1);
    return cum_[p] + panel(p * h, s);
  }

 private:
  double panel(double a, double b) const {
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double acc = 0.0;
    for (size_t q = 0; q < gx_.size(); ++q) acc += gw_[q] * f_(c + r * gx_[q]);
    return acc * r;
  }
  std::function<double(double)> f_;
  double L_;
  int npanel_;
  std::vector<double> gx_, gw_;
  std::vector<double> cum_;
};

// Natural cubic spline for CSV profiles.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const int n = static_cast<int>(x_.size());
    m_.assign(n, 0.0);
    if (n < 3) return;
    std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0), d(n, 0.0);
    for (int i = 1; i < n - 1; ++i) {
      const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
      a[i] = h0 / 6.0;
      b[i] = (h0 + h1) / 3.0;
      c[i] = h1 / 6.0;
      d[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
    }
    for (int i = 1; i < n; ++i) {  // Thomas
      const double f = a[i] / b[i - 1];
      b[i] -= f * c[i - 1];
      d[i] -= f * d[i - 1];
    }
    m_[n - 1] = d[n - 1] / b[n - 1];
    for (int i = n - 2; i >= 1; --i) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
  }
  double eval(double s, int deriv) const {
    const int n = static_cast<int>(x_.size());
    int i = static_cast<int>(std::upper_bound(x_.begin(), x_.end(), s) - x_.begin()) - 1;
    i = std::clamp(i, 0, n - 2);
    const double h = x_[i + 1] - x_[i];
    const double u = (x_[i + 1] - s) / h, t = (s - x_[i]) / h;
    switch (deriv) {
      case 0:
        return u * y_[i] + t * y_[i + 1] +
               ((u * u * u - u) * m_[i] + (t * t * t - t) * m_[i + 1]) * h * h / 6.0;
      case 1:
        return (y_[i + 1] - y_[i]) / h +
               h / 6.0 * ((3 * t * t - 1) * m_[i + 1] - (3 * u * u - 1) * m_[i]);
      default:
        return u * m_[i] + t * m_[i + 1];
    }
  }

 private:
  std::vector<double> x_, y_;
  std::vector<double> m_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

void Profile::validate(int nsample, double tol) const {
  for (int i = 0; i <= nsample; ++i) {
    const double s = length * i / nsample;
    const double dp = dphi(s), dq = dpsi(s);
    if (std::abs(dp * dp + dq * dq - 1.0) > tol)
      throw ChartOutOfRange("profile is not arc-length parametrized at s=" + std::to_string(s));
    const bool endpoint = (i == 0 || i == nsample);
    if (!endpoint && phi(s) <= 0.0)
      throw ChartOutOfRange("profile radius phi(s) <= 0 at s=" + std::to_string(s));
  }
  if (!periodic) {
    if (!pole0 || !pole1)
      throw ChartOutOfRange("non-periodic profile must close on the axis at both ends");
    if (std::abs(dpsi(0.0)) > 1e-8 || std::abs(dpsi(length)) > 1e-8)
      throw ChartOutOfRange("pole regularity requires psi'(pole) = 0");
  }
}

Profile sphere_profile(double R) {
  if (R <= 0) throw ChartOutOfRange("sphere radius must be positive");
  Profile p;
  p.length = M_PI * R;
  p.periodic = false;
  p.pole0 = p.pole1 = true;
  p.phi = [R](double s) { return R * std::sin(s / R); };
  p.dphi = [R](double s) { return std::cos(s / R); };
  p.d2phi = [R](double s) { return -std::sin(s / R) / R; };
  p.psi = [R](double s) { return R * std::cos(s / R); };
  p.dpsi = [R](double s) { return -std::sin(s / R); };
  p.d2psi = [R](double s) { return -std::cos(s / R) / R; };
  return p;
}

Profile torus_profile(double R, double a) {
  if (!(a > 0 && a < R)) throw ChartOutOfRange("torus requires 0 < a < R");
  // The profile is traversed so that the chart normal
  // (-psi' cos, -psi' sin, phi') points outward.
  Profile p;
  p.length = 2.0 * M_PI * a;
  p.periodic = true;
  p.phi = [R, a](double s) { return R + a * std::cos(s / a); };
  p.dphi = [a](double s) { return -std::sin(s / a); };
  p.d2phi = [a](double s) { return -std::cos(s / a) / a; };
  p.psi = [a](double s) { return -a * std::sin(s / a); };
  p.dpsi = [a](double s) { return -std::cos(s / a); };
  p.d2psi = [a](double s) { return std::sin(s / a) / a; };
  return p;
}

Profile profile_from_tangent_angle(std::function<double(double)> alpha,
                                   std::function<double(double)> dalpha, double L, double R0,
                                   bool periodic) {
  auto cosA = [alpha](double s) { return std::cos(alpha(s)); };
  auto sinA = [alpha](double s) { return std::sin(alpha(s)); };
  auto iphi = std::make_shared<PanelIntegral>(cosA, L);
  auto ipsi = std::make_shared<PanelIntegral>(sinA, L);
  Profile p;
  p.length = L;
  p.periodic = periodic;
  p.pole0 = p.pole1 = !periodic;
  p.phi = [iphi, R0](double s) { return R0 + (*iphi)(s); };
  p.dphi = cosA;
  p.d2phi = [alpha, dalpha](double s) { return -dalpha(s) * std::sin(alpha(s)); };
  p.psi = [ipsi](double s) { return (*ipsi)(s); };
  p.dpsi = sinA;
  p.d2psi = [alpha, dalpha](double s) { return dalpha(s) * std::cos(alpha(s)); };
  return p;
}

Profile wavy_torus_profile(double R, double a, double delta, int ell) {
  if (ell < 2) throw ChartOutOfRange("wavy torus needs ell >= 2 for a closed profile");
  const double L = 2.0 * M_PI * a;
  auto alpha = [a, delta, ell](double s) {
    return -s / a - M_PI / 2.0 + delta * std::sin(ell * s / a);
  };
  auto dalpha = [a, delta, ell](double s) {
    return -1.0 / a + delta * ell / a * std::cos(ell * s / a);
  };
  Profile p = profile_from_tangent_angle(alpha, dalpha, L, R + a, true);
  p.validate();
  return p;
}

Profile wavy_sphere_profile(double R, double delta, int ell) {
  if (ell < 1) throw ChartOutOfRange("wavy sphere needs ell >= 1");
  const double L = M_PI * R;
  auto alpha = [R, delta, ell](double s) {
    return -s / R + delta * std::sin(2.0 * ell * s / R);
  };
  auto dalpha = [R, delta, ell](double s) {
    return -1.0 / R + 2.0 * delta * ell / R * std::cos(2.0 * ell * s / R);
  };
  Profile p = profile_from_tangent_angle(alpha, dalpha, L, 0.0, false);
  p.validate();
  return p;
}

Profile profile_from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile file: " + path);
  std::vector<double> s, phi, psi;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.find("phi") != std::string::npos) continue;
    std::istringstream row(line);
    std::string tok;
    double v[3];
    int c = 0;
    while (std::getline(row, tok, ',') && c < 3) v[c++] = std::stod(tok);
    if (c != 3) throw ConfigError("profile CSV row needs s,phi,psi: " + line);
    s.push_back(v[0]);
    phi.push_back(v[1]);
    psi.push_back(v[2]);
  }
  if (s.size() < 8) throw ConfigError("profile CSV needs at least 8 samples");
  auto sp_phi = std::make_shared<CubicSpline>(s, phi);
  auto sp_psi = std::make_shared<CubicSpline>(s, psi);
  Profile p;
  p.length = s.back();
  p.pole0 = std::abs(phi.front()) < 1e-9;
  p.pole1 = std::abs(phi.back()) < 1e-9;
  p.periodic = !(p.pole0 && p.pole1);
  p.phi = [sp_phi](double t) { return sp_phi->eval(t, 0); };
  p.dphi = [sp_phi](double t) { return sp_phi->eval(t, 1); };
  p.d2phi = [sp_phi](double t) { return sp_phi->eval(t, 2); };
  p.psi = [sp_psi](double t) { return sp_psi->eval(t, 0); };
  p.dpsi = [sp_psi](double t) { return sp_psi->eval(t, 1); };
  p.d2psi = [sp_psi](double t) { return sp_psi->eval(t, 2); };
  return p;
}

// ---------------------------------------------------------------------------
// Surface
// ---------------------------------------------------------------------------

Surface Surface::sphere(double R) {
  Surface s;
  s.kind_ = Kind::Sphere;
  s.profile_ = sphere_profile(R);
  s.R_ = R;
  return s;
}

Surface Surface::torus(double R, double a) {
  Surface s;
  s.kind_ = Kind::Torus;
  s.profile_ = torus_profile(R, a);
  s.R_ = R;
  s.a_ = a;
  return s;
}

Surface Surface::revolution(Profile p) {
  p.validate();
  Surface s;
  s.kind_ = Kind::Revolution;
  s.profile_ = std::move(p);
  return s;
}

SurfacePoint Surface::at(double s, double theta) const {
  const Profile& pr = profile_;
  const double L = pr.length;
  if (pr.periodic) {
    s = std::fmod(s, L);
    if (s < 0) s += L;
  } else if (s < -1e-12 || s > L + 1e-12) {
    throw ChartOutOfRange("s outside chart domain [0, L]");
  }
  s = std::clamp(s, 0.0, L);

  SurfacePoint p;
  p.s = s;
  p.theta = theta;
  const double ph = pr.phi(s), dph = pr.dphi(s), d2ph = pr.d2phi(s);
  const double dps = pr.dpsi(s), d2ps = pr.d2psi(s);
  const double ps = pr.psi(s);
  const double ct = std::cos(theta), st = std::sin(theta);

  p.pos = {ph * ct, ph * st, ps};
  p.t_s = {dph * ct, dph * st, dps};
  p.t_th = {-ph * st, ph * ct, 0.0};
  p.phi = ph;
  p.n = {-dps * ct, -dps * st, dph};
  p.P = Mat3::Identity() - p.n * p.n.transpose();
  p.Q = p.n * p.n.transpose();

  p.kappa_s = dph * d2ps - dps * d2ph;
  const bool pole = ph < 1e-13 * std::max(1.0, L);
  p.at_pole = pole;
  if (pole) {
    if (!pr.d2psi) throw PoleSingularity("pole limit undefined for this profile");
    if (std::abs(dph) < 0.5)
      throw PoleSingularity("profile not regular at pole (phi' = 0)");
    p.kappa_th = d2ps / dph;  // l'Hopital limit of psi'/phi
    const Vec3 that_s = p.t_s.normalized();
    const Vec3 that_th{-st, ct, 0.0};
    p.W = p.kappa_s * that_s * that_s.transpose() + p.kappa_th * that_th * that_th.transpose();
  } else {
    p.kappa_th = dps / ph;
    // Generic route: W = -grad_G n assembled from chart derivatives of the
    // analytic normal via the metric formula (orthogonal metric diag(1, phi^2)).
    const Vec3 dn_ds{-d2ps * ct, -d2ps * st, d2ph};
    const Vec3 dn_dth{dps * st, -dps * ct, 0.0};
    p.W = -(p.t_s * dn_ds.transpose() + p.t_th * dn_dth.transpose() / (ph * ph));
  }
  p.H = p.W.trace();
  p.K = 0.5 * (p.H * p.H - (p.W * p.W).trace());
  return p;
}

double shell_jacobian(const SurfacePoint& p, double r) {
  const double J = (1.0 - r * p.kappa_s) * (1.0 - r * p.kappa_th);
  if (J <= 0.0) throw OutsideReach("shell Jacobian nonpositive: offset outside reach");
  return J;
}

// ---------------------------------------------------------------------------
// SurfaceGrid
// ---------------------------------------------------------------------------

SurfaceGrid::SurfaceGrid(const Surface& surf, int ns, int ntheta)
    : surf_(surf), ns_(ns), nt_(ntheta) {
  if (ns_ < 8) throw ChartOutOfRange("grid needs ns >= 8");
  if (nt_ < 8 || nt_ % 2 != 0) throw ChartOutOfRange("grid needs even ntheta >= 8");
  const double L = surf_.length();

  std::vector<double> gx, gw;
  gauss_legendre(ns_, gx, gw);
  s_.resize(ns_);
  w_.resize(ns_);
  for (int k = 0; k < ns_; ++k) {
    s_[k] = 0.5 * L * (gx[k] + 1.0);
    w_[k] = 0.5 * L * gw[k];
  }

  // pointwise cache
  pts_.reserve(static_cast<size_t>(ns_) * nt_);
  mass_ = ScalarField(ns_, nt_);
  phi_ = ScalarField(ns_, nt_);
  Hf_ = ScalarField(ns_, nt_);
  Kf_ = ScalarField(ns_, nt_);
  nrm_ = VecField(ns_, nt_);
  ts_ = VecField(ns_, nt_);
  tth_ = VecField(ns_, nt_);
  Wf_ = MatrixField(ns_, nt_);
  const double dth = dtheta_spacing();
  for (int k = 0; k < ns_; ++k) {
    for (int j = 0; j < nt_; ++j) {
      SurfacePoint p = surf_.at(s_[k], theta_node(j));
      mass_(k, j) = w_[k] * p.phi * dth;
      phi_(k, j) = p.phi;
      Hf_(k, j) = p.H;
      Kf_(k, j) = p.K;
      nrm_.set(k, j, p.n);
      ts_.set(k, j, p.t_s);
      tth_.set(k, j, p.t_th);
      Wf_.set(k, j, p.W);
      pts_.push_back(std::move(p));
    }
  }

  // extended s coordinates and ghost bookkeeping
  std::vector<double> sext(ns_ + 6);
  for (int k = 0; k < ns_; ++k) sext[k + 3] = s_[k];
  ghost_lo_.resize(3);
  ghost_hi_.resize(3);
  const bool periodic = surf_.periodic_profile();
  for (int i = 0; i < 3; ++i) {
    if (periodic) {
      sext[i] = s_[ns_ - 3 + i] - L;
      ghost_lo_[i] = {ns_ - 3 + i, false};
      sext[ns_ + 3 + i] = s_[i] + L;
      ghost_hi_[i] = {i, false};
    } else {
      sext[i] = -s_[2 - i];
      ghost_lo_[i] = {2 - i, true};
      sext[ns_ + 3 + i] = 2.0 * L - s_[ns_ - 1 - i];
      ghost_hi_[i] = {ns_ - 1 - i, true};
    }
  }
  dsw_.resize(ns_);
  for (int k = 0; k < ns_; ++k) {
    std::vector<double> nodes(sext.begin() + k, sext.begin() + k + 7);
    auto wts = fornberg_weights(s_[k], nodes, 1);
    for (int m = 0; m < 7; ++m) dsw_[k][m] = wts[m];
  }

  // Fourier differentiation matrix (even nt)
  dth_ = Eigen::MatrixXd::Zero(nt_, nt_);
  for (int j = 0; j < nt_; ++j) {
    for (int l = 0; l < nt_; ++l) {
      if (j == l) continue;
      const double d = 0.5 * (theta_node(j) - theta_node(l));
      const double sgn = ((j - l) % 2 == 0) ? 1.0 : -1.0;
      dth_(j, l) = 0.5 * sgn / std::tan(d);
    }
  }

  // analysis tables
  const int M = nt_ / 2;
  fc_ = Eigen::MatrixXd(nt_, M + 1);
  fs_ = Eigen::MatrixXd(nt_, M + 1);
  for (int j = 0; j < nt_; ++j)
    for (int m = 0; m <= M; ++m) {
      fc_(j, m) = std::cos(m * theta_node(j));
      fs_(j, m) = std::sin(m * theta_node(j));
    }
}

Grid2 SurfaceGrid::extend(const Grid2& f) const {
  Grid2 ext(ns_ + 6, nt_);
  ext.middleRows(3, ns_) = f;
  for (int i = 0; i < 3; ++i) {
    const auto& lo = ghost_lo_[i];
    const auto& hi = ghost_hi_[i];
    Grid2 rl = f.row(lo.src_row);
    Grid2 rh = f.row(hi.src_row);
    ext.row(i) = lo.theta_shift ? rotate_half(rl) : rl;
    ext.row(ns_ + 3 + i) = hi.theta_shift ? rotate_half(rh) : rh;
  }
  return ext;
}

Grid2 SurfaceGrid::ds(const Grid2& f) const {
  Grid2 ext = extend(f);
  Grid2 out = Grid2::Zero(ns_, nt_);
  for (int k = 0; k < ns_; ++k)
    for (int m = 0; m < 7; ++m) out.row(k) += dsw_[k][m] * ext.row(k + m);
  return out;
}

Grid2 SurfaceGrid::ds_adjoint(const Grid2& f) const {
  Grid2 acc = Grid2::Zero(ns_ + 6, nt_);
  for (int k = 0; k < ns_; ++k)
    for (int m = 0; m < 7; ++m) acc.row(k + m) += dsw_[k][m] * f.row(k);
  Grid2 out = acc.middleRows(3, ns_);
  for (int i = 0; i < 3; ++i) {
    const auto& lo = ghost_lo_[i];
    const auto& hi = ghost_hi_[i];
    Grid2 rl = acc.row(i);
    Grid2 rh = acc.row(ns_ + 3 + i);
    out.row(lo.src_row) += lo.theta_shift ? rotate_half(rl) : rl;
    out.row(hi.src_row) += hi.theta_shift ? rotate_half(rh) : rh;
  }
  return out;
}

Grid2 SurfaceGrid::dtheta(const Grid2& f) const { return f.matrix() * dth_.transpose(); }
Grid2 SurfaceGrid::dtheta_adjoint(const Grid2& f) const { return f.matrix() * dth_; }

Grid2 SurfaceGrid::dtheta2(const Grid2& f) const {
  // Mode path: far smaller cancellation error than the dense matrix, which
  // matters where the result is divided by phi^2 near poles. For pole charts
  // smooth fields carry azimuthal mode m only at amplitude O(phi^m), so modes
  // beyond ~ (nt/2) phi/phi_max at a row are pure noise; truncating them
  // keeps the amplified near-pole rows at roundoff level.
  Grid2 fc, fs;
  theta_modes(f, fc, fs);
  const int M = nt_ / 2;
  if (!surf_.periodic_profile()) {
    const double phimax = phi_.v.maxCoeff();
    for (int k = 0; k < ns_; ++k) {
      const int mc = std::max(
          10, static_cast<int>(std::ceil(1.2 * M * phi_(k, 0) / phimax)));
      for (int m = mc + 1; m <= M; ++m) {
        fc(k, m) = 0.0;
        fs(k, m) = 0.0;
      }
    }
  }
  for (int m = 0; m <= M; ++m) {
    fc.col(m) *= -static_cast<double>(m) * m;
    fs.col(m) *= -static_cast<double>(m) * m;
  }
  return theta_synthesis(fc, fs);
}

void SurfaceGrid::theta_modes(const Grid2& f, Grid2& fc, Grid2& fs) const {
  const int M = nt_ / 2;
  fc = (2.0 / nt_) * (f.matrix() * fc_).array();
  fs = (2.0 / nt_) * (f.matrix() * fs_).array();
  fc.col(0) *= 0.5;
  fc.col(M) *= 0.5;
}

Grid2 SurfaceGrid::theta_synthesis(const Grid2& fc, const Grid2& fs) const {
  return fc.matrix() * fc_.transpose() + fs.matrix() * fs_.transpose();
}

double SurfaceGrid::theta_mode_multiplier(int m) const { return (2 * m == nt_) ? 0.0 : m; }

Grid2 SurfaceGrid::ds_transpose_diag(const Grid2& c) const {
  Grid2 out = Grid2::Zero(ns_, nt_);
  for (int k = 0; k < ns_; ++k) {
    for (int m = 0; m < 7; ++m) {
      const int i = k + m;
      int row;
      if (i < 3)
        row = ghost_lo_[i].src_row;
      else if (i >= ns_ + 3)
        row = ghost_hi_[i - ns_ - 3].src_row;
      else
        row = i - 3;
      out.row(row) += dsw_[k][m] * dsw_[k][m] * c.row(k);
    }
  }
  return out;
}

double SurfaceGrid::dtheta_column_sq() const { return dth_.col(0).squaredNorm(); }

Eigen::MatrixXd SurfaceGrid::ds_matrix_mode(double sign) const {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(ns_, ns_);
  for (int k = 0; k < ns_; ++k) {
    for (int m = 0; m < 7; ++m) {
      const int i = k + m;  // extended index
      double factor = 1.0;
      int row;
      if (i < 3) {
        row = ghost_lo_[i].src_row;
        if (ghost_lo_[i].theta_shift) factor = sign;
      } else if (i >= ns_ + 3) {
        row = ghost_hi_[i - ns_ - 3].src_row;
        if (ghost_hi_[i - ns_ - 3].theta_shift) factor = sign;
      } else {
        row = i - 3;
      }
      D(k, row) += factor * dsw_[k][m];
    }
  }
  return D;
}

ScalarField SurfaceGrid::sample(const std::function<double(const Vec3&)>& f) const {
  ScalarField out(ns_, nt_);
  for (int k = 0; k < ns_; ++k)
    for (int j = 0; j < nt_; ++j) out(k, j) = f(point(k, j).pos);
  return out;
}

ScalarField SurfaceGrid::sample_chart(const std::function<double(double, double)>& f) const {
  ScalarField out(ns_, nt_);
  for (int k = 0; k < ns_; ++k)
    for (int j = 0; j < nt_; ++j) out(k, j) = f(s_[k], theta_node(j));
  return out;
}

VecField SurfaceGrid::sample_vec(const std::function<Vec3(const Vec3&)>& f) const {
  VecField out(ns_, nt_);
  for (int k = 0; k < ns_; ++k)
    for (int j = 0; j < nt_; ++j) out.set(k, j, f(point(k, j).pos));
  return out;
}

// ---------------------------------------------------------------------------
// Integrals
// ---------------------------------------------------------------------------

double surface_integral(const SurfaceGrid& g, const ScalarField& f) {
  require_shape(g.shape(), f.shape(), "surface_integral");
  return (g.mass().v * f.v).sum();
}

double offset_surface_integral(const SurfaceGrid& g, const ScalarField& field_on_gamma_h,
                               const ScalarField& h) {
  require_shape(g.shape(), field_on_gamma_h.shape(), "offset_surface_integral");
  require_shape(g.shape(), h.shape(), "offset_surface_integral");
  const VecField gh = tangential_gradient(g, h);
  Grid2 density(g.ns(), g.ntheta());
  for (int k = 0; k < g.ns(); ++k) {
    for (int j = 0; j < g.ntheta(); ++j) {
      const SurfacePoint& p = g.point(k, j);
      const double J = shell_jacobian(p, h(k, j));
      const Mat3 A = Mat3::Identity() - h(k, j) * p.W;
      const Vec3 tau = A.partialPivLu().solve(gh.at(k, j));
      density(k, j) = J * std::sqrt(1.0 + tau.squaredNorm());
    }
  }
  return (g.mass().v * field_on_gamma_h.v * density).sum();
}

// ---------------------------------------------------------------------------
// ThinDomainSpec / boundary frames
// ---------------------------------------------------------------------------

ThinDomainSpec ThinDomainSpec::make_from_fields(const SurfaceGrid& grid, const ScalarField& g0,
                                                const ScalarField& g1, double eps, double safety) {
  if (!(eps > 0 && eps < 1)) throw ChartOutOfRange("thin-domain eps must be in (0,1)");
  ThinDomainSpec sp;
  sp.grid = &grid;
  sp.eps = eps;
  sp.safety = safety;
  sp.g0 = g0;
  sp.g1 = g1;
  sp.g = g1 - g0;
  if (sp.g.v.minCoeff() <= 0.0)
    throw ChartOutOfRange("thin-domain width g = g1 - g0 must be bounded below by c > 0");
  double kmax = 0.0;
  for (int k = 0; k < grid.ns(); ++k)
    for (int j = 0; j < grid.ntheta(); ++j) {
      const auto& p = grid.point(k, j);
      kmax = std::max({kmax, std::abs(p.kappa_s), std::abs(p.kappa_th)});
    }
  const double gmax = std::max(sp.g0.max_abs(), sp.g1.max_abs());
  if (eps * gmax * kmax >= safety)
    throw OutsideReach("thin-domain validity bound eps*max|g_i|*max|kappa| < safety violated");
  sp.grad_g0 = tangential_gradient(grid, sp.g0);
  sp.grad_g1 = tangential_gradient(grid, sp.g1);
  sp.grad_g = tangential_gradient(grid, sp.g);
  return sp;
}

ThinDomainSpec ThinDomainSpec::make(const SurfaceGrid& grid,
                                    const std::function<double(const Vec3&)>& g0,
                                    const std::function<double(const Vec3&)>& g1, double eps,
                                    double safety) {
  return make_from_fields(grid, grid.sample(g0), grid.sample(g1), eps, safety);
}

BoundaryFrame boundary_frame(const ThinDomainSpec& spec, int k, int j, int side) {
  if (side != 0 && side != 1) throw ChartOutOfRange("boundary side must be 0 or 1");
  const SurfaceGrid& g = *spec.grid;
  const SurfacePoint& p = g.point(k, j);
  const double gi = side == 0 ? spec.g0(k, j) : spec.g1(k, j);
  const Vec3 grad = side == 0 ? spec.grad_g0.at(k, j) : spec.grad_g1.at(k, j);
  const Mat3 A = Mat3::Identity() - spec.eps * gi * p.W;
  Eigen::PartialPivLU<Mat3> lu(A);
  const double det = lu.determinant();
  if (std::abs(det) < 1e-12) throw SingularResolvent("I - eps g_i W numerically singular");
  BoundaryFrame f;
  f.tau = lu.solve(grad);
  const double sgn = (side == 1) ? 1.0 : -1.0;
  f.n_eps = sgn * (p.n - spec.eps * f.tau) / std::sqrt(1.0 + spec.eps * spec.eps * f.tau.squaredNorm());
  return f;
}

// ---------------------------------------------------------------------------
// Rigid fields
// ---------------------------------------------------------------------------

namespace {

RigidField rigid_basis_field(int i) {
  RigidField w;
  if (i < 3)
    w.a = Vec3::Unit(i);
  else
    w.b = Vec3::Unit(i - 3);
  return w;
}

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

}  // namespace

Mat6 rigid_gram(const SurfaceGrid& g, const VecField& f) {
  Mat6 G = Mat6::Zero();
  Eigen::Matrix<double, 6, 1> row;
  for (int k = 0; k < g.ns(); ++k) {
    for (int j = 0; j < g.ntheta(); ++j) {
      const Vec3 y = g.point(k, j).pos;
      const Vec3 fv = f.at(k, j);
      for (int i = 0; i < 6; ++i) {
        const RigidField w = rigid_basis_field(i);
        row[i] = w.eval(y).dot(fv);
      }
      G += g.mass()(k, j) * row * row.transpose();
    }
  }
  return G;
}

std::vector<RigidField> rigid_nullspace(const Mat6& G, double rel_threshold, Vec6& eigs) {
  Eigen::SelfAdjointEigenSolver<Mat6> es(G);
  if (es.info() != Eigen::Success) throw EigSolverFailure("rigid-field Gram eigensolve failed");
  eigs = es.eigenvalues();
  const double lmax = std::max(eigs.maxCoeff(), 0.0);
  std::vector<RigidField> basis;
  for (int i = 0; i < 6; ++i) {
    if (eigs[i] < rel_threshold * std::max(lmax, 1e-300)) {
      Vec6 v = es.eigenvectors().col(i);
      RigidField w;
      w.a = v.head<3>();
      w.b = v.tail<3>();
      basis.push_back(w);
    }
  }
  return basis;
}

RigidScanResult rigid_field_scan(const SurfaceGrid& grid, const ThinDomainSpec* spec,
                                 double rel_threshold) {
  RigidScanResult r;
  const Mat6 GR = rigid_gram(grid, grid.normal());
  Mat6 G0 = Mat6::Zero(), G1 = Mat6::Zero(), Gg = Mat6::Zero();
  if (spec) {
    G0 = rigid_gram(grid, spec->grad_g0);
    G1 = rigid_gram(grid, spec->grad_g1);
    Gg = rigid_gram(grid, spec->grad_g);
  }
  r.basis_R = rigid_nullspace(GR, rel_threshold, r.eig_R);
  r.dim_R = static_cast<int>(r.basis_R.size());
  r.basis_R01 = rigid_nullspace(GR + G0 + G1, rel_threshold, r.eig_R01);
  r.dim_R01 = static_cast<int>(r.basis_R01.size());
  r.basis_Rg = rigid_nullspace(GR + Gg, rel_threshold, r.eig_Rg);
  r.dim_Rg = static_cast<int>(r.basis_Rg.size());

  for (const auto& w : r.basis_R) {
    double resid = 0.0, wmax = 0.0;
    for (int k = 0; k < grid.ns(); ++k)
      for (int j = 0; j < grid.ntheta(); ++j) {
        const auto& p = grid.point(k, j);
        const Vec3 wv = w.eval(p.pos);
        resid = std::max(resid, std::abs(wv.dot(p.n)));
        wmax = std::max(wmax, wv.norm());
      }
    r.max_residual_R = std::max(r.max_residual_R, resid / std::max(wmax, 1e-300));
  }
  return r;
}

KillingCheckResult killing_eigen_check(const SurfaceGrid& grid, const RigidField& w,
                                       double tangency_tol) {
  double wn_max = 0.0, w_max = 0.0;
  for (int k = 0; k < grid.ns(); ++k)
    for (int j = 0; j < grid.ntheta(); ++j) {
      const auto& p = grid.point(k, j);
      const Vec3 wv = w.eval(p.pos);
      wn_max = std::max(wn_max, std::abs(wv.dot(p.n)));
      w_max = std::max(w_max, wv.norm());
    }
  if (wn_max > tangency_tol * std::max(w_max, 1e-300))
    throw NotTangential("rigid field is not tangential on this surface");

  KillingCheckResult res;
  double best = -1.0;
  for (int k = 0; k < grid.ns(); ++k)
    for (int j = 0; j < grid.ntheta(); ++j) {
      const auto& p = grid.point(k, j);
      const Vec3 wv = w.eval(p.pos);
      const double wn = wv.norm();
      if (wn < 1e-12 * w_max) continue;
      const Vec3 Ww = p.W * wv;
      const double lambda = Ww.dot(wv) / (wn * wn);
      const double wscale = p.W.norm() * wn + 1e-300;
      res.max_collinearity_residual =
          std::max(res.max_collinearity_residual, (Ww - lambda * wv).norm() / wscale);
      const double ascale = w.a.norm() + std::abs(lambda) * wn + 1e-300;
      res.max_axis_residual =
          std::max(res.max_axis_residual, (w.a.cross(p.n) + lambda * wv).norm() / ascale);
      if (wn > best) {
        best = wn;
        res.lambda_equator = lambda;
      }
    }
  return res;
}

}  // namespace thinshell
