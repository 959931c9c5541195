#include "thinshell/thin_shell.hpp"

#include <cmath>

namespace thinshell {

namespace {

// Gauss-Legendre on (0,1), weights summing to 1.
void gauss01(int n, std::vector<double>& x, std::vector<double>& w) {
  // Newton on Legendre polynomials, mapped from (-1,1).
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
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
    x[i] = 0.5 * (1.0 - z);
    x[n - 1 - i] = 0.5 * (1.0 + z);
    w[i] = w[n - 1 - i] = 1.0 / ((1.0 - z * z) * pp * pp);
  }
}

// Lagrange interpolation weights from nodes x to target t (barycentric).
Eigen::VectorXd interp_weights(const std::vector<double>& x, double t) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd bw(n);
  for (int i = 0; i < n; ++i) {
    double p = 1.0;
    for (int j = 0; j < n; ++j)
      if (j != i) p *= x[i] - x[j];
    bw[i] = 1.0 / p;
  }
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    if (std::abs(t - x[i]) < 1e-300) {
      out.setZero();
      out[i] = 1.0;
      return out;
    }
  }
  double denom = 0.0;
  for (int i = 0; i < n; ++i) {
    out[i] = bw[i] / (t - x[i]);
    denom += out[i];
  }
  return out / denom;
}

}  // namespace

ShellGrid::ShellGrid(const ThinDomainSpec& spec, int nr) : spec_(&spec), nr_(nr) {
  if (nr_ < 2) throw TooFewRadialNodes("shell grid needs at least 2 radial nodes");
  gauss01(nr_, xq_, wq_);
  Dref_ = Eigen::MatrixXd::Zero(nr_, nr_);
  Eigen::VectorXd bw(nr_);
  for (int i = 0; i < nr_; ++i) {
    double p = 1.0;
    for (int j = 0; j < nr_; ++j)
      if (j != i) p *= xq_[i] - xq_[j];
    bw[i] = 1.0 / p;
  }
  for (int i = 0; i < nr_; ++i) {
    double diag = 0.0;
    for (int j = 0; j < nr_; ++j) {
      if (i == j) continue;
      Dref_(i, j) = (bw[j] / bw[i]) / (xq_[i] - xq_[j]);
      diag -= Dref_(i, j);
    }
    Dref_(i, i) = diag;
  }
}

ShellScalar constant_extension(const ShellGrid& sg, const ScalarField& eta) {
  require_shape(sg.surface_grid().shape(), eta.shape(), "constant_extension");
  ShellScalar out;
  out.slice.assign(sg.nr(), eta);
  return out;
}

ShellVec constant_extension(const ShellGrid& sg, const VecField& v) {
  require_shape(sg.surface_grid().shape(), v.shape(), "constant_extension");
  ShellVec out;
  out.slice.assign(sg.nr(), v);
  return out;
}

ShellScalar normal_derivative(const ShellGrid& sg, const ShellScalar& u) {
  if (u.nr() != sg.nr()) throw TooFewRadialNodes("shell field has wrong radial size");
  const SurfaceGrid& g = sg.surface_grid();
  const Grid2 inv_len = 1.0 / (sg.spec().eps * sg.spec().g.v);
  ShellScalar out;
  out.slice.assign(sg.nr(), ScalarField::zero(g.shape()));
  for (int q = 0; q < sg.nr(); ++q) {
    Grid2 acc = Grid2::Zero(g.ns(), g.ntheta());
    for (int p = 0; p < sg.nr(); ++p) acc += sg.ref_diff()(q, p) * u.slice[p].v;
    out.slice[q].v = acc * inv_len;
  }
  return out;
}

ShellVec normal_derivative(const ShellGrid& sg, const ShellVec& u) {
  ShellVec out;
  out.slice.assign(sg.nr(), VecField::zero(sg.surface_grid().shape()));
  for (int c = 0; c < 3; ++c) {
    ShellScalar comp;
    comp.slice.reserve(sg.nr());
    for (int q = 0; q < sg.nr(); ++q) comp.slice.emplace_back(u.slice[q].comp(c));
    ShellScalar d = normal_derivative(sg, comp);
    for (int q = 0; q < sg.nr(); ++q) out.slice[q].comp(c) = d.slice[q].v;
  }
  return out;
}

ScalarField average_M(const ShellGrid& sg, const ShellScalar& u) {
  if (u.nr() != sg.nr()) throw TooFewRadialNodes("shell field has wrong radial size");
  const SurfaceGrid& g = sg.surface_grid();
  Grid2 acc = Grid2::Zero(g.ns(), g.ntheta());
  for (int q = 0; q < sg.nr(); ++q) acc += sg.ref_weight(q) * u.slice[q].v;
  return ScalarField(acc);
}

VecField average_M(const ShellGrid& sg, const ShellVec& u) {
  const SurfaceGrid& g = sg.surface_grid();
  VecField out(g.ns(), g.ntheta());
  for (int c = 0; c < 3; ++c) {
    Grid2 acc = Grid2::Zero(g.ns(), g.ntheta());
    for (int q = 0; q < sg.nr(); ++q) acc += sg.ref_weight(q) * u.slice[q].comp(c);
    out.comp(c) = acc;
  }
  return out;
}

VecField average_Mtau(const ShellGrid& sg, const ShellVec& u) {
  return project_tangent(sg.surface_grid(), average_M(sg, u));
}

ShellVec impermeable_extension_aux(const ShellGrid& sg) {
  const SurfaceGrid& g = sg.surface_grid();
  const ThinDomainSpec& sp = sg.spec();
  VecField tau0(g.ns(), g.ntheta()), tau1(g.ns(), g.ntheta());
  for (int k = 0; k < g.ns(); ++k)
    for (int j = 0; j < g.ntheta(); ++j) {
      tau0.set(k, j, boundary_frame(sp, k, j, 0).tau);
      tau1.set(k, j, boundary_frame(sp, k, j, 1).tau);
    }
  ShellVec psi;
  psi.slice.assign(sg.nr(), VecField::zero(g.shape()));
  for (int q = 0; q < sg.nr(); ++q) {
    const double x = sg.ref_node(q);
    // d - eps g0 = eps g x,  eps g1 - d = eps g (1-x)
    for (int c = 0; c < 3; ++c)
      psi.slice[q].comp(c) = sp.eps * (x * tau1.comp(c) + (1.0 - x) * tau0.comp(c));
  }
  return psi;
}

ShellVec impermeable_extension(const ShellGrid& sg, const VecField& v) {
  const SurfaceGrid& g = sg.surface_grid();
  require_shape(g.shape(), v.shape(), "impermeable_extension");
  ShellVec psi = impermeable_extension_aux(sg);
  ShellVec out;
  out.slice.assign(sg.nr(), VecField::zero(g.shape()));
  for (int q = 0; q < sg.nr(); ++q) {
    const ScalarField vpsi = dot(v, psi.slice[q]);
    for (int c = 0; c < 3; ++c)
      out.slice[q].comp(c) = v.comp(c) + vpsi.v * g.normal().comp(c);
  }
  return out;
}

double boundary_impermeability_residual(const ShellGrid& sg, const ShellVec& u) {
  const SurfaceGrid& g = sg.surface_grid();
  std::vector<double> x(sg.nr());
  for (int q = 0; q < sg.nr(); ++q) x[q] = sg.ref_node(q);
  const Eigen::VectorXd w0 = interp_weights(x, 0.0);
  const Eigen::VectorXd w1 = interp_weights(x, 1.0);
  double resid = 0.0;
  for (int k = 0; k < g.ns(); ++k)
    for (int j = 0; j < g.ntheta(); ++j) {
      for (int side = 0; side < 2; ++side) {
        const Eigen::VectorXd& w = side == 0 ? w0 : w1;
        Vec3 ub = Vec3::Zero();
        for (int q = 0; q < sg.nr(); ++q) ub += w[q] * u.slice[q].at(k, j);
        const BoundaryFrame f = boundary_frame(sg.spec(), k, j, side);
        resid = std::max(resid, std::abs(ub.dot(f.n_eps)));
      }
    }
  return resid;
}

AverageResidualSplit average_residual_split(const ShellGrid& sg, const ShellVec& u) {
  AverageResidualSplit out;
  out.average = impermeable_extension(sg, average_Mtau(sg, u));
  out.residual.slice.assign(sg.nr(), VecField::zero(sg.surface_grid().shape()));
  for (int q = 0; q < sg.nr(); ++q) out.residual.slice[q] = u.slice[q] - out.average.slice[q];
  return out;
}

ShellVec ambient_gradient(const ShellGrid& sg, const ShellScalar& u) {
  const SurfaceGrid& g = sg.surface_grid();
  const ThinDomainSpec& sp = sg.spec();
  const ShellScalar dn = normal_derivative(sg, u);
  ShellVec out;
  out.slice.assign(sg.nr(), VecField::zero(g.shape()));
  for (int q = 0; q < sg.nr(); ++q) {
    const VecField lat = tangential_gradient(g, u.slice[q]);
    const double x = sg.ref_node(q);
    for (int k = 0; k < g.ns(); ++k)
      for (int j = 0; j < g.ntheta(); ++j) {
        const SurfacePoint& p = g.point(k, j);
        const double r = sg.r_node(k, j, q);
        const double dnu = dn.slice[q](k, j);
        // correct the lattice gradient for the y-dependence of the radial node
        const Vec3 grad_r = sp.eps * (sp.grad_g0.at(k, j) + x * sp.grad_g.at(k, j));
        const Vec3 gy = lat.at(k, j) - dnu * grad_r;
        const Mat3 A = Mat3::Identity() - r * p.W;
        out.slice[q].set(k, j, A.partialPivLu().solve(gy) + dnu * p.n);
      }
  }
  return out;
}

ShellScalar ambient_divergence(const ShellGrid& sg, const ShellVec& u) {
  const SurfaceGrid& g = sg.surface_grid();
  ShellScalar out;
  out.slice.assign(sg.nr(), ScalarField::zero(g.shape()));
  for (int c = 0; c < 3; ++c) {
    ShellScalar comp;
    comp.slice.reserve(sg.nr());
    for (int q = 0; q < sg.nr(); ++q) comp.slice.emplace_back(u.slice[q].comp(c));
    const ShellVec grad = ambient_gradient(sg, comp);
    for (int q = 0; q < sg.nr(); ++q) out.slice[q].v += grad.slice[q].comp(c);
  }
  return out;
}

double shell_integral(const ShellGrid& sg, const ShellScalar& u) {
  const SurfaceGrid& g = sg.surface_grid();
  double acc = 0.0;
  for (int q = 0; q < sg.nr(); ++q) {
    Grid2 J(g.ns(), g.ntheta());
    for (int k = 0; k < g.ns(); ++k)
      for (int j = 0; j < g.ntheta(); ++j)
        J(k, j) = shell_jacobian(g.point(k, j), sg.r_node(k, j, q));
    acc += sg.ref_weight(q) *
           (g.mass().v * sg.spec().eps * sg.spec().g.v * J * u.slice[q].v).sum();
  }
  return acc;
}

double shell_l2_norm(const ShellGrid& sg, const ShellScalar& u) {
  ShellScalar sq;
  sq.slice.reserve(sg.nr());
  for (int q = 0; q < sg.nr(); ++q) sq.slice.emplace_back(Grid2(u.slice[q].v * u.slice[q].v));
  return std::sqrt(std::max(0.0, shell_integral(sg, sq)));
}

double shell_l2_norm(const ShellGrid& sg, const ShellVec& u) {
  ShellScalar sq;
  sq.slice.reserve(sg.nr());
  for (int q = 0; q < sg.nr(); ++q) {
    const VecField& s = u.slice[q];
    sq.slice.emplace_back(Grid2(s.x * s.x + s.y * s.y + s.z * s.z));
  }
  return std::sqrt(std::max(0.0, shell_integral(sg, sq)));
}

AveragedGradientReport averaged_gradient_check(const ShellGrid& sg, const ShellScalar& phi) {
  const SurfaceGrid& g = sg.surface_grid();
  const ThinDomainSpec& sp = sg.spec();
  const VecField lhs = tangential_gradient(g, average_M(sg, phi));

  const ShellVec grad = ambient_gradient(sg, phi);
  const ShellScalar dn = normal_derivative(sg, phi);
  ShellVec integrand_B;
  integrand_B.slice.assign(sg.nr(), VecField::zero(g.shape()));
  ShellVec integrand_psi;
  integrand_psi.slice.assign(sg.nr(), VecField::zero(g.shape()));
  for (int q = 0; q < sg.nr(); ++q) {
    const double x = sg.ref_node(q);
    for (int k = 0; k < g.ns(); ++k)
      for (int j = 0; j < g.ntheta(); ++j) {
        const SurfacePoint& p = g.point(k, j);
        const double r = sg.r_node(k, j, q);
        const Mat3 B = (Mat3::Identity() - r * p.W) * p.P;
        integrand_B.slice[q].set(k, j, B * grad.slice[q].at(k, j));
        // psi_eps = [(d - eps g0) grad g1 + (eps g1 - d) grad g0] / g
        const Vec3 psi = sp.eps * (x * sp.grad_g1.at(k, j) + (1.0 - x) * sp.grad_g0.at(k, j));
        integrand_psi.slice[q].set(k, j, dn.slice[q](k, j) * psi);
      }
  }
  const VecField rhs = average_M(sg, integrand_B) + average_M(sg, integrand_psi);
  AveragedGradientReport rep;
  rep.lhs_norm = l2_norm(g, lhs);
  rep.residual_rel = l2_norm(g, lhs - rhs) / std::max(rep.lhs_norm, 1e-300);
  return rep;
}

// ---------------------------------------------------------------------------
// Seeded smooth fields
// ---------------------------------------------------------------------------

namespace {

std::vector<std::function<double(const Vec3&)>> poly_basis() {
  return {
      [](const Vec3&) { return 1.0; },
      [](const Vec3& y) { return y[0]; },
      [](const Vec3& y) { return y[1]; },
      [](const Vec3& y) { return y[2]; },
      [](const Vec3& y) { return y[0] * y[1]; },
      [](const Vec3& y) { return y[1] * y[2]; },
      [](const Vec3& y) { return y[0] * y[2]; },
      [](const Vec3& y) { return y[0] * y[0] - y[1] * y[1]; },
      [](const Vec3& y) { return y[2] * y[2]; },
  };
}

}  // namespace

ScalarField random_smooth_scalar_field(const SurfaceGrid& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  const auto basis = poly_basis();
  std::vector<double> c(basis.size());
  for (auto& ci : c) ci = dist(rng);
  return g.sample([&](const Vec3& y) {
    double acc = 0.0;
    for (size_t i = 0; i < basis.size(); ++i) acc += c[i] * basis[i](y);
    return acc;
  });
}

VecField random_smooth_tangent_field(const SurfaceGrid& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  const auto basis = poly_basis();
  std::vector<std::array<double, 3>> c(basis.size());
  for (auto& ci : c)
    for (auto& x : ci) x = dist(rng);
  VecField raw = g.sample_vec([&](const Vec3& y) {
    Vec3 acc = Vec3::Zero();
    for (size_t i = 0; i < basis.size(); ++i) {
      const double b = basis[i](y);
      acc += b * Vec3(c[i][0], c[i][1], c[i][2]);
    }
    return acc;
  });
  return project_tangent(g, raw);
}

// ---------------------------------------------------------------------------
// Rate studies
// ---------------------------------------------------------------------------

double fit_loglog_slope(const std::vector<RatePoint>& pts) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(pts.size());
  for (const auto& p : pts) {
    if (!(p.quantity > 0)) return std::nan("");
    const double x = std::log(p.eps), y = std::log(p.quantity);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  return (n * sxy - sx * sy) / denom;
}

namespace {

struct RateContext {
  const SurfaceGrid* grid;
  const RateOptions* opt;
};

// One evaluation of the estimate's LHS at a given epsilon on a given grid.
RatePoint evaluate_estimate(const SurfaceGrid& grid, RateEstimate which, double eps,
                            const RateOptions& opt) {
  RatePoint pt;
  pt.eps = eps;
  ThinDomainSpec spec = [&] {
    try {
      return ThinDomainSpec::make(grid, opt.g0, opt.g1, eps);
    } catch (const OutsideReach& e) {
      throw InvalidEpsilonList(std::string("epsilon invalid for spec: ") + e.what());
    }
  }();
  ShellGrid sg(spec, opt.nr);

  switch (which) {
    case RateEstimate::CompN: {
      double worst = 0.0;
      for (int side = 0; side < 2; ++side) {
        const VecField& gg = side == 0 ? spec.grad_g0 : spec.grad_g1;
        const double sgn = side == 1 ? 1.0 : -1.0;
        for (int k = 0; k < grid.ns(); ++k)
          for (int j = 0; j < grid.ntheta(); ++j) {
            const BoundaryFrame f = boundary_frame(spec, k, j, side);
            const Vec3 approx = sgn * (grid.point(k, j).n - eps * gg.at(k, j));
            worst = std::max(worst, (f.n_eps - approx).norm());
          }
      }
      pt.quantity = worst;
      pt.reference = 1.0;
      break;
    }
    case RateEstimate::ExTanDiv: {
      const VecField v = random_smooth_tangent_field(grid, opt.seed);
      const ShellVec Ev = impermeable_extension(sg, v);
      const ShellScalar div = ambient_divergence(sg, Ev);
      const ScalarField target(
          Grid2(tangential_divergence(grid, scale(spec.g, v)).v / spec.g.v));
      double worst = 0.0;
      for (int q = 0; q < sg.nr(); ++q)
        worst = std::max(worst, (div.slice[q].v - target.v).abs().maxCoeff());
      const MatrixField gv = tangential_gradient_matrix(grid, v);
      double ref = 0.0;
      for (int k = 0; k < grid.ns(); ++k)
        for (int j = 0; j < grid.ntheta(); ++j)
          ref = std::max(ref, v.at(k, j).norm() + gv.at(k, j).norm());
      pt.quantity = worst;
      pt.reference = ref;
      break;
    }
    case RateEstimate::LpETDSol: {
      const VecField v0 = random_smooth_tangent_field(grid, opt.seed);
      const VecField v = project_weighted_solenoidal(grid, spec.g, v0, opt.solver_tol).solenoidal;
      const ShellVec Ev = impermeable_extension(sg, v);
      const ShellScalar div = ambient_divergence(sg, Ev);
      pt.quantity = shell_l2_norm(sg, div);
      pt.reference = h1_norm(grid, v);
      break;
    }
    case RateEstimate::ADivTanLp: {
      const VecField v0 = random_smooth_tangent_field(grid, opt.seed);
      const VecField v = project_weighted_solenoidal(grid, spec.g, v0, opt.solver_tol).solenoidal;
      ShellVec u = impermeable_extension(sg, v);
      // eps-scaled tangential radial correction
      const VecField w = random_smooth_tangent_field(grid, opt.seed + 101);
      for (int q = 0; q < sg.nr(); ++q) {
        const double x = sg.ref_node(q);
        const double rho = x * x - x;  // vanishes at both boundaries
        for (int c = 0; c < 3; ++c) u.slice[q].comp(c) += eps * rho * w.comp(c);
      }
      const VecField mtau = average_Mtau(sg, u);
      pt.quantity = l2_norm(grid, tangential_divergence(grid, scale(spec.g, mtau)));
      pt.reference = shell_l2_norm(sg, ambient_divergence(sg, u));  // solenoidality defect
      break;
    }
    case RateEstimate::AveDiffDom: {
      ShellScalar phi;
      phi.slice.assign(sg.nr(), ScalarField::zero(grid.shape()));
      for (int q = 0; q < sg.nr(); ++q)
        for (int k = 0; k < grid.ns(); ++k)
          for (int j = 0; j < grid.ntheta(); ++j) {
            const double r = sg.r_node(k, j, q);
            const double y3 = grid.point(k, j).pos[2];
            phi.slice[q](k, j) = r + y3 * r * r;
          }
      const ScalarField m = average_M(sg, phi);
      ShellScalar diff = phi;
      for (int q = 0; q < sg.nr(); ++q) diff.slice[q].v -= m.v;
      const ShellScalar dn = normal_derivative(sg, phi);
      const double dn_norm = shell_l2_norm(sg, dn);
      pt.quantity = shell_l2_norm(sg, diff) / std::max(dn_norm, 1e-300);
      pt.reference = dn_norm;
      break;
    }
  }
  return pt;
}

}  // namespace

RateStudy epsilon_rate_study(const SurfaceGrid& grid, RateEstimate which,
                             const std::vector<double>& eps_list, const RateOptions& opt) {
  if (eps_list.size() < 4)
    throw InvalidEpsilonList("rate study needs at least 4 epsilon values");
  for (size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1]))
      throw InvalidEpsilonList("epsilon list must be strictly decreasing");

  RateStudy study;
  for (double eps : eps_list) study.points.push_back(evaluate_estimate(grid, which, eps, opt));
  study.slope = fit_loglog_slope(study.points);

  if (opt.spatial_audit) {
    const double eps_min = eps_list.back();
    int ns2 = static_cast<int>(std::ceil(grid.ns() * opt.audit_refine));
    int nt2 = static_cast<int>(std::ceil(grid.ntheta() * opt.audit_refine));
    if (nt2 % 2 != 0) ++nt2;
    SurfaceGrid fine(grid.surface(), ns2, nt2);
    const RatePoint ref = evaluate_estimate(fine, which, eps_min, opt);
    const double base = study.points.back().quantity;
    study.spatial_audit_change = std::abs(ref.quantity - base) / std::max(std::abs(base), 1e-300);
    study.spatial_audit_ok = study.spatial_audit_change <= opt.audit_tol;
  }
  return study;
}

}  // namespace thinshell
