#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "thinshell/surface_calculus.hpp"
#include "thinshell/thin_shell.hpp"

using namespace thinshell;

namespace {

VecField killing_e3(const SurfaceGrid& g) {
  return g.sample_vec([](const Vec3& y) { return Vec3(-y[1], y[0], 0.0); });
}

double rel_err(const SurfaceGrid& g, const VecField& a, const VecField& b) {
  return l2_norm(g, a - b) / std::max(l2_norm(g, b), 1e-300);
}

}  // namespace

TEST_CASE("chart differentiation plumbing") {
  SUBCASE("dtheta is spectrally exact on resolved modes") {
    SurfaceGrid g(Surface::torus(3.0, 1.0), 16, 32);
    for (int m : {1, 3, 7}) {
      const ScalarField f = g.sample_chart([m](double, double th) { return std::cos(m * th); });
      const ScalarField df = g.sample_chart([m](double, double th) { return -m * std::sin(m * th); });
      CHECK((g.dtheta(f.v) - df.v).abs().maxCoeff() < 1e-11);
      const ScalarField d2 = g.sample_chart([m](double, double th) { return -m * m * std::cos(m * th); });
      CHECK((g.dtheta2(f.v) - d2.v).abs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("ds_adjoint is the exact transpose of ds") {
    for (const Surface& s : {Surface::sphere(1.0), Surface::torus(3.0, 1.0)}) {
      SurfaceGrid g(s, 20, 16);
      const ScalarField a = random_smooth_scalar_field(g, 3);
      const ScalarField b = random_smooth_scalar_field(g, 4);
      const double lhs = (g.ds(a.v) * b.v).sum();
      const double rhs = (a.v * g.ds_adjoint(b.v)).sum();
      CHECK(std::abs(lhs - rhs) < 1e-10 * (std::abs(lhs) + 1.0));
      const double lt = (g.dtheta(a.v) * b.v).sum();
      const double rt = (a.v * g.dtheta_adjoint(b.v)).sum();
      CHECK(std::abs(lt - rt) < 1e-10 * (std::abs(lt) + 1.0));
    }
  }
  SUBCASE("theta analysis/synthesis round trip") {
    SurfaceGrid g(Surface::sphere(1.0), 12, 24);
    const ScalarField f = random_smooth_scalar_field(g, 5);
    Grid2 fc, fs;
    g.theta_modes(f.v, fc, fs);
    CHECK((g.theta_synthesis(fc, fs) - f.v).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("ds differentiates across sphere poles") {
    // y1 = phi(s) cos(theta) couples the theta halves through the pole
    SurfaceGrid g(Surface::sphere(1.0), 48, 48);
    const ScalarField f = g.sample([](const Vec3& y) { return y[0]; });
    const ScalarField exact = g.sample_chart(
        [](double s, double th) { return std::cos(s) * std::cos(th); });
    CHECK((g.ds(f.v) - exact.v).abs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("tangential gradient") {
  SUBCASE("constants map to zero") {
    SurfaceGrid g(Surface::torus(3.0, 1.0), 24, 24);
    const VecField z = tangential_gradient(g, ScalarField::constant(g.shape(), 4.2));
    CHECK(z.max_norm() < 1e-13);
  }
  SUBCASE("sphere height function: grad y3 = e3 - y3 y") {
    SurfaceGrid g(Surface::sphere(1.0), 48, 48);
    const VecField got = tangential_gradient(g, g.sample([](const Vec3& y) { return y[2]; }));
    const VecField oracle = g.sample_vec([](const Vec3& y) {
      return Vec3(Vec3(0, 0, 1) - y[2] * y);
    });
    CHECK(rel_err(g, got, oracle) < 1e-11);
    CHECK(max_normal_component(g, got) < 1e-12);
  }
  SUBCASE("refinement study on the torus against the chart-formula oracle") {
    const Surface t = Surface::torus(3.0, 1.0);
    auto err = [&](int n) {
      SurfaceGrid g(t, n, n);
      const double L = t.length();
      const ScalarField eta = g.sample_chart([L](double s, double th) {
        return std::cos(th) * std::sin(2.0 * M_PI * s / L);
      });
      // closed-form chart derivative oracle
      VecField oracle(g.ns(), g.ntheta());
      for (int k = 0; k < g.ns(); ++k)
        for (int j = 0; j < g.ntheta(); ++j) {
          const SurfacePoint& p = g.point(k, j);
          const double s = g.s_node(k), th = g.theta_node(j);
          const double ds = std::cos(th) * (2.0 * M_PI / L) * std::cos(2.0 * M_PI * s / L);
          const double dth = -std::sin(th) * std::sin(2.0 * M_PI * s / L);
          oracle.set(k, j, Vec3(ds * p.t_s + dth / (p.phi * p.phi) * p.t_th));
        }
      return l2_norm(g, tangential_gradient(g, eta) - oracle);
    };
    const double e32 = err(32), e64 = err(64);
    CHECK(std::log2(e32 / e64) > 4.0);  // 6th-order stencils, spectral in theta
  }
}

TEST_CASE("tangential divergence") {
  SurfaceGrid g(Surface::sphere(1.0), 48, 48);
  SUBCASE("zero maps to zero") {
    CHECK(tangential_divergence(g, VecField::zero(g.shape())).max_abs() == 0.0);
  }
  SUBCASE("Killing fields are divergence free") {
    CHECK(tangential_divergence(g, killing_e3(g)).max_abs() < 1e-10);
  }
  SUBCASE("div_G P = H n") {
    MatrixField P(g.ns(), g.ntheta());
    for (int k = 0; k < g.ns(); ++k)
      for (int j = 0; j < g.ntheta(); ++j) P.set(k, j, g.point(k, j).P);
    VecField divP = tangential_divergence(g, P);
    VecField Hn = g.normal();
    for (int c = 0; c < 3; ++c) Hn.comp(c) *= g.H_field().v;
    CHECK(l2_norm(g, divP - Hn) < 1e-9);
  }
  SUBCASE("Stokes: integral of div of a tangent field tends to zero") {
    const VecField v = random_smooth_tangent_field(g, 11);
    const double total = l2_inner(g, tangential_divergence(g, v),
                                  ScalarField::constant(g.shape(), 1.0));
    CHECK(std::abs(total) < 1e-9 * h1_norm(g, v));
  }
}

TEST_CASE("strain rate") {
  SurfaceGrid g(Surface::torus(3.0, 1.0), 48, 48);
  SUBCASE("rigid tangential fields have vanishing strain") {
    const MatrixField D = strain_rate(g, killing_e3(g));
    double worst = 0.0;
    for (int k = 0; k < g.ns(); ++k)
      for (int j = 0; j < g.ntheta(); ++j) worst = std::max(worst, D.at(k, j).norm());
    CHECK(worst < 1e-9);
  }
  SUBCASE("symmetry, n-annihilation, trace = divergence") {
    const VecField v = random_smooth_tangent_field(g, 21);
    const MatrixField D = strain_rate(g, v);
    const ScalarField div = tangential_divergence(g, v);
    double sym = 0, ann = 0, tr = 0;
    for (int k = 0; k < g.ns(); ++k)
      for (int j = 0; j < g.ntheta(); ++j) {
        const Mat3 d = D.at(k, j);
        const Vec3 n = g.point(k, j).n;
        sym = std::max(sym, (d - d.transpose()).norm());
        ann = std::max(ann, std::max((d * n).norm(), (d.transpose() * n).norm()));
        tr = std::max(tr, std::abs(d.trace() - div(k, j)));
      }
    CHECK(sym < 1e-12);
    CHECK(ann < 1e-11);
    CHECK(tr < 1e-10 * (1.0 + v.max_norm()));
  }
  SUBCASE("zero maps to zero") {
    const MatrixField D = strain_rate(g, VecField::zero(g.shape()));
    CHECK(D.m[0][0].abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("covariant derivative") {
  SurfaceGrid g(Surface::sphere(1.0), 48, 48);
  const VecField X = killing_e3(g);
  SUBCASE("zero direction gives zero") {
    const VecField z = covariant_derivative(g, X, VecField::zero(g.shape()));
    CHECK(z.max_norm() < 1e-14);
  }
  SUBCASE("explicit sphere computation: cov_X X = y3 (e3 - y3 y)") {
    const VecField got = covariant_derivative(g, X, X);
    const VecField oracle = g.sample_vec([](const Vec3& y) {
      return Vec3(y[2] * (Vec3(0, 0, 1) - y[2] * y));
    });
    CHECK(rel_err(g, got, oracle) < 1e-10);
  }
  SUBCASE("Gauss formula and metric compatibility residuals decay") {
    auto residuals = [&](int n) {
      SurfaceGrid gr(Surface::sphere(1.0), n, n);
      const VecField Xs = random_smooth_tangent_field(gr, 31);
      const VecField Ys = random_smooth_tangent_field(gr, 32);
      const VecField Zs = random_smooth_tangent_field(gr, 33);
      const MatrixField gradX = tangential_gradient_matrix(gr, Xs);
      VecField gauss(gr.ns(), gr.ntheta());
      const VecField covYX = covariant_derivative(gr, Xs, Ys);
      for (int k = 0; k < gr.ns(); ++k)
        for (int j = 0; j < gr.ntheta(); ++j) {
          const auto& p = gr.point(k, j);
          const Vec3 dYX = gradX.at(k, j).transpose() * Ys.at(k, j);
          const double wxy = (p.W * Xs.at(k, j)).dot(Ys.at(k, j));
          gauss.set(k, j, Vec3(dYX - covYX.at(k, j) - wxy * p.n));
        }
      const double g1 = l2_norm(gr, gauss);
      // metric compatibility: Z . grad(X.Y) = cov_Z X . Y + X . cov_Z Y
      const VecField gradXY = tangential_gradient(gr, dot(Xs, Ys));
      const ScalarField lhs = dot(gradXY, Zs);
      const ScalarField rhs = dot(covariant_derivative(gr, Xs, Zs), Ys) +
                              dot(Xs, covariant_derivative(gr, Ys, Zs));
      const double g2 = l2_norm(gr, lhs - rhs);
      return std::pair{g1, g2};
    };
    const auto [a32, b32] = residuals(32);
    const auto [a64, b64] = residuals(64);
    CHECK(std::log2(a32 / a64) > 3.0);
    CHECK(std::log2(b32 / b64) > 3.0);
  }
}

TEST_CASE("Laplace-Beltrami") {
  SurfaceGrid g(Surface::sphere(1.0), 64, 64);
  SUBCASE("constants map to zero") {
    CHECK(laplace_beltrami(g, ScalarField::constant(g.shape(), 2.0)).max_abs() < 1e-10);
  }
  SUBCASE("degree-1 eigenfunction: lap y3 = -2 y3") {
    const ScalarField y3 = g.sample([](const Vec3& y) { return y[2]; });
    const ScalarField got = laplace_beltrami(g, y3);
    CHECK(l2_norm(g, got - ScalarField(Grid2(-2.0 * y3.v))) < 1e-9);
  }
  SUBCASE("degree-2 eigenfunction: lap (y3^2 - 1/3) = -6 (y3^2 - 1/3)") {
    const ScalarField eta = g.sample([](const Vec3& y) { return y[2] * y[2] - 1.0 / 3.0; });
    const ScalarField got = laplace_beltrami(g, eta);
    CHECK(l2_norm(g, got - ScalarField(Grid2(-6.0 * eta.v))) < 1e-9);
  }
  SUBCASE("self-adjointness and zero mean") {
    const ScalarField a = random_smooth_scalar_field(g, 41);
    const ScalarField b = random_smooth_scalar_field(g, 42);
    const double d = l2_inner(g, laplace_beltrami(g, a), b) -
                     l2_inner(g, a, laplace_beltrami(g, b));
    CHECK(std::abs(d) < 1e-8);
    const double mean = l2_inner(g, laplace_beltrami(g, a), ScalarField::constant(g.shape(), 1.0));
    CHECK(std::abs(mean) < 1e-8);
  }
}

TEST_CASE("Bochner Laplacian") {
  SurfaceGrid g(Surface::sphere(1.0), 48, 48);
  SUBCASE("zero maps to zero") {
    CHECK(bochner_laplacian(g, VecField::zero(g.shape())).max_norm() == 0.0);
  }
  SUBCASE("Killing field on the unit sphere: lap_B v = -v and P lap_G v = -2v") {
    const VecField v = killing_e3(g);
    const VecField lb = bochner_laplacian(g, v);
    CHECK(rel_err(g, lb, -1.0 * v) < 1e-9);
    // P lap_G v = lap_B v - W^2 v with W^2 = P on tangent vectors
    VecField plap = project_tangent(g, laplace_beltrami(g, v));
    CHECK(rel_err(g, plap, -2.0 * v) < 1e-9);
  }
  SUBCASE("frame-definition weak agreement decays under refinement") {
    auto defect = [&](int n) {
      SurfaceGrid gr(Surface::torus(3.0, 1.0), n, n);
      const VecField v = random_smooth_tangent_field(gr, 51);
      const VecField w = random_smooth_tangent_field(gr, 52);
      const VecField lb = bochner_laplacian(gr, v);
      // -(sum_i cov_i v . cov_i w) with the chart orthonormal frame
      VecField t1 = gr.tangent_s();
      VecField t2 = gr.tangent_theta();
      for (int c = 0; c < 3; ++c) t2.comp(c) /= gr.phi_field().v;
      const VecField c1v = covariant_derivative(gr, v, t1);
      const VecField c2v = covariant_derivative(gr, v, t2);
      const VecField c1w = covariant_derivative(gr, w, t1);
      const VecField c2w = covariant_derivative(gr, w, t2);
      const double rhs = -(l2_inner(gr, c1v, c1w) + l2_inner(gr, c2v, c2w));
      const double lhs = l2_inner(gr, lb, w);
      return std::abs(lhs - rhs) / (h1_norm(gr, v) * h1_norm(gr, w));
    };
    const double d32 = defect(32), d64 = defect(64);
    CHECK(std::log2(d32 / d64) > 3.0);
  }
  SUBCASE("divergence-free identity 2 P div D(v) = lap_B v + K v under refinement") {
    auto resid = [&](int n) {
      SurfaceGrid gr(Surface::sphere(1.0), n, n);
      const VecField v0 = random_smooth_tangent_field(gr, 61);
      const VecField v = project_weighted_solenoidal(
                             gr, ScalarField::constant(gr.shape(), 1.0), v0, 1e-12)
                             .solenoidal;
      const VecField divD = project_tangent(gr, tangential_divergence(gr, strain_rate(gr, v)));
      const VecField boch = bochner_laplacian(gr, v);
      VecField r(gr.ns(), gr.ntheta());
      for (int c = 0; c < 3; ++c)
        r.comp(c) = 2.0 * divD.comp(c) - boch.comp(c) - gr.K_field().v * v.comp(c);
      return l2_norm(gr, r) / h1_norm(gr, v);
    };
    const double r32 = resid(32), r64 = resid(64);
    CHECK(std::log2(r32 / r64) > 3.0);
  }
}

TEST_CASE("tangency preservation across operations") {
  SurfaceGrid g(Surface::torus(3.0, 1.0), 32, 32);
  const VecField v = random_smooth_tangent_field(g, 71);
  const ScalarField eta = random_smooth_scalar_field(g, 72);
  auto tangency_ok = [&](const VecField& out) {
    const ScalarField vn = dot(out, g.normal());
    double worst = 0.0;
    for (int k = 0; k < g.ns(); ++k)
      for (int j = 0; j < g.ntheta(); ++j)
        worst = std::max(worst, std::abs(vn(k, j)) / (1.0 + out.at(k, j).norm()));
    return worst < 1e-10;
  };
  CHECK(tangency_ok(tangential_gradient(g, eta)));
  CHECK(tangency_ok(covariant_derivative(g, v, v)));
  CHECK(tangency_ok(bochner_laplacian(g, v)));
}

TEST_CASE("integration by parts decays at the differentiation order") {
  auto defect = [&](int n) {
    SurfaceGrid g(Surface::sphere(1.0), n, n);
    const ScalarField eta = random_smooth_scalar_field(g, 81);
    const VecField v = random_smooth_tangent_field(g, 82);
    const double d = l2_inner(g, tangential_gradient(g, eta), v) +
                     l2_inner(g, eta, tangential_divergence(g, v));
    return std::abs(d) / (l2_norm(g, eta) * h1_norm(g, v));
  };
  const double d24 = defect(24), d48 = defect(48);
  CHECK(std::log2(d24 / d48) > 3.0);
  CHECK(d48 < 1e-8);
}

TEST_CASE("Korn constant estimator") {
  SurfaceGrid g(Surface::sphere(1.0), 32, 32);
  SUBCASE("Killing-only trial space on the sphere: quotient = 2") {
    // D_G vanishes; the pair degenerates to ||grad v||^2 / ||v||^2 = 2
    const VecField w = killing_e3(g);
    const KornEstimate est = korn_estimate_from_fields(g, {w});
    const double direct = l2_norm(g, tangential_gradient_matrix(g, w));
    const double denom = l2_norm(g, w);
    const double quotient = direct * direct / (denom * denom);
    CHECK(std::abs(est.c_est - quotient) < 1e-8 * quotient);
    CHECK(est.c_est == doctest::Approx(2.0).epsilon(1e-6));
  }
  SUBCASE("gradient-field quotient agrees with direct quadrature") {
    const VecField v = tangential_gradient(g, g.sample([](const Vec3& y) { return y[2]; }));
    const KornEstimate est = korn_estimate_from_fields(g, {v});
    const MatrixField grad = tangential_gradient_matrix(g, v);
    const MatrixField D = strain_rate(g, v);
    const double num = std::pow(l2_norm(g, grad), 2);
    const double den = std::pow(l2_norm(g, D), 2) + std::pow(l2_norm(g, v), 2);
    CHECK(std::abs(est.c_est - num / den) < 1e-8 * (num / den));
  }
  SUBCASE("empty trial space throws") {
    CHECK_THROWS_AS(korn_estimate_from_fields(g, {}), EigSolverFailure);
  }
  SUBCASE("default trial space gives a finite positive estimate") {
    const KornEstimate est = korn_constant_estimate(g, 3, 3);
    CHECK(est.c_est > 0.0);
    CHECK(est.trial_dim > 0);
    CHECK(std::isfinite(est.c_est));
  }
}
