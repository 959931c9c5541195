#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "thinshell/surface_calculus.hpp"
#include "thinshell/surface_geometry.hpp"

using namespace thinshell;

namespace {

// Brute-force triangulated area of the offset surface Gamma_h, Richardson
// extrapolated over two resolutions (independent of the quadrature path).
double triangulated_offset_area(const Surface& surf, const std::function<double(const Vec3&)>& h,
                                int n) {
  const double L = surf.length();
  const bool periodic = surf.periodic_profile();
  const int nsv = n + 1;
  auto vertex = [&](int i, int j) {
    double s = L * i / n;
    const double th = 2.0 * M_PI * j / n;
    const SurfacePoint p = surf.at(s, th);
    return Vec3(p.pos + h(p.pos) * p.n);
  };
  double area = 0.0;
  for (int i = 0; i < (periodic ? n : nsv - 1); ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec3 a = vertex(i, j);
      const Vec3 b = vertex((i + 1) % nsv == nsv - 1 && periodic ? 0 : i + 1, j);
      const Vec3 c = vertex(i, (j + 1) % n);
      const Vec3 d = vertex((i + 1) % nsv == nsv - 1 && periodic ? 0 : i + 1, (j + 1) % n);
      area += 0.5 * ((b - a).cross(c - a)).norm();
      area += 0.5 * ((b - d).cross(c - d)).norm();
    }
  }
  return area;
}

double richardson_area(const Surface& surf, const std::function<double(const Vec3&)>& h, int n) {
  const double a1 = triangulated_offset_area(surf, h, n);
  const double a2 = triangulated_offset_area(surf, h, 2 * n);
  return (4.0 * a2 - a1) / 3.0;
}

}  // namespace

TEST_CASE("unit sphere: W = -P and K = 1 at arbitrary chart points") {
  const Surface s = Surface::sphere(1.0);
  for (double sc : {0.3, 1.1, 2.4}) {
    for (double th : {0.0, 1.7, 5.5}) {
      const SurfacePoint p = s.at(sc, th);
      CHECK((p.W + p.P).norm() < 1e-13);
      CHECK(p.K == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(p.H == doctest::Approx(-2.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("surface quantities satisfy the pointwise invariants") {
  for (const Surface& s : {Surface::sphere(2.0), Surface::torus(3.0, 1.0),
                           Surface::revolution(wavy_torus_profile(3.0, 1.0, 0.12, 3))}) {
    SurfaceGrid g(s, 24, 24);
    for (int k = 0; k < g.ns(); k += 5)
      for (int j = 0; j < g.ntheta(); j += 5) {
        const SurfacePoint& p = g.point(k, j);
        CHECK((p.P * p.P - p.P).norm() < 1e-12);
        CHECK((p.P * p.Q).norm() < 1e-12);
        CHECK(std::abs(p.n.norm() - 1.0) < 1e-12);
        CHECK((p.W * p.n).norm() < 1e-12);
        CHECK((p.P * p.W - p.W).norm() < 1e-12);
        CHECK((p.W * p.P - p.W).norm() < 1e-12);
        CHECK(std::abs(p.W.trace() - p.H) < 1e-12);
        CHECK(std::abs(0.5 * (p.H * p.H - (p.W * p.W).trace()) - p.K) < 1e-12);
        // analytic principal curvatures agree with the W eigenstructure
        CHECK(std::abs(p.kappa_s * p.kappa_th - p.K) < 1e-11);
      }
  }
}

TEST_CASE("torus Gaussian curvature vanishes on the parabolic circles") {
  const Surface t = Surface::torus(3.0, 1.0);
  // cos(s/a) = 0 at s = pi/2 (a = 1)
  const SurfacePoint p = t.at(M_PI / 2.0, 0.9);
  // oracle: K = -phi''(s)/phi(s) for the arc-length profile
  const double oracle = -t.profile().d2phi(M_PI / 2.0) / t.profile().phi(M_PI / 2.0);
  CHECK(std::abs(oracle) < 1e-14);
  CHECK(std::abs(p.K - oracle) < 1e-12);
}

TEST_CASE("K equals -phi''/phi on generic revolution surfaces") {
  const Surface w = Surface::revolution(wavy_torus_profile(3.0, 1.0, 0.15, 3));
  for (double s : {0.37, 2.0, 4.4}) {
    const SurfacePoint p = w.at(s, 1.2);
    const double oracle = -w.profile().d2phi(s) / w.profile().phi(s);
    CHECK(std::abs(p.K - oracle) < 1e-9 * std::max(1.0, std::abs(oracle)));
  }
  const Surface v = Surface::revolution(wavy_sphere_profile(1.0, 0.1, 2));
  for (double s : {0.5, 1.5, 2.5}) {
    const SurfacePoint p = v.at(s, 0.4);
    const double oracle = -v.profile().d2phi(s) / v.profile().phi(s);
    CHECK(std::abs(p.K - oracle) < 1e-9 * std::max(1.0, std::abs(oracle)));
  }
}

TEST_CASE("shell jacobian") {
  const Surface s = Surface::sphere(1.0);
  const SurfacePoint p = s.at(1.0, 0.5);
  SUBCASE("r = 0 gives exactly 1") { CHECK(shell_jacobian(p, 0.0) == 1.0); }
  SUBCASE("unit sphere r = 0.1 gives 1.21 against the determinant oracle") {
    const double J = shell_jacobian(p, 0.1);
    CHECK(J == doctest::Approx(1.21).epsilon(1e-12));
    const Mat3 A = Mat3::Identity() - 0.1 * p.W;
    CHECK(J == doctest::Approx(A.determinant()).epsilon(1e-12));
  }
  SUBCASE("expansion J = 1 - r H + r^2 K") {
    for (double r : {-0.2, 0.05, 0.3})
      CHECK(std::abs(shell_jacobian(p, r) - (1.0 - r * p.H + r * r * p.K)) < 1e-12);
  }
  SUBCASE("parabolic torus point: J = 1 - r kappa1 with kappa2 = 0") {
    const Surface t = Surface::torus(3.0, 1.0);
    const SurfacePoint q = t.at(M_PI / 2.0, 0.0);
    Eigen::SelfAdjointEigenSolver<Mat3> es(q.W);  // eigen-decomposition oracle
    // eigenvalues: two principal curvatures and 0 (normal direction)
    std::vector<double> ev{es.eigenvalues()[0], es.eigenvalues()[1], es.eigenvalues()[2]};
    std::sort(ev.begin(), ev.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
    CHECK(std::abs(ev[1]) < 1e-12);  // kappa2 = 0 here
    const double r = 0.2;
    CHECK(shell_jacobian(q, r) == doctest::Approx(1.0 - r * ev[0]).epsilon(1e-12));
  }
  SUBCASE("outside reach throws") {
    CHECK_THROWS_AS(shell_jacobian(p, -1.0), OutsideReach);  // kappa = -1: J(-1) = 0
  }
}

TEST_CASE("surface integrals hit the closed forms") {
  SurfaceGrid sph(Surface::sphere(1.0), 64, 64);
  const ScalarField one = ScalarField::constant(sph.shape(), 1.0);
  CHECK(std::abs(surface_integral(sph, one) - 4.0 * M_PI) < 1e-10);
  CHECK(surface_integral(sph, ScalarField::zero(sph.shape())) == 0.0);

  SurfaceGrid tor(Surface::torus(3.0, 1.0), 64, 64);
  const ScalarField onet = ScalarField::constant(tor.shape(), 1.0);
  CHECK(std::abs(surface_integral(tor, onet) - 12.0 * M_PI * M_PI) < 1e-9);
}

TEST_CASE("offset surface integral") {
  SurfaceGrid g(Surface::sphere(1.0), 48, 48);
  const ScalarField one = ScalarField::constant(g.shape(), 1.0);
  SUBCASE("h = 0 reduces to surface_integral bit for bit") {
    const ScalarField h0 = ScalarField::zero(g.shape());
    CHECK(offset_surface_integral(g, one, h0) == surface_integral(g, one));
  }
  SUBCASE("constant offset gives the sphere of radius 1+c") {
    const double c = 0.17;
    const ScalarField h = ScalarField::constant(g.shape(), c);
    CHECK(offset_surface_integral(g, one, h) ==
          doctest::Approx(4.0 * M_PI * (1 + c) * (1 + c)).epsilon(1e-12));
  }
  SUBCASE("nonconstant offset matches the triangulation oracle") {
    auto hfun = [](const Vec3& y) { return 0.05 * (1.0 + 0.2 * y[2]); };
    const ScalarField h = g.sample(hfun);
    const double ours = offset_surface_integral(g, one, h);
    const double oracle = richardson_area(g.surface(), hfun, 192);
    CHECK(std::abs(ours - oracle) / oracle < 1e-6);
  }
}

TEST_CASE("thin domain spec validation") {
  SurfaceGrid g(Surface::sphere(1.0), 24, 24);
  CHECK_THROWS_AS(ThinDomainSpec::make(
                      g, [](const Vec3&) { return 0.0; }, [](const Vec3&) { return 0.0; }, 0.1),
                  ChartOutOfRange);  // zero width
  CHECK_THROWS_AS(ThinDomainSpec::make(
                      g, [](const Vec3&) { return 0.0; }, [](const Vec3&) { return 10.0; }, 0.2),
                  OutsideReach);  // violates eps*max|g|*max|kappa| < 1/2
}

TEST_CASE("boundary frames") {
  SurfaceGrid g(Surface::sphere(1.0), 32, 32);
  SUBCASE("constant g_i: tau = 0 and n_eps = +-n") {
    ThinDomainSpec spec = ThinDomainSpec::make(
        g, [](const Vec3&) { return 0.2; }, [](const Vec3&) { return 1.0; }, 0.05);
    for (int k = 0; k < g.ns(); k += 7)
      for (int j = 0; j < g.ntheta(); j += 7) {
        const BoundaryFrame f0 = boundary_frame(spec, k, j, 0);
        const BoundaryFrame f1 = boundary_frame(spec, k, j, 1);
        CHECK(f0.tau.norm() < 1e-11);
        CHECK((f0.n_eps + g.point(k, j).n).norm() < 1e-11);
        CHECK((f1.n_eps - g.point(k, j).n).norm() < 1e-11);
      }
  }
  SUBCASE("n_eps orthogonal to the boundary chart tangents") {
    ThinDomainSpec spec = ThinDomainSpec::make(
        g, [](const Vec3&) { return 0.0; }, [](const Vec3& y) { return 1.0 + 0.2 * y[2]; }, 0.05);
    // finite-difference tangents of the boundary chart as oracle
    auto boundary_pos = [&](double s, double th, int side) {
      const SurfacePoint p = g.surface().at(s, th);
      const double gi = side == 0 ? 0.0 : 1.0 + 0.2 * p.pos[2];
      return Vec3(p.pos + spec.eps * gi * p.n);
    };
    double worst = 0.0;
    const double h = 1e-5;
    for (int k = 3; k < g.ns(); k += 9)
      for (int j = 0; j < g.ntheta(); j += 9) {
        const double s = g.s_node(k), th = g.theta_node(j);
        const BoundaryFrame f = boundary_frame(spec, k, j, 1);
        const Vec3 ts = (boundary_pos(s + h, th, 1) - boundary_pos(s - h, th, 1)) / (2 * h);
        const Vec3 tt = (boundary_pos(s, th + h, 1) - boundary_pos(s, th - h, 1)) / (2 * h);
        worst = std::max({worst, std::abs(f.n_eps.dot(ts.normalized())),
                          std::abs(f.n_eps.dot(tt.normalized()))});
        CHECK(std::abs(f.n_eps.norm() - 1.0) < 1e-12);
        CHECK(std::abs(f.tau.dot(g.point(k, j).n)) < 1e-12);
      }
    CHECK(worst < 1e-9);  // FD oracle accuracy ~ h^2
  }
}

TEST_CASE("rigid field scan") {
  SUBCASE("unit sphere with constant g: dim R = 3") {
    SurfaceGrid g(Surface::sphere(1.0), 32, 32);
    ThinDomainSpec spec = ThinDomainSpec::make(
        g, [](const Vec3&) { return 0.0; }, [](const Vec3&) { return 1.0; }, 0.05);
    const RigidScanResult r = rigid_field_scan(g, &spec);
    CHECK(r.dim_R == 3);
    CHECK(r.dim_R01 == 3);
    CHECK(r.dim_Rg == 3);
    CHECK(r.max_residual_R < 1e-8);
  }
  SUBCASE("torus about x3: dim R = 1 with basis parallel to e3 x x") {
    SurfaceGrid g(Surface::torus(3.0, 1.0), 32, 32);
    const RigidScanResult r = rigid_field_scan(g);
    REQUIRE(r.dim_R == 1);
    const RigidField& w = r.basis_R[0];
    CHECK(w.b.norm() < 1e-8);
    CHECK(std::abs(w.a.normalized()[2]) == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("theta-dependent g kills R_g") {
    SurfaceGrid g(Surface::torus(3.0, 1.0), 48, 48);
    ThinDomainSpec spec = ThinDomainSpec::make(
        g, [](const Vec3&) { return 0.0; },
        [](const Vec3& y) { return 1.0 + 0.1 * y[0] / std::hypot(y[0], y[1]); }, 0.02);
    const RigidScanResult r = rigid_field_scan(g, &spec);
    CHECK(r.dim_Rg == 0);
    // Gram eigenvalue oracle: smallest eigenvalue bounded away from zero
    CHECK(r.eig_Rg.minCoeff() > 1e-6 * r.eig_Rg.maxCoeff());
  }
  SUBCASE("axisymmetric invariant: e3 x x is in R for any revolution surface") {
    SurfaceGrid g(Surface::revolution(wavy_torus_profile(3.0, 1.0, 0.12, 3)), 32, 32);
    const RigidScanResult r = rigid_field_scan(g);
    CHECK(r.dim_R >= 1);
    CHECK(r.max_residual_R < 1e-8);
  }
}

TEST_CASE("killing eigenrelation") {
  SUBCASE("unit sphere, w = e3 x y: lambda = -1") {
    SurfaceGrid g(Surface::sphere(1.0), 32, 32);
    RigidField w;
    w.a = Vec3(0, 0, 1);
    const KillingCheckResult r = killing_eigen_check(g, w);
    CHECK(r.max_collinearity_residual < 1e-10);
    CHECK(r.max_axis_residual < 1e-10);
    CHECK(r.lambda_equator == doctest::Approx(-1.0).epsilon(1e-10));
  }
  SUBCASE("torus") {
    SurfaceGrid g(Surface::torus(3.0, 1.0), 32, 32);
    RigidField w;
    w.a = Vec3(0, 0, 1);
    const KillingCheckResult r = killing_eigen_check(g, w);
    CHECK(r.max_collinearity_residual < 1e-8);
    CHECK(r.max_axis_residual < 1e-8);
  }
  SUBCASE("pure translation is not tangential on a closed surface") {
    SurfaceGrid g(Surface::sphere(1.0), 16, 16);
    RigidField w;
    w.b = Vec3(0, 0, 1);
    CHECK_THROWS_AS(killing_eigen_check(g, w), NotTangential);
  }
}

TEST_CASE("profile and chart validation") {
  Profile bad = sphere_profile(1.0);
  bad.dphi = [](double) { return 2.0; };  // breaks arc length
  CHECK_THROWS_AS(bad.validate(), ChartOutOfRange);

  const Surface s = Surface::sphere(1.0);
  CHECK_THROWS_AS(s.at(-0.5, 0.0), ChartOutOfRange);
  CHECK_THROWS_AS(s.at(4.0, 0.0), ChartOutOfRange);
  // pole limits are defined for closed-form profiles
  const SurfacePoint p = s.at(0.0, 0.3);
  CHECK(p.at_pole);
  CHECK(p.K == doctest::Approx(1.0).epsilon(1e-10));
  CHECK((p.n - Vec3(0, 0, 1)).norm() < 1e-12);

  // torus wraps s
  const Surface t = Surface::torus(3.0, 1.0);
  const SurfacePoint a = t.at(0.5, 0.2);
  const SurfacePoint b = t.at(0.5 + 2.0 * M_PI, 0.2);
  CHECK((a.pos - b.pos).norm() < 1e-12);
}
