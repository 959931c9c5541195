#include "thinshell/surface_calculus.hpp"

#include <cmath>

namespace thinshell {

VecField tangential_gradient(const SurfaceGrid& g, const ScalarField& eta) {
  require_shape(g.shape(), eta.shape(), "tangential_gradient");
  const Grid2 fs = g.ds(eta.v);
  const Grid2 ft = g.dtheta(eta.v);
  const Grid2 inv_phi2 = 1.0 / (g.phi_field().v * g.phi_field().v);
  VecField out(g.ns(), g.ntheta());
  for (int c = 0; c < 3; ++c)
    out.comp(c) = fs * g.tangent_s().comp(c) + ft * inv_phi2 * g.tangent_theta().comp(c);
  return out;
}

ScalarField tangential_divergence(const SurfaceGrid& g, const VecField& v) {
  require_shape(g.shape(), v.shape(), "tangential_divergence");
  const Grid2 inv_phi2 = 1.0 / (g.phi_field().v * g.phi_field().v);
  Grid2 acc = Grid2::Zero(g.ns(), g.ntheta());
  for (int c = 0; c < 3; ++c) {
    acc += g.ds(v.comp(c)) * g.tangent_s().comp(c);
    acc += g.dtheta(v.comp(c)) * inv_phi2 * g.tangent_theta().comp(c);
  }
  return ScalarField(acc);
}

VecField tangential_divergence(const SurfaceGrid& g, const MatrixField& A) {
  require_shape(g.shape(), A.shape(), "tangential_divergence(matrix)");
  VecField out(g.ns(), g.ntheta());
  for (int j = 0; j < 3; ++j) {
    VecField col(g.ns(), g.ntheta());
    for (int i = 0; i < 3; ++i) col.comp(i) = A.m[i][j];
    out.comp(j) = tangential_divergence(g, col).v;
  }
  return out;
}

MatrixField tangential_gradient_matrix(const SurfaceGrid& g, const VecField& v) {
  require_shape(g.shape(), v.shape(), "tangential_gradient_matrix");
  MatrixField out(g.ns(), g.ntheta());
  for (int j = 0; j < 3; ++j) {
    const VecField gj = tangential_gradient(g, ScalarField(v.comp(j)));
    for (int i = 0; i < 3; ++i) out.m[i][j] = gj.comp(i);
  }
  return out;
}

MatrixField strain_rate(const SurfaceGrid& g, const VecField& v) {
  MatrixField grad = tangential_gradient_matrix(g, v);
  MatrixField out(g.ns(), g.ntheta());
  for (int k = 0; k < g.ns(); ++k)
    for (int j = 0; j < g.ntheta(); ++j) {
      const Mat3 gm = grad.at(k, j);
      const Mat3& P = g.point(k, j).P;
      out.set(k, j, P * (0.5 * (gm + gm.transpose())) * P);
    }
  return out;
}

VecField covariant_derivative(const SurfaceGrid& g, const VecField& X, const VecField& Y) {
  require_shape(X.shape(), Y.shape(), "covariant_derivative");
  // (Y . grad_G) X = (grad_G X)^T Y, then project.
  MatrixField grad = tangential_gradient_matrix(g, X);
  VecField out(g.ns(), g.ntheta());
  for (int k = 0; k < g.ns(); ++k)
    for (int j = 0; j < g.ntheta(); ++j) {
      const Vec3 dYX = grad.at(k, j).transpose() * Y.at(k, j);
      out.set(k, j, g.point(k, j).P * dYX);
    }
  return out;
}

ScalarField laplace_beltrami(const SurfaceGrid& g, const ScalarField& eta) {
  require_shape(g.shape(), eta.shape(), "laplace_beltrami");
  const Grid2& phi = g.phi_field().v;
  Grid2 u = g.ds(eta.v);
  Grid2 out = g.ds(Grid2(phi * u)) / phi + g.dtheta2(eta.v) / (phi * phi);
  return ScalarField(out);
}

VecField laplace_beltrami(const SurfaceGrid& g, const VecField& v) {
  VecField out(g.ns(), g.ntheta());
  for (int c = 0; c < 3; ++c) out.comp(c) = laplace_beltrami(g, ScalarField(v.comp(c))).v;
  return out;
}

VecField bochner_laplacian(const SurfaceGrid& g, const VecField& v) {
  const VecField lap = laplace_beltrami(g, v);
  VecField out(g.ns(), g.ntheta());
  for (int k = 0; k < g.ns(); ++k)
    for (int j = 0; j < g.ntheta(); ++j) {
      const auto& p = g.point(k, j);
      out.set(k, j, p.P * lap.at(k, j) + p.W * (p.W * v.at(k, j)));
    }
  return out;
}

VecField project_tangent(const SurfaceGrid& g, const VecField& v) {
  require_shape(g.shape(), v.shape(), "project_tangent");
  const ScalarField vn = dot(v, g.normal());
  VecField out = v;
  for (int c = 0; c < 3; ++c) out.comp(c) -= vn.v * g.normal().comp(c);
  return out;
}

double max_normal_component(const SurfaceGrid& g, const VecField& v) {
  return dot(v, g.normal()).max_abs();
}

double l2_inner(const SurfaceGrid& g, const ScalarField& a, const ScalarField& b) {
  return (g.mass().v * a.v * b.v).sum();
}

double l2_inner(const SurfaceGrid& g, const VecField& a, const VecField& b) {
  return (g.mass().v * (a.x * b.x + a.y * b.y + a.z * b.z)).sum();
}

double l2_norm(const SurfaceGrid& g, const ScalarField& a) {
  return std::sqrt(std::max(0.0, l2_inner(g, a, a)));
}

double l2_norm(const SurfaceGrid& g, const VecField& a) {
  return std::sqrt(std::max(0.0, l2_inner(g, a, a)));
}

double l2_norm(const SurfaceGrid& g, const MatrixField& a) {
  double acc = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) acc += (g.mass().v * a.m[i][j] * a.m[i][j]).sum();
  return std::sqrt(std::max(0.0, acc));
}

double h1_norm(const SurfaceGrid& g, const VecField& a) {
  const MatrixField grad = tangential_gradient_matrix(g, a);
  const double gn = l2_norm(g, grad);
  const double an = l2_norm(g, a);
  return std::sqrt(an * an + gn * gn);
}

double weighted_mean(const SurfaceGrid& g, const ScalarField& a) {
  return (g.mass().v * a.v).sum() / g.mass().v.sum();
}

// ---------------------------------------------------------------------------
// Korn estimator
// ---------------------------------------------------------------------------

std::vector<VecField> korn_trial_space(const SurfaceGrid& g, int ms, int mtheta) {
  std::vector<VecField> fields;
  const double L = g.surface().length();
  for (int p = 0; p < ms; ++p) {
    for (int q = 0; q < mtheta; ++q) {
      for (int parity = 0; parity < (q == 0 ? 1 : 2); ++parity) {
        if (p == 0 && q == 0) continue;  // constant harmonic, zero gradient
        // pole-regular chart harmonic
        ScalarField h = g.sample_chart([&](double s, double th) {
          const double S = std::cos(p * M_PI * s / L);
          double T = parity == 0 ? std::cos(q * th) : std::sin(q * th);
          double reg = 1.0;
          if (!g.surface().periodic_profile() && q > 0) {
            const double ph = g.surface().profile().phi(s);
            for (int r = 0; r < std::min(q, 3); ++r) reg *= ph;
          }
          return S * T * reg;
        });
        const VecField grad = tangential_gradient(g, h);
        fields.push_back(grad);
        VecField rot(g.ns(), g.ntheta());
        for (int k = 0; k < g.ns(); ++k)
          for (int j = 0; j < g.ntheta(); ++j)
            rot.set(k, j, g.point(k, j).n.cross(grad.at(k, j)));
        fields.push_back(rot);
      }
    }
  }
  return fields;
}

KornEstimate korn_estimate_from_fields(const SurfaceGrid& g, const std::vector<VecField>& trial) {
  const int n = static_cast<int>(trial.size());
  if (n == 0) throw EigSolverFailure("empty Korn trial space");
  std::vector<MatrixField> strains;
  std::vector<MatrixField> grads;
  strains.reserve(n);
  grads.reserve(n);
  for (const auto& v : trial) {
    grads.push_back(tangential_gradient_matrix(g, v));
    strains.push_back(strain_rate(g, v));
  }
  auto mat_inner = [&](const MatrixField& a, const MatrixField& b) {
    double acc = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) acc += (g.mass().v * a.m[i][j] * b.m[i][j]).sum();
    return acc;
  };
  Eigen::MatrixXd A(n, n), B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double aij = mat_inner(strains[i], strains[j]) + l2_inner(g, trial[i], trial[j]);
      const double bij = mat_inner(grads[i], grads[j]);
      A(i, j) = A(j, i) = aij;
      B(i, j) = B(j, i) = bij;
    }
  // Generalized problem B x = mu A x; c_est = mu_max = 1 / lambda_min(A, B).
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(B, A);
  if (es.info() != Eigen::Success) throw EigSolverFailure("Korn generalized eigensolve failed");
  KornEstimate k;
  k.trial_dim = n;
  const double mu_max = es.eigenvalues().maxCoeff();
  k.c_est = mu_max;
  k.lambda_min = mu_max > 0 ? 1.0 / mu_max : 0.0;
  return k;
}

KornEstimate korn_constant_estimate(const SurfaceGrid& g, int ms, int mtheta) {
  return korn_estimate_from_fields(g, korn_trial_space(g, ms, mtheta));
}

}  // namespace thinshell
