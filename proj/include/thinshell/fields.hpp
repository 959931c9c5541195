#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "thinshell/errors.hpp"

namespace thinshell {

/// Chart grid dimensions: ns Gauss-Legendre rows in s, ntheta uniform
/// periodic columns in theta.
struct GridShape {
  int ns = 0;
  int ntheta = 0;
  bool operator==(const GridShape&) const = default;
  long size() const { return static_cast<long>(ns) * ntheta; }
};

using Grid2 = Eigen::ArrayXXd;  // ns x ntheta nodal values

/// Scalar samples on the chart grid.
struct ScalarField {
  Grid2 v;

  ScalarField() = default;
  explicit ScalarField(const Grid2& a) : v(a) {}
  ScalarField(int ns, int ntheta) : v(Grid2::Zero(ns, ntheta)) {}

  GridShape shape() const { return {static_cast<int>(v.rows()), static_cast<int>(v.cols())}; }
  double& operator()(int k, int j) { return v(k, j); }
  double operator()(int k, int j) const { return v(k, j); }

  static ScalarField constant(GridShape g, double c) {
    ScalarField f;
    f.v = Grid2::Constant(g.ns, g.ntheta, c);
    return f;
  }
  static ScalarField zero(GridShape g) { return constant(g, 0.0); }

  double max_abs() const { return v.abs().maxCoeff(); }
};

/// Embedded 3-vector samples (Cartesian components). Tangent fields are
/// VecFields kept tangential by the operations that produce them.
struct VecField {
  Grid2 x, y, z;

  VecField() = default;
  VecField(int ns, int ntheta)
      : x(Grid2::Zero(ns, ntheta)), y(Grid2::Zero(ns, ntheta)), z(Grid2::Zero(ns, ntheta)) {}

  GridShape shape() const { return {static_cast<int>(x.rows()), static_cast<int>(x.cols())}; }
  static VecField zero(GridShape g) { return VecField(g.ns, g.ntheta); }

  Eigen::Vector3d at(int k, int j) const { return {x(k, j), y(k, j), z(k, j)}; }
  void set(int k, int j, const Eigen::Vector3d& a) {
    x(k, j) = a[0];
    y(k, j) = a[1];
    z(k, j) = a[2];
  }

  Grid2& comp(int c) { return c == 0 ? x : (c == 1 ? y : z); }
  const Grid2& comp(int c) const { return c == 0 ? x : (c == 1 ? y : z); }

  ScalarField norm() const { return ScalarField((x * x + y * y + z * z).sqrt()); }
  double max_norm() const { return (x * x + y * y + z * z).sqrt().maxCoeff(); }
};

/// 3x3 matrix samples, row-major blocks m[i][j].
struct MatrixField {
  std::array<std::array<Grid2, 3>, 3> m;

  MatrixField() = default;
  MatrixField(int ns, int ntheta) {
    for (auto& row : m)
      for (auto& e : row) e = Grid2::Zero(ns, ntheta);
  }
  static MatrixField zero(GridShape g) { return MatrixField(g.ns, g.ntheta); }

  GridShape shape() const {
    return {static_cast<int>(m[0][0].rows()), static_cast<int>(m[0][0].cols())};
  }
  Eigen::Matrix3d at(int k, int j) const {
    Eigen::Matrix3d a;
    for (int i = 0; i < 3; ++i)
      for (int l = 0; l < 3; ++l) a(i, l) = m[i][l](k, j);
    return a;
  }
  void set(int k, int j, const Eigen::Matrix3d& a) {
    for (int i = 0; i < 3; ++i)
      for (int l = 0; l < 3; ++l) m[i][l](k, j) = a(i, l);
  }
};

inline void require_shape(const GridShape& a, const GridShape& b, const char* what) {
  if (!(a == b)) throw GridMismatch(std::string("grid mismatch in ") + what);
}

// Pointwise algebra helpers -------------------------------------------------

inline VecField operator+(const VecField& a, const VecField& b) {
  VecField r = a;
  r.x += b.x;
  r.y += b.y;
  r.z += b.z;
  return r;
}
inline VecField operator-(const VecField& a, const VecField& b) {
  VecField r = a;
  r.x -= b.x;
  r.y -= b.y;
  r.z -= b.z;
  return r;
}
inline VecField operator*(double c, const VecField& a) {
  VecField r = a;
  r.x *= c;
  r.y *= c;
  r.z *= c;
  return r;
}
inline VecField scale(const ScalarField& c, const VecField& a) {
  VecField r = a;
  r.x *= c.v;
  r.y *= c.v;
  r.z *= c.v;
  return r;
}
inline ScalarField dot(const VecField& a, const VecField& b) {
  return ScalarField(a.x * b.x + a.y * b.y + a.z * b.z);
}
inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  return ScalarField(a.v + b.v);
}
inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  return ScalarField(a.v - b.v);
}
inline ScalarField operator*(double c, const ScalarField& a) { return ScalarField(c * a.v); }
inline ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  return ScalarField(a.v * b.v);
}

}  // namespace thinshell
