#pragma once

#include <cstddef>
#include <vector>

#include "expr.hpp"

namespace vkp {

/// Uniform rectangular node grid. Node (i, j) sits at
/// (x_min + i*hx, y_min + j*hy), stored row-major with index j*nx + i.
struct GridSpec {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  int nx = 3, ny = 3;

  GridSpec() = default;
  GridSpec(double x0, double x1, double y0, double y1, int nx_, int ny_);
  static GridSpec unit_square(int nx, int ny) { return GridSpec(0, 1, 0, 1, nx, ny); }

  double hx() const { return (x_max - x_min) / (nx - 1); }
  double hy() const { return (y_max - y_min) / (ny - 1); }
  double x(int i) const { return x_min + i * hx(); }
  double y(int j) const { return y_min + j * hy(); }
  int index(int i, int j) const { return j * nx + i; }
  int size() const { return nx * ny; }
  bool same_as(const GridSpec& o) const;
};

struct ScalarField {
  GridSpec grid;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g) : grid(g), v(g.size(), 0.0) {}
  double& at(int i, int j) { return v[grid.index(i, j)]; }
  double at(int i, int j) const { return v[grid.index(i, j)]; }
  void check_finite() const;
};

struct VectorField2 {
  GridSpec grid;
  std::vector<double> c1, c2;

  VectorField2() = default;
  explicit VectorField2(const GridSpec& g)
      : grid(g), c1(g.size(), 0.0), c2(g.size(), 0.0) {}
};

struct MatrixField2 {
  GridSpec grid;
  std::vector<double> a11, a12, a21, a22;
  bool symmetric = false;

  MatrixField2() = default;
  explicit MatrixField2(const GridSpec& g)
      : grid(g),
        a11(g.size(), 0.0),
        a12(g.size(), 0.0),
        a21(g.size(), 0.0),
        a22(g.size(), 0.0) {}
  /// Sets the symmetric flag after asserting |a12 - a21| <= 1e-12 nodewise.
  void mark_symmetric();
};

// 1-D difference operators along each axis; second-order central stencils
// with second-order one-sided stencils at the boundary. The *_adj variants
// apply the exact transpose (used by discrete energy gradients).
ScalarField d1_x(const ScalarField& f);
ScalarField d1_y(const ScalarField& f);
ScalarField d2_x(const ScalarField& f);
ScalarField d2_y(const ScalarField& f);
ScalarField d1_x_adj(const ScalarField& f);
ScalarField d1_y_adj(const ScalarField& f);
ScalarField d2_x_adj(const ScalarField& f);
ScalarField d2_y_adj(const ScalarField& f);

VectorField2 fd_gradient(const ScalarField& f);
MatrixField2 fd_hessian(const ScalarField& f);

/// Monge-Ampere bracket [v,u] = v,11 u,22 + v,22 u,11 - 2 v,12 u,12.
ScalarField bracket(const ScalarField& v, const ScalarField& u);

/// d22 A11 + d11 A22 - d12 (A12 + A21)
ScalarField curl_t_curl(const MatrixField2& A);

/// sum_ij di dj Aij
ScalarField div_t_div(const MatrixField2& A);

/// Nodewise 2x2 cofactor: cof [a b; c d] = [d -c; -b a].
MatrixField2 cof2(const MatrixField2& A);

/// Trapezoidal rule over the rectangle.
double integrate(const ScalarField& f);

/// Nodal trapezoid quadrature weight (already times hx*hy).
double quad_weight(const GridSpec& g, int i, int j);

// Expression sampling helpers.
ScalarField sample(const GridSpec& g, const Expr& e);
double max_abs(const ScalarField& f);
/// Max over nodes at depth >= `margin` from the boundary.
double max_abs_interior(const ScalarField& f, int margin);

}  // namespace vkp
