#include "tensorfield.hpp"

#include <cmath>
#include <stdexcept>

namespace vkp {

GridSpec::GridSpec(double x0, double x1, double y0, double y1, int nx_, int ny_)
    : x_min(x0), x_max(x1), y_min(y0), y_max(y1), nx(nx_), ny(ny_) {
  if (!(x_max > x_min) || !(y_max > y_min))
    throw std::invalid_argument("GridSpec: empty rectangle");
  if (nx < 3 || ny < 3) throw std::invalid_argument("GridSpec: need nx, ny >= 3");
}

bool GridSpec::same_as(const GridSpec& o) const {
  return x_min == o.x_min && x_max == o.x_max && y_min == o.y_min &&
         y_max == o.y_max && nx == o.nx && ny == o.ny;
}

void ScalarField::check_finite() const {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument("ScalarField: non-finite value");
}

void MatrixField2::mark_symmetric() {
  for (size_t k = 0; k < a12.size(); ++k)
    if (std::abs(a12[k] - a21[k]) > 1e-12)
      throw std::logic_error("MatrixField2: symmetric flag on asymmetric field");
  symmetric = true;
}

namespace {

// Applies a 1-D stencil along one axis of the grid. Coefficients:
//   first node:   (-3/2, 2, -1/2)/h           second order one-sided
//   interior i:   (-1/2, 0, 1/2)/h            central
//   last node:    mirrored one-sided
// and for the second derivative:
//   first node:   (2, -5, 4, -1)/h^2
//   interior:     (1, -2, 1)/h^2
//   last node:    mirrored
// The adjoint scatters the same coefficients transposed.
template <bool Adjoint>
void apply_line(const double* in, double* out, int n, int stride, double h, bool second) {
  auto rd = [&](int k) { return in[k * stride]; };
  auto wr = [&](int k, double v) { out[k * stride] += v; };
  auto row = [&](int i, std::initializer_list<std::pair<int, double>> terms) {
    if constexpr (!Adjoint) {
      double s = 0;
      for (auto [k, c] : terms) s += c * rd(k);
      out[i * stride] += s;
    } else {
      double g = rd(i);
      for (auto [k, c] : terms) wr(k, c * g);
    }
  };
  if (!second) {
    double c = 1.0 / (2.0 * h);
    row(0, {{0, -3 * c}, {1, 4 * c}, {2, -c}});
    for (int i = 1; i < n - 1; ++i) row(i, {{i - 1, -c}, {i + 1, c}});
    row(n - 1, {{n - 1, 3 * c}, {n - 2, -4 * c}, {n - 3, c}});
  } else {
    double c = 1.0 / (h * h);
    row(0, {{0, 2 * c}, {1, -5 * c}, {2, 4 * c}, {3, -c}});
    for (int i = 1; i < n - 1; ++i) row(i, {{i - 1, c}, {i, -2 * c}, {i + 1, c}});
    row(n - 1, {{n - 1, 2 * c}, {n - 2, -5 * c}, {n - 3, 4 * c}, {n - 4, -c}});
  }
}

template <bool Adjoint>
ScalarField apply_axis(const ScalarField& f, int axis, bool second) {
  const GridSpec& g = f.grid;
  ScalarField out(g);
  if (axis == 0) {
    if (second && g.nx < 4)
      throw std::invalid_argument("d2_x: need nx >= 4");
    for (int j = 0; j < g.ny; ++j)
      apply_line<Adjoint>(&f.v[g.index(0, j)], &out.v[g.index(0, j)], g.nx, 1, g.hx(),
                          second);
  } else {
    if (second && g.ny < 4)
      throw std::invalid_argument("d2_y: need ny >= 4");
    for (int i = 0; i < g.nx; ++i)
      apply_line<Adjoint>(&f.v[g.index(i, 0)], &out.v[g.index(i, 0)], g.ny, g.nx, g.hy(),
                          second);
  }
  return out;
}

}  // namespace

ScalarField d1_x(const ScalarField& f) { return apply_axis<false>(f, 0, false); }
ScalarField d1_y(const ScalarField& f) { return apply_axis<false>(f, 1, false); }
ScalarField d2_x(const ScalarField& f) { return apply_axis<false>(f, 0, true); }
ScalarField d2_y(const ScalarField& f) { return apply_axis<false>(f, 1, true); }
ScalarField d1_x_adj(const ScalarField& f) { return apply_axis<true>(f, 0, false); }
ScalarField d1_y_adj(const ScalarField& f) { return apply_axis<true>(f, 1, false); }
ScalarField d2_x_adj(const ScalarField& f) { return apply_axis<true>(f, 0, true); }
ScalarField d2_y_adj(const ScalarField& f) { return apply_axis<true>(f, 1, true); }

VectorField2 fd_gradient(const ScalarField& f) {
  VectorField2 out(f.grid);
  out.c1 = d1_x(f).v;
  out.c2 = d1_y(f).v;
  return out;
}

MatrixField2 fd_hessian(const ScalarField& f) {
  MatrixField2 out(f.grid);
  out.a11 = d2_x(f).v;
  out.a22 = d2_y(f).v;
  // mixed derivative by cross-axis composition; symmetric by construction
  out.a12 = d1_x(d1_y(f)).v;
  out.a21 = out.a12;
  out.symmetric = true;
  return out;
}

ScalarField bracket(const ScalarField& v, const ScalarField& u) {
  if (!v.grid.same_as(u.grid)) throw std::invalid_argument("bracket: grid mismatch");
  MatrixField2 hv = fd_hessian(v), hu = fd_hessian(u);
  ScalarField out(v.grid);
  for (int k = 0; k < v.grid.size(); ++k)
    out.v[k] = hv.a11[k] * hu.a22[k] + hv.a22[k] * hu.a11[k] -
               2.0 * hv.a12[k] * hu.a12[k];
  return out;
}

ScalarField curl_t_curl(const MatrixField2& A) {
  ScalarField f11{A.grid}, f22{A.grid}, f12{A.grid};
  f11.v = A.a11;
  f22.v = A.a22;
  for (int k = 0; k < A.grid.size(); ++k) f12.v[k] = A.a12[k] + A.a21[k];
  ScalarField out(A.grid);
  ScalarField t1 = d2_y(f11), t2 = d2_x(f22), t3 = d1_x(d1_y(f12));
  for (int k = 0; k < A.grid.size(); ++k) out.v[k] = t1.v[k] + t2.v[k] - t3.v[k];
  return out;
}

ScalarField div_t_div(const MatrixField2& A) {
  ScalarField f11{A.grid}, f22{A.grid}, f12{A.grid};
  f11.v = A.a11;
  f22.v = A.a22;
  for (int k = 0; k < A.grid.size(); ++k) f12.v[k] = A.a12[k] + A.a21[k];
  ScalarField out(A.grid);
  ScalarField t1 = d2_x(f11), t2 = d2_y(f22), t3 = d1_x(d1_y(f12));
  for (int k = 0; k < A.grid.size(); ++k) out.v[k] = t1.v[k] + t2.v[k] + t3.v[k];
  return out;
}

MatrixField2 cof2(const MatrixField2& A) {
  MatrixField2 out(A.grid);
  for (int k = 0; k < A.grid.size(); ++k) {
    out.a11[k] = A.a22[k];
    out.a12[k] = -A.a21[k];
    out.a21[k] = -A.a12[k];
    out.a22[k] = A.a11[k];
  }
  out.symmetric = A.symmetric;
  return out;
}

double quad_weight(const GridSpec& g, int i, int j) {
  double wx = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
  double wy = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
  return wx * wy * g.hx() * g.hy();
}

double integrate(const ScalarField& f) {
  const GridSpec& g = f.grid;
  double s = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) s += quad_weight(g, i, j) * f.at(i, j);
  return s;
}

ScalarField sample(const GridSpec& g, const Expr& e) {
  ScalarField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.at(i, j) = e.eval(g.x(i), g.y(j));
  return out;
}

double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double x : f.v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_interior(const ScalarField& f, int margin) {
  const GridSpec& g = f.grid;
  double m = 0.0;
  for (int j = margin; j < g.ny - margin; ++j)
    for (int i = margin; i < g.nx - margin; ++i)
      m = std::max(m, std::abs(f.at(i, j)));
  return m;
}

}  // namespace vkp
