#include "recovery3d.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace vkp {

namespace {

std::array<Expr, 3> l_of_expr(const ExprMat3& F) {
  // row-major: F[r*3+c]
  return {F[2] + F[6], F[5] + F[7], F[8]};
}

/// Symbolic derivatives of the recipe fields, prepared once per operation.
struct Derivs {
  Expr v, vx, vy, vxx, vyy, vxy;
  Expr w1, w2, w1x, w1y, w2x, w2y;
  std::array<Expr, 3> L0, L1;           // l(eps_g) + c0, l(kappa_g) + c1
  std::array<std::array<Expr, 2>, 3> L0d, L1d;
};

Derivs prepare(const RecoveryRecipe& r) {
  Derivs d;
  d.v = r.v;
  d.vx = r.v.diff(0);
  d.vy = r.v.diff(1);
  d.vxx = d.vx.diff(0);
  d.vyy = d.vy.diff(1);
  d.vxy = d.vx.diff(1);
  d.w1 = r.w1;
  d.w2 = r.w2;
  d.w1x = r.w1.diff(0);
  d.w1y = r.w1.diff(1);
  d.w2x = r.w2.diff(0);
  d.w2y = r.w2.diff(1);
  auto l0 = l_of_expr(r.p.eps_g);
  auto l1 = l_of_expr(r.p.kappa_g);
  for (int i = 0; i < 3; ++i) {
    d.L0[i] = l0[i] + r.c0[i];
    d.L1[i] = l1[i] + r.c1[i];
    for (int a = 0; a < 2; ++a) {
      d.L0d[i][a] = d.L0[i].diff(a);
      d.L1d[i][a] = d.L1[i].diff(a);
    }
  }
  return d;
}

/// Everything about one tangential location, evaluated numerically.
struct ColVals {
  double x1 = 0.0, x2 = 0.0;
  double v = 0.0, vx = 0.0, vy = 0.0, vxx = 0.0, vyy = 0.0, vxy = 0.0;
  double w1 = 0.0, w2 = 0.0, w1x = 0.0, w1y = 0.0, w2x = 0.0, w2y = 0.0;
  Vec3 L0 = Vec3::Zero(), L1 = Vec3::Zero();
  Eigen::Matrix<double, 3, 2> L0d = Eigen::Matrix<double, 3, 2>::Zero();
  Eigen::Matrix<double, 3, 2> L1d = Eigen::Matrix<double, 3, 2>::Zero();
  Mat3 E = Mat3::Zero(), K = Mat3::Zero();  // eps_g, kappa_g
};

ColVals col_eval(const Derivs& d, const RecoveryRecipe& r, double x1, double x2) {
  ColVals c;
  c.x1 = x1;
  c.x2 = x2;
  c.v = d.v.eval(x1, x2);
  c.vx = d.vx.eval(x1, x2);
  c.vy = d.vy.eval(x1, x2);
  c.vxx = d.vxx.eval(x1, x2);
  c.vyy = d.vyy.eval(x1, x2);
  c.vxy = d.vxy.eval(x1, x2);
  c.w1 = d.w1.eval(x1, x2);
  c.w2 = d.w2.eval(x1, x2);
  c.w1x = d.w1x.eval(x1, x2);
  c.w1y = d.w1y.eval(x1, x2);
  c.w2x = d.w2x.eval(x1, x2);
  c.w2y = d.w2y.eval(x1, x2);
  for (int i = 0; i < 3; ++i) {
    c.L0[i] = d.L0[i].eval(x1, x2);
    c.L1[i] = d.L1[i].eval(x1, x2);
    for (int a = 0; a < 2; ++a) {
      c.L0d(i, a) = d.L0d[i][a].eval(x1, x2);
      c.L1d(i, a) = d.L1d[i][a].eval(x1, x2);
    }
  }
  c.E = r.p.eps_at(x1, x2);
  c.K = r.p.kappa_at(x1, x2);
  return c;
}

/// Candidate map and gradient as polynomials in the physical offset t:
/// point(t) = P0 + t P1 + t^2 P2, grad(t) = C0 + t C1 + t^2 C2.
struct CandPoly {
  Vec3 P0, P1, P2;
  Mat3 C0, C1, C2;

  Vec3 point(double t) const { return P0 + t * P1 + t * t * P2; }
  Mat3 grad(double t) const { return C0 + t * C1 + t * t * C2; }
};

CandPoly cand_poly(const ColVals& c, double h) {
  CandPoly q;
  q.P0 = Vec3(c.x1 + h * h * c.w1, c.x2 + h * h * c.w2, h * c.v);
  q.P1 = Vec3(-h * c.vx + h * h * c.L0[0], -h * c.vy + h * h * c.L0[1],
              1.0 + h * h * c.L0[2]);
  q.P2 = 0.5 * h * c.L1;

  q.C0 << 1.0 + h * h * c.w1x, h * h * c.w1y, q.P1[0],
      h * h * c.w2x, 1.0 + h * h * c.w2y, q.P1[1],
      h * c.vx, h * c.vy, q.P1[2];
  q.C1 << -h * c.vxx + h * h * c.L0d(0, 0), -h * c.vxy + h * h * c.L0d(0, 1), h * c.L1[0],
      -h * c.vxy + h * h * c.L0d(1, 0), -h * c.vyy + h * h * c.L0d(1, 1), h * c.L1[1],
      h * h * c.L0d(2, 0), h * h * c.L0d(2, 1), h * c.L1[2];
  q.C2 << 0.5 * h * c.L1d(0, 0), 0.5 * h * c.L1d(0, 1), 0.0,
      0.5 * h * c.L1d(1, 0), 0.5 * h * c.L1d(1, 1), 0.0,
      0.5 * h * c.L1d(2, 0), 0.5 * h * c.L1d(2, 1), 0.0;
  return q;
}

Mat3 growth_at(const ColVals& c, double h, double x3_scaled) {
  // a^h = Id + h^2 eps_g + h * (h x3_scaled) * kappa_g
  return Mat3::Identity() + h * h * c.E + h * h * x3_scaled * c.K;
}

double f_fast(const ColVals& c, const CandPoly& q, double h, double y, double x3_scaled,
              bool include_rotation) {
  Mat3 Gy = q.grad(h * y);
  Mat3 ay = growth_at(c, h, y);
  Mat3 ax = growth_at(c, h, x3_scaled);
  double finv;
  if (include_rotation) {
    Mat3 R = skew_exp(h * bend_skew(c.vx, c.vy));
    finv = (R.transpose() * Gy * ay.inverse()).determinant() *
           (ay * ax.inverse()).determinant();
  } else {
    finv = (Gy * ay.inverse()).determinant() * (ay * ax.inverse()).determinant();
  }
  if (!(finv > 0.0)) {
    std::ostringstream os;
    os << "f_eval: nonpositive value at x' = (" << c.x1 << ", " << c.x2 << "), y = " << y
       << ", x3 = " << x3_scaled << ", h = " << h;
    throw std::runtime_error(os.str());
  }
  return 1.0 / finv;
}

/// Fourth-order cumulative integral of nodal data from index m outward,
/// composite Simpson on pairs with a three-point half-step rule for odd
/// offsets.
std::vector<double> cumulative_from_mid(const std::vector<double>& g, double dx, int m) {
  int n = static_cast<int>(g.size());
  std::vector<double> u(n, 0.0);
  for (int sgn : {+1, -1}) {
    double s = sgn * dx;
    for (int k = 1; m + sgn * k >= 0 && m + sgn * k < n; ++k) {
      int i = m + sgn * k;
      if (k % 2 == 0) {
        u[i] = u[i - 2 * sgn] +
               s / 3.0 * (g[i - 2 * sgn] + 4.0 * g[i - sgn] + g[i]);
      } else if (k == 1) {
        u[i] = s / 12.0 * (5.0 * g[m] + 8.0 * g[i] - g[i + sgn]);
      } else {
        u[i] = u[i - sgn] +
               s / 12.0 * (-g[i - 2 * sgn] + 8.0 * g[i - sgn] + 5.0 * g[i]);
      }
    }
  }
  return u;
}

std::vector<double> simpson_weights(int n, double dx) {
  if (n < 3 || n % 2 == 0)
    throw std::invalid_argument("simpson_weights: need odd node count >= 3");
  std::vector<double> w(n, 0.0);
  for (int i = 0; i + 2 < n; i += 2) {
    w[i] += dx / 3.0;
    w[i + 1] += 4.0 * dx / 3.0;
    w[i + 2] += dx / 3.0;
  }
  return w;
}

double fit_slope(const std::vector<double>& hs, const std::vector<double>& vals) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t i = 0; i < hs.size(); ++i) {
    if (!(vals[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    double lx = std::log(hs[i]), ly = std::log(vals[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  double den = n * sxx - sx * sx;
  if (std::abs(den) < 1e-30) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / den;
}

Mat3 embed2(const Mat2& M) {
  Mat3 F = Mat3::Zero();
  F.topLeftCorner<2, 2>() = M;
  return F;
}

}  // namespace

Slab3D::Slab3D(const GridSpec& g, int n3_, double h_) : grid(g), n3(n3_), h(h_) {
  if (n3 < 5 || n3 % 2 == 0)
    throw std::invalid_argument("Slab3D: n3 must be odd and >= 5");
  if (!(h > 0.0) || h > 0.25)
    throw std::invalid_argument("Slab3D: h must lie in (0, 1/4]");
}

Vec3 l_vector(const Mat3& F) {
  Vec3 l(F(0, 2) + F(2, 0), F(1, 2) + F(2, 1), F(2, 2));
  Mat3 diff = F - embed2(F.topLeftCorner<2, 2>());
  Mat3 lhs = 0.5 * (diff + diff.transpose());
  Mat3 outer = l * Vec3::UnitZ().transpose();
  Mat3 rhs = 0.5 * (outer + outer.transpose());
  if ((lhs - rhs).cwiseAbs().maxCoeff() > 1e-14)
    throw std::logic_error("l_vector: defining identity violated");
  return l;
}

Mat3 bend_skew(double vx, double vy) {
  Mat3 A;
  A << 0, 0, -vx,
      0, 0, -vy,
      vx, vy, 0;
  return A;
}

Mat3 skew_exp(const Mat3& A) {
  // angle from the axis vector of the skew matrix
  Vec3 w(A(2, 1), A(0, 2), A(1, 0));
  double th = w.norm();
  double s, c2;  // sin(th)/th, (1 - cos th)/th^2
  if (th < 1e-4) {
    double t2 = th * th;
    s = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    c2 = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    s = std::sin(th) / th;
    c2 = (1.0 - std::cos(th)) / (th * th);
  }
  return Mat3::Identity() + s * A + c2 * (A * A);
}

double density_w(const Mat3& F) {
  Mat3 C = F.transpose() * F - Mat3::Identity();
  return 0.25 * C.squaredNorm();
}

RecoveryRecipe make_recipe(const PrestrainSpec& p, const Expr& v, const Expr& w1,
                           const Expr& w2) {
  RecoveryRecipe r;
  r.v = v;
  r.w1 = w1;
  r.w2 = w2;
  r.p = p;
  Expr vx = v.diff(0), vy = v.diff(1);
  Expr grad2 = vx * vx + vy * vy;
  // trace of the 2x2 stretching strain, with the membrane quadratic term
  Expr tr_g0 = w1.diff(0) + w2.diff(1) + Expr::constant(0.5) * grad2 - p.eps_g[0] -
               p.eps_g[4];
  r.c0 = {Expr(), Expr(), -(Expr::constant(0.5) * grad2) - tr_g0};
  r.c1 = {Expr(), Expr(),
          vx.diff(0) + vy.diff(1) + p.kappa_g[0] + p.kappa_g[4]};
  validate_recipe(r);
  return r;
}

void validate_recipe(const RecoveryRecipe& r) {
  Derivs d = prepare(r);
  const Rect& dom = r.p.domain;
  const int n = 7;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      double x1 = dom.x_min + (dom.x_max - dom.x_min) * i / (n - 1);
      double x2 = dom.y_min + (dom.y_max - dom.y_min) * j / (n - 1);
      ColVals c = col_eval(d, r, x1, x2);
      double grad2 = c.vx * c.vx + c.vy * c.vy;
      double tr_g0 = c.w1x + c.w2y + 0.5 * grad2 -
                     0.5 * (c.E(0, 0) + c.E(0, 0)) - 0.5 * (c.E(1, 1) + c.E(1, 1));
      double t0 = tr_g0 + 0.5 * grad2 + r.c0[2].eval(x1, x2);
      double t1 = -(c.vxx + c.vyy) - (c.K(0, 0) + c.K(1, 1)) + r.c1[2].eval(x1, x2);
      if (std::abs(t0) > 1e-10 || std::abs(t1) > 1e-10)
        throw std::invalid_argument(
            "recovery recipe: correction trace conditions violated");
    }
}

RecoveryRecipe standard_study_recipe() {
  PrestrainSpec p = preset_prestrain("uniform-bend", 1.0);
  Expr x1 = Expr::var(0), x2 = Expr::var(1);
  // small polynomial displacement so phi picks up tangential variation
  Expr v = Expr::constant(0.05) * x1 * x1 * x2;
  Expr w1 = Expr::constant(0.03) * x1 * x2 * x2;
  Expr w2 = Expr::constant(-0.02) * x1 * x1 * x2;
  return make_recipe(p, v, w1, w2);
}

std::pair<Vec3, Mat3> build_candidate(const RecoveryRecipe& r, double h, double x1,
                                      double x2, double x3_scaled) {
  if (std::abs(x3_scaled) > 0.5 + 1e-12)
    throw std::invalid_argument("build_candidate: |x3_scaled| must be <= 1/2");
  if (!r.p.domain.contains(x1, x2))
    throw std::invalid_argument("build_candidate: point outside prestrain domain");
  Derivs d = prepare(r);
  ColVals c = col_eval(d, r, x1, x2);
  CandPoly q = cand_poly(c, h);
  double t = h * x3_scaled;
  return {q.point(t), q.grad(t)};
}

double f_eval(const RecoveryRecipe& r, double h, double x1, double x2, double y,
              double x3_scaled, bool include_rotation) {
  if (std::abs(y) >= 1.0)
    throw std::invalid_argument("f_eval: |y| must be < 1");
  Derivs d = prepare(r);
  ColVals c = col_eval(d, r, x1, x2);
  CandPoly q = cand_poly(c, h);
  return f_fast(c, q, h, y, x3_scaled, include_rotation);
}

PhiSolution solve_phi(const RecoveryRecipe& r, const Slab3D& slab, double tol) {
  const GridSpec& g = slab.grid;
  const int n3 = slab.n3, m = slab.mid();
  const double h = slab.h, dx3 = slab.dx3();
  Derivs d = prepare(r);

  PhiSolution sol;
  sol.grid = g;
  sol.n3 = n3;
  sol.h = h;
  sol.phi.assign(g.size() * n3, 0.0);
  sol.d3.assign(g.size() * n3, 0.0);

  const int max_iter = 200;
  for (int node = 0; node < g.size(); ++node) {
    int i = node % g.nx, j = node / g.nx;
    ColVals c = col_eval(d, r, g.x(i), g.y(j));
    CandPoly q = cand_poly(c, h);

    std::vector<double> u(n3, 0.0), fval(n3), unew;
    double prev_diff = -1.0;
    int it = 0;
    for (; it < max_iter; ++it) {
      for (int k = 0; k < n3; ++k) {
        double f = f_fast(c, q, h, u[k], slab.x3(k), true);
        if (it == 0 && (f <= 0.5 || f >= 2.0)) {
          std::ostringstream os;
          os << "solve_phi: f = " << f << " outside (1/2, 2) at h = " << h
             << " (h too large)";
          throw std::runtime_error(os.str());
        }
        fval[k] = f;
      }
      unew = cumulative_from_mid(fval, dx3, m);
      double diff = 0.0;
      for (int k = 0; k < n3; ++k) {
        diff = std::max(diff, std::abs(unew[k] - u[k]));
        if (std::abs(unew[k]) >= 1.0)
          throw std::runtime_error("solve_phi: |phi| reached 1 (h too large)");
      }
      u = unew;
      if (prev_diff > 1e-11) {
        double ratio = diff / prev_diff;
        sol.contraction = std::max(sol.contraction, ratio);
        if (ratio >= 1.0) {
          std::ostringstream os;
          os << "solve_phi: contraction failure, factor " << ratio << " at h = " << h;
          throw std::runtime_error(os.str());
        }
      }
      prev_diff = diff;
      if (diff <= tol) break;
    }
    sol.iterations = std::max(sol.iterations, it + 1);

    for (int k = 0; k < n3; ++k) {
      sol.phi[sol.idx(node, k)] = u[k];
      // at the fixed point the transverse derivative is the rhs itself
      sol.d3[sol.idx(node, k)] = f_fast(c, q, h, u[k], slab.x3(k), true);
      sol.dev_phi = std::max(sol.dev_phi, std::abs(u[k] - slab.x3(k)));
      sol.dev_d3 = std::max(sol.dev_d3, std::abs(sol.d3[sol.idx(node, k)] - 1.0));
    }
  }

  // tangential derivatives levelwise
  sol.dx.assign(g.size() * n3, 0.0);
  sol.dy.assign(g.size() * n3, 0.0);
  for (int k = 0; k < n3; ++k) {
    ScalarField level(g);
    for (int node = 0; node < g.size(); ++node)
      level.v[node] = sol.phi[sol.idx(node, k)];
    ScalarField lx = d1_x(level), ly = d1_y(level);
    for (int node = 0; node < g.size(); ++node) {
      sol.dx[sol.idx(node, k)] = lx.v[node];
      sol.dy[sol.idx(node, k)] = ly.v[node];
      sol.dev_tan = std::max(
          sol.dev_tan, std::hypot(lx.v[node], ly.v[node]));
    }
  }
  return sol;
}

std::pair<Vec3, Mat3> assemble_uh(const RecoveryRecipe& r, const Slab3D& slab,
                                  const PhiSolution& phi, double x1, double x2,
                                  double x3_scaled) {
  const GridSpec& g = slab.grid;
  if (x1 < g.x_min - 1e-12 || x1 > g.x_max + 1e-12 || x2 < g.y_min - 1e-12 ||
      x2 > g.y_max + 1e-12 || std::abs(x3_scaled) > 0.5 + 1e-12)
    throw std::invalid_argument("assemble_uh: sample outside slab");

  // cubic Lagrange along x3
  double s = (x3_scaled + 0.5) / slab.dx3();
  int j0 = std::min(std::max(static_cast<int>(std::floor(s)) - 1, 0), slab.n3 - 4);
  double wl[4];
  for (int a = 0; a < 4; ++a) {
    wl[a] = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a) wl[a] *= (s - (j0 + b)) / static_cast<double>(a - b);
  }

  // bilinear across the four surrounding columns
  int i0 = std::min(std::max(static_cast<int>((x1 - g.x_min) / g.hx()), 0), g.nx - 2);
  int j0g = std::min(std::max(static_cast<int>((x2 - g.y_min) / g.hy()), 0), g.ny - 2);
  double fx = (x1 - g.x(i0)) / g.hx(), fy = (x2 - g.y(j0g)) / g.hy();
  double wb[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  int nodes[4] = {g.index(i0, j0g), g.index(i0 + 1, j0g), g.index(i0, j0g + 1),
                  g.index(i0 + 1, j0g + 1)};

  auto interp = [&](const std::vector<double>& data) {
    double out = 0.0;
    for (int n = 0; n < 4; ++n)
      for (int a = 0; a < 4; ++a)
        out += wb[n] * wl[a] * data[phi.idx(nodes[n], j0 + a)];
    return out;
  };
  double ph = interp(phi.phi);
  double phx = interp(phi.dx);
  double phy = interp(phi.dy);

  Derivs d = prepare(r);
  ColVals c = col_eval(d, r, x1, x2);
  CandPoly q = cand_poly(c, slab.h);
  double d3 = f_fast(c, q, slab.h, ph, x3_scaled, true);

  Mat3 M = Mat3::Identity();
  M(2, 0) = slab.h * phx;
  M(2, 1) = slab.h * phy;
  M(2, 2) = d3;
  double t = slab.h * ph;
  return {q.point(t), q.grad(t) * M};
}

Energy3D energy3d(const RecoveryRecipe& r, const Slab3D& slab, const PhiSolution& phi) {
  const GridSpec& g = slab.grid;
  if (g.nx % 2 == 0 || g.ny % 2 == 0)
    throw std::invalid_argument("energy3d: tangential node counts must be odd");
  if (!phi.grid.same_as(g) || phi.n3 != slab.n3 || phi.h != slab.h)
    throw std::invalid_argument("energy3d: phi solution does not match slab");
  Derivs d = prepare(r);
  std::vector<double> wx = simpson_weights(g.nx, g.hx());
  std::vector<double> wy = simpson_weights(g.ny, g.hy());
  std::vector<double> w3 = simpson_weights(slab.n3, slab.dx3());
  const double h = slab.h;

  Energy3D out;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int node = g.index(i, j);
      ColVals c = col_eval(d, r, g.x(i), g.y(j));
      CandPoly q = cand_poly(c, h);
      for (int k = 0; k < slab.n3; ++k) {
        int id = phi.idx(node, k);
        Mat3 M = Mat3::Identity();
        M(2, 0) = h * phi.dx[id];
        M(2, 1) = h * phi.dy[id];
        M(2, 2) = phi.d3[id];
        Mat3 F = q.grad(h * phi.phi[id]) * M;
        Mat3 a = growth_at(c, h, slab.x3(k));
        Mat3 B = F * a.inverse();
        double dev = std::abs(B.determinant() - 1.0);
        out.det_dev = std::max(out.det_dev, dev);
        if (dev > 1e-4) {
          std::ostringstream os;
          os << "energy3d: determinant deviation " << dev << " at node (" << i << ", "
             << j << ", " << k << "), construction invalid at h = " << h;
          throw std::runtime_error(os.str());
        }
        out.value += wx[i] * wy[j] * w3[k] * density_w(B);
      }
    }
  out.value /= h * h * h * h;
  return out;
}

double limit_value(const RecoveryRecipe& r, const GridSpec& g) {
  Derivs d = prepare(r);
  // match the tangential quadrature of energy3d so the gap between the two
  // measures thickness effects, not spatial discretization
  bool simpson = g.nx % 2 == 1 && g.ny % 2 == 1;
  std::vector<double> wx, wy;
  if (simpson) {
    wx = simpson_weights(g.nx, g.hx());
    wy = simpson_weights(g.ny, g.hy());
  }
  double total = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double x1 = g.x(i), x2 = g.y(j);
      ColVals c = col_eval(d, r, x1, x2);
      Mat2 G0;
      G0 << c.w1x + 0.5 * c.vx * c.vx - 0.5 * (c.E(0, 0) + c.E(0, 0)),
          0.5 * (c.w1y + c.w2x) + 0.5 * c.vx * c.vy - 0.5 * (c.E(0, 1) + c.E(1, 0)),
          0.5 * (c.w1y + c.w2x) + 0.5 * c.vx * c.vy - 0.5 * (c.E(0, 1) + c.E(1, 0)),
          c.w2y + 0.5 * c.vy * c.vy - 0.5 * (c.E(1, 1) + c.E(1, 1));
      Mat2 B;
      B << c.vxx + 0.5 * (c.K(0, 0) + c.K(0, 0)),
          c.vxy + 0.5 * (c.K(0, 1) + c.K(1, 0)),
          c.vxy + 0.5 * (c.K(0, 1) + c.K(1, 0)),
          c.vyy + 0.5 * (c.K(1, 1) + c.K(1, 1));

      Vec3 c0(r.c0[0].eval(x1, x2), r.c0[1].eval(x1, x2), r.c0[2].eval(x1, x2));
      Vec3 c1(r.c1[0].eval(x1, x2), r.c1[1].eval(x1, x2), r.c1[2].eval(x1, x2));
      Vec3 b0 = c0 + Vec3(0, 0, 0.5 * (c.vx * c.vx + c.vy * c.vy));

      Mat3 M0 = embed2(G0);
      M0 += 0.5 * (b0 * Vec3::UnitZ().transpose() + Vec3::UnitZ() * b0.transpose());
      Mat3 M1 = embed2(Mat2(-B));
      M1 += 0.5 * (c1 * Vec3::UnitZ().transpose() + Vec3::UnitZ() * c1.transpose());

      // Q3 of the stored density: 2 |sym F|^2
      auto q3 = [](const Mat3& F) {
        Mat3 S = 0.5 * (F + F.transpose());
        return 2.0 * S.squaredNorm();
      };
      double wq = simpson ? wx[i] * wy[j] : quad_weight(g, i, j);
      total += wq * (0.5 * q3(M0) + (1.0 / 24.0) * q3(M1));
    }
  return total;
}

StudyResult convergence_study(const RecoveryRecipe& r, const std::vector<double>& hs,
                              const Slab3D& slab_template) {
  for (size_t i = 1; i < hs.size(); ++i)
    if (!(hs[i] < hs[i - 1]))
      throw std::invalid_argument("convergence_study: h list must decrease");

  StudyResult res;
  res.limit = limit_value(r, slab_template.grid);
  std::vector<double> dphi, dd3, dtan, gaps;
  for (double h : hs) {
    Slab3D slab(slab_template.grid, slab_template.n3, h);
    PhiSolution phi = solve_phi(r, slab);
    Energy3D e = energy3d(r, slab, phi);
    StudyRow row;
    row.h = h;
    row.dev_phi = phi.dev_phi;
    row.dev_d3 = phi.dev_d3;
    row.dev_tan = phi.dev_tan;
    row.det_dev = e.det_dev;
    row.energy = e.value;
    row.gap = std::abs(e.value - res.limit);
    res.rows.push_back(row);
    res.max_contraction = std::max(res.max_contraction, phi.contraction);
    dphi.push_back(row.dev_phi);
    dd3.push_back(row.dev_d3);
    dtan.push_back(row.dev_tan);
    gaps.push_back(row.gap);
  }
  std::vector<double> hv(hs.begin(), hs.end());
  res.slope_phi = fit_slope(hv, dphi);
  res.slope_d3 = fit_slope(hv, dd3);
  res.slope_tan = fit_slope(hv, dtan);
  res.slope_gap = fit_slope(hv, gaps);
  return res;
}

}  // namespace vkp
