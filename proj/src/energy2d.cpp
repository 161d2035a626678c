#include "energy2d.hpp"

#include <stdexcept>

namespace vkp {

namespace {

void check_domain(const PlateState& s, const PrestrainSpec& p) {
  const GridSpec& g = s.grid();
  if (!s.w.grid.same_as(g)) throw std::invalid_argument("PlateState: grid mismatch");
  if (g.x_min < p.domain.x_min - 1e-12 || g.x_max > p.domain.x_max + 1e-12 ||
      g.y_min < p.domain.y_min - 1e-12 || g.y_max > p.domain.y_max + 1e-12)
    throw std::invalid_argument("energy2d: grid outside prestrain domain");
}

}  // namespace

double trace_coefficient(const Material& m, EnergyMode mode, double k) {
  switch (mode) {
    case EnergyMode::incompressible:
      return 2.0 * m.mu;
    case EnergyMode::compressible:
      return 2.0 * m.mu * m.lambda / (2.0 * m.mu + m.lambda);
    case EnergyMode::penalized: {
      if (k < 0.0) throw std::invalid_argument("energy2d: penalty k must be >= 0");
      double lk = m.lambda + k;
      return 2.0 * m.mu * lk / (2.0 * m.mu + lk);
    }
  }
  return 0.0;
}

MatrixField2 stretching_strain(const PlateState& s, const PrestrainSpec& p) {
  check_domain(s, p);
  const GridSpec& g = s.grid();
  ScalarField w1{g}, w2{g};
  w1.v = s.w.c1;
  w2.v = s.w.c2;
  ScalarField w1x = d1_x(w1), w1y = d1_y(w1), w2x = d1_x(w2), w2y = d1_y(w2);
  VectorField2 gv = fd_gradient(s.v);
  MatrixField2 eg = p.sym_eps_2x2(g);
  MatrixField2 out(g);
  for (int kix = 0; kix < g.size(); ++kix) {
    double off = 0.5 * (w1y.v[kix] + w2x.v[kix]) + 0.5 * gv.c1[kix] * gv.c2[kix] -
                 eg.a12[kix];
    out.a11[kix] = w1x.v[kix] + 0.5 * gv.c1[kix] * gv.c1[kix] - eg.a11[kix];
    out.a22[kix] = w2y.v[kix] + 0.5 * gv.c2[kix] * gv.c2[kix] - eg.a22[kix];
    out.a12[kix] = out.a21[kix] = off;
  }
  out.symmetric = true;
  return out;
}

MatrixField2 bending_strain(const PlateState& s, const PrestrainSpec& p) {
  check_domain(s, p);
  const GridSpec& g = s.grid();
  MatrixField2 h = fd_hessian(s.v);
  MatrixField2 kg = p.sym_kappa_2x2(g);
  MatrixField2 out(g);
  for (int kix = 0; kix < g.size(); ++kix) {
    out.a11[kix] = h.a11[kix] + kg.a11[kix];
    out.a22[kix] = h.a22[kix] + kg.a22[kix];
    out.a12[kix] = out.a21[kix] = h.a12[kix] + kg.a12[kix];
  }
  out.symmetric = true;
  return out;
}

EnergyBreakdown energy(const PlateState& s, const PrestrainSpec& p, const Material& m,
                       EnergyMode mode, double k) {
  const double beta = trace_coefficient(m, mode, k);
  MatrixField2 S = stretching_strain(s, p);
  MatrixField2 B = bending_strain(s, p);
  const GridSpec& g = s.grid();

  EnergyBreakdown out;
  out.mode = mode;
  out.k = k;
  // fixed summation order: row-major nodes
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int kid = g.index(i, j);
      double wq = quad_weight(g, i, j);
      auto q = [&](const MatrixField2& M) {
        double n2 = M.a11[kid] * M.a11[kid] + M.a22[kid] * M.a22[kid] +
                    2.0 * M.a12[kid] * M.a12[kid];
        double tr = M.a11[kid] + M.a22[kid];
        return 2.0 * m.mu * n2 + beta * tr * tr;
      };
      out.stretching += wq * 0.5 * q(S);
      out.bending += wq * (1.0 / 24.0) * q(B);
    }
  out.total = out.stretching + out.bending;
  return out;
}

void energy_gradient(const PlateState& s, const PrestrainSpec& p, const Material& m,
                     EnergyMode mode, double k, VectorField2& grad_w,
                     ScalarField& grad_v) {
  const double beta = trace_coefficient(m, mode, k);
  const GridSpec& g = s.grid();
  MatrixField2 S = stretching_strain(s, p);
  MatrixField2 B = bending_strain(s, p);
  VectorField2 gv = fd_gradient(s.v);

  // P = dQ/dM = 4 mu M + 2 beta Tr(M) Id, times the quadrature weight and
  // the integral prefactor.
  ScalarField Ps11{g}, Ps22{g}, Ps12{g}, Pb11{g}, Pb22{g}, Pb12{g};
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int kid = g.index(i, j);
      double wq = quad_weight(g, i, j);
      double trS = S.a11[kid] + S.a22[kid];
      double trB = B.a11[kid] + B.a22[kid];
      Ps11.v[kid] = 0.5 * wq * (4.0 * m.mu * S.a11[kid] + 2.0 * beta * trS);
      Ps22.v[kid] = 0.5 * wq * (4.0 * m.mu * S.a22[kid] + 2.0 * beta * trS);
      Ps12.v[kid] = 0.5 * wq * (4.0 * m.mu * S.a12[kid]);
      Pb11.v[kid] = (1.0 / 24.0) * wq * (4.0 * m.mu * B.a11[kid] + 2.0 * beta * trB);
      Pb22.v[kid] = (1.0 / 24.0) * wq * (4.0 * m.mu * B.a22[kid] + 2.0 * beta * trB);
      Pb12.v[kid] = (1.0 / 24.0) * wq * (4.0 * m.mu * B.a12[kid]);
    }

  // w gradient: P : sym grad(dw) = P : grad(dw) since P is symmetric
  grad_w = VectorField2(g);
  {
    ScalarField g1 = d1_x_adj(Ps11), g2 = d1_y_adj(Ps12);
    for (int kid = 0; kid < g.size(); ++kid) grad_w.c1[kid] = g1.v[kid] + g2.v[kid];
    ScalarField g3 = d1_x_adj(Ps12), g4 = d1_y_adj(Ps22);
    for (int kid = 0; kid < g.size(); ++kid) grad_w.c2[kid] = g3.v[kid] + g4.v[kid];
  }

  // v gradient: stretching part via (P grad v) . grad(dv), bending part via
  // the hessian adjoint with the off-diagonal counted twice.
  grad_v = ScalarField(g);
  {
    ScalarField q1{g}, q2{g};
    for (int kid = 0; kid < g.size(); ++kid) {
      q1.v[kid] = Ps11.v[kid] * gv.c1[kid] + Ps12.v[kid] * gv.c2[kid];
      q2.v[kid] = Ps12.v[kid] * gv.c1[kid] + Ps22.v[kid] * gv.c2[kid];
    }
    ScalarField a = d1_x_adj(q1), b = d1_y_adj(q2);
    ScalarField c = d2_x_adj(Pb11), d = d2_y_adj(Pb22);
    ScalarField off{g};
    for (int kid = 0; kid < g.size(); ++kid) off.v[kid] = 2.0 * Pb12.v[kid];
    ScalarField e = d1_y_adj(d1_x_adj(off));
    for (int kid = 0; kid < g.size(); ++kid)
      grad_v.v[kid] = a.v[kid] + b.v[kid] + c.v[kid] + d.v[kid] + e.v[kid];
  }
}

}  // namespace vkp
