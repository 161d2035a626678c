#include "elpde.hpp"

#include <Eigen/Sparse>
#include <cmath>
#include <map>
#include <stdexcept>

namespace vkp {

namespace {

using Offset = std::pair<int, int>;
using Stencil = std::map<Offset, double>;

Stencil laplacian_stencil(const GridSpec& g) {
  double a = 1.0 / (g.hx() * g.hx()), b = 1.0 / (g.hy() * g.hy());
  return {{{-1, 0}, a}, {{1, 0}, a}, {{0, -1}, b}, {{0, 1}, b}, {{0, 0}, -2 * (a + b)}};
}

Stencil compose(const Stencil& s1, const Stencil& s2) {
  Stencil out;
  for (const auto& [o1, c1] : s1)
    for (const auto& [o2, c2] : s2)
      out[{o1.first + o2.first, o1.second + o2.second}] += c1 * c2;
  return out;
}

struct BoundaryData {
  ScalarField value;  // on boundary nodes
  ScalarField gn;     // outward normal derivative on boundary nodes
};

BoundaryData sample_bc(const GridSpec& g, const BCSpec& bc) {
  BoundaryData d{ScalarField(g), ScalarField(g)};
  if (bc.homogeneous) return d;
  Expr vx = bc.v_value.diff(0), vy = bc.v_value.diff(1);
  auto set = [&](int i, int j, double nx_, double ny_) {
    d.value.at(i, j) = bc.v_value.eval(g.x(i), g.y(j));
    d.gn.at(i, j) =
        nx_ * vx.eval(g.x(i), g.y(j)) + ny_ * vy.eval(g.x(i), g.y(j));
  };
  for (int j = 0; j < g.ny; ++j) {
    set(0, j, -1, 0);
    set(g.nx - 1, j, 1, 0);
  }
  for (int i = 0; i < g.nx; ++i) {
    set(i, 0, 0, -1);
    set(i, g.ny - 1, 0, 1);
  }
  return d;
}

}  // namespace

struct BiharmonicSolver::Impl {
  GridSpec g;
  Stencil stencil;
  Eigen::SparseMatrix<double> A;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor;
  mutable double last_rel_residual = 0.0;

  int unknowns() const { return (g.nx - 2) * (g.ny - 2); }
  int uidx(int i, int j) const { return (j - 1) * (g.nx - 2) + (i - 1); }
  bool is_interior(int i, int j) const {
    return i >= 1 && i <= g.nx - 2 && j >= 1 && j <= g.ny - 2;
  }
};

BiharmonicSolver::BiharmonicSolver(const GridSpec& g) : impl_(new Impl) {
  if (g.nx < 5 || g.ny < 5)
    throw std::invalid_argument("BiharmonicSolver: need nx, ny >= 5");
  impl_->g = g;
  Stencil lap = laplacian_stencil(g);
  impl_->stencil = compose(lap, lap);

  std::vector<Eigen::Triplet<double>> trip;
  for (int j = 1; j <= g.ny - 2; ++j)
    for (int i = 1; i <= g.nx - 2; ++i) {
      int row = impl_->uidx(i, j);
      for (const auto& [off, c] : impl_->stencil) {
        int ti = i + off.first, tj = j + off.second;
        // ghost nodes one layer outside reflect to the mirror interior node
        if (ti == -1) ti = 1;
        else if (ti == g.nx) ti = g.nx - 2;
        if (tj == -1) tj = 1;
        else if (tj == g.ny) tj = g.ny - 2;
        if (impl_->is_interior(ti, tj))
          trip.emplace_back(row, impl_->uidx(ti, tj), c);
        // boundary targets contribute to the rhs at solve time
      }
    }
  impl_->A.resize(impl_->unknowns(), impl_->unknowns());
  impl_->A.setFromTriplets(trip.begin(), trip.end());
  impl_->factor.compute(impl_->A);
  if (impl_->factor.info() != Eigen::Success)
    throw std::runtime_error("BiharmonicSolver: factorization failed");
}

BiharmonicSolver::~BiharmonicSolver() = default;
BiharmonicSolver::BiharmonicSolver(BiharmonicSolver&&) noexcept = default;

const GridSpec& BiharmonicSolver::grid() const { return impl_->g; }
double BiharmonicSolver::last_residual() const { return impl_->last_rel_residual; }

Eigen::MatrixXd BiharmonicSolver::dense_matrix() const {
  return Eigen::MatrixXd(impl_->A);
}

ScalarField BiharmonicSolver::solve(const ScalarField& rhs, const BCSpec& bc) const {
  const GridSpec& g = impl_->g;
  if (!rhs.grid.same_as(g)) throw std::invalid_argument("biharmonic_solve: grid mismatch");
  BoundaryData bd = sample_bc(g, bc);

  Eigen::VectorXd b(impl_->unknowns());
  for (int j = 1; j <= g.ny - 2; ++j)
    for (int i = 1; i <= g.nx - 2; ++i) {
      double r = rhs.at(i, j);
      for (const auto& [off, c] : impl_->stencil) {
        int ti = i + off.first, tj = j + off.second;
        // ghost elimination: u_ghost = u_mirror + 2h * gn at the edge node
        if (ti == -1) {
          r -= c * 2.0 * g.hx() * bd.gn.at(0, tj);
          ti = 1;
        } else if (ti == g.nx) {
          r -= c * 2.0 * g.hx() * bd.gn.at(g.nx - 1, tj);
          ti = g.nx - 2;
        }
        if (tj == -1) {
          r -= c * 2.0 * g.hy() * bd.gn.at(ti, 0);
          tj = 1;
        } else if (tj == g.ny) {
          r -= c * 2.0 * g.hy() * bd.gn.at(ti, g.ny - 1);
          tj = g.ny - 2;
        }
        if (!impl_->is_interior(ti, tj)) r -= c * bd.value.at(ti, tj);
      }
      b[impl_->uidx(i, j)] = r;
    }

  Eigen::VectorXd u = impl_->factor.solve(b);
  // a couple of refinement passes keep the residual near machine precision
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::VectorXd res = b - impl_->A * u;
    u += impl_->factor.solve(res);
  }
  // normwise backward error ||Au - b|| / (||A|| ||u|| + ||b||)
  double a_norm = Eigen::VectorXd(impl_->A.coeffs().cwiseAbs()).maxCoeff();
  impl_->last_rel_residual = (impl_->A * u - b).norm() /
                             std::max(1e-300, a_norm * u.norm() + b.norm());

  ScalarField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out.at(i, j) = impl_->is_interior(i, j) ? u[impl_->uidx(i, j)] : bd.value.at(i, j);
  return out;
}

ScalarField biharmonic_apply_interior(const ScalarField& u) {
  const GridSpec& g = u.grid;
  Stencil lap = laplacian_stencil(g);
  Stencil s2 = compose(lap, lap);
  ScalarField out(g);
  for (int j = 2; j < g.ny - 2; ++j)
    for (int i = 2; i < g.nx - 2; ++i) {
      double s = 0;
      for (const auto& [off, c] : s2) s += c * u.at(i + off.first, j + off.second);
      out.at(i, j) = s;
    }
  return out;
}

ScalarField membrane_rhs(const PrestrainSpec& p, const Material& m,
                         const ScalarField& v) {
  ScalarField br = bracket(v, v);
  ScalarField cc = curl_t_curl(p.sym_eps_2x2(v.grid));
  ScalarField out(v.grid);
  for (int k = 0; k < v.grid.size(); ++k)
    out.v[k] = -1.5 * m.mu * br.v[k] - 3.0 * m.mu * cc.v[k];
  return out;
}

ScalarField bending_rhs(const PrestrainSpec& p, const Material& m, const ScalarField& v,
                        const ScalarField& phi) {
  if (!v.grid.same_as(phi.grid)) throw std::invalid_argument("bending_rhs: grid mismatch");
  ScalarField br = bracket(v, phi);
  MatrixField2 kg = p.sym_kappa_2x2(v.grid);
  MatrixField2 cof = cof2(kg);
  MatrixField2 sum(v.grid);
  for (int k = 0; k < v.grid.size(); ++k) {
    sum.a11[k] = kg.a11[k] + 0.5 * cof.a11[k];
    sum.a12[k] = kg.a12[k] + 0.5 * cof.a12[k];
    sum.a21[k] = kg.a21[k] + 0.5 * cof.a21[k];
    sum.a22[k] = kg.a22[k] + 0.5 * cof.a22[k];
  }
  ScalarField dd = div_t_div(sum);
  ScalarField out(v.grid);
  for (int k = 0; k < v.grid.size(); ++k)
    out.v[k] = br.v[k] - (m.mu / 3.0) * dd.v[k];
  return out;
}

ELResidual el_residual(const ELSolution& sol, const PrestrainSpec& p, const Material& m,
                       const ScalarField* membrane_source,
                       const ScalarField* bending_source) {
  const GridSpec& g = sol.v.grid;
  ScalarField bh_phi = biharmonic_apply_interior(sol.phi);
  ScalarField bh_v = biharmonic_apply_interior(sol.v);
  ScalarField m_rhs = membrane_rhs(p, m, sol.v);
  ScalarField b_rhs = bending_rhs(p, m, sol.v, sol.phi);

  ELResidual out{ScalarField(g), ScalarField(g)};
  for (int j = 2; j < g.ny - 2; ++j)
    for (int i = 2; i < g.nx - 2; ++i) {
      int k = g.index(i, j);
      double sm = membrane_source ? membrane_source->v[k] : 0.0;
      double sb = bending_source ? bending_source->v[k] : 0.0;
      out.membrane.v[k] = bh_phi.v[k] - m_rhs.v[k] - sm;
      out.bending.v[k] = (m.mu / 3.0) * bh_v.v[k] - b_rhs.v[k] - sb;
    }
  out.membrane_norm = max_abs_interior(out.membrane, 2);
  out.bending_norm = max_abs_interior(out.bending, 2);
  return out;
}

ELSolution solve_el(const PrestrainSpec& p, const Material& m, const GridSpec& g,
                    const BCSpec& bc, const ELOptions& opts) {
  if (!(opts.damping > 0.0) || opts.damping > 1.0)
    throw std::invalid_argument("solve_el: damping must be in (0, 1]");
  BiharmonicSolver solver(g);
  BCSpec clamped;  // homogeneous, for phi

  ELSolution sol;
  sol.v = ScalarField(g);
  sol.phi = ScalarField(g);

  for (int it = 1; it <= opts.max_outer; ++it) {
    sol.picard_iterations = it;

    ScalarField rm = membrane_rhs(p, m, sol.v);
    if (opts.membrane_source)
      for (int k = 0; k < g.size(); ++k) rm.v[k] += opts.membrane_source->v[k];
    ScalarField phi_new = solver.solve(rm, clamped);

    ScalarField rb = bending_rhs(p, m, sol.v, phi_new);
    if (opts.bending_source)
      for (int k = 0; k < g.size(); ++k) rb.v[k] += opts.bending_source->v[k];
    for (int k = 0; k < g.size(); ++k) rb.v[k] *= 3.0 / m.mu;
    ScalarField v_new = solver.solve(rb, bc);

    double diff = 0.0, norm = 0.0;
    for (int k = 0; k < g.size(); ++k) {
      double vd = (1.0 - opts.damping) * sol.v.v[k] + opts.damping * v_new.v[k];
      diff = std::max(diff, std::abs(vd - sol.v.v[k]));
      norm = std::max(norm, std::abs(vd));
      sol.v.v[k] = vd;
    }
    sol.phi = std::move(phi_new);

    if (norm > 1e6)
      throw std::runtime_error("solve_el: iterate diverged (|v| > 1e6) at iteration " +
                               std::to_string(it));
    if (diff <= opts.picard_tol) {
      sol.converged = true;
      break;
    }
  }

  ELResidual res =
      el_residual(sol, p, m, opts.membrane_source, opts.bending_source);
  sol.membrane_residual = res.membrane_norm;
  sol.bending_residual = res.bending_norm;
  return sol;
}

double membrane_stress_check(const PlateState& s, const PrestrainSpec& p,
                             const Material& m) {
  MatrixField2 S = stretching_strain(s, p);
  const GridSpec& g = s.grid();
  ScalarField n11{g}, n12{g}, n22{g};
  for (int k = 0; k < g.size(); ++k) {
    double tr = S.a11[k] + S.a22[k];
    n11.v[k] = 2.0 * m.mu * (S.a11[k] + tr);
    n22.v[k] = 2.0 * m.mu * (S.a22[k] + tr);
    n12.v[k] = 2.0 * m.mu * S.a12[k];
  }
  ScalarField d1 = d1_x(n11), d2 = d1_y(n12), d3 = d1_x(n12), d4 = d1_y(n22);
  double worst = 0.0;
  for (int j = 2; j < g.ny - 2; ++j)
    for (int i = 2; i < g.nx - 2; ++i) {
      int k = g.index(i, j);
      worst = std::max(worst, std::abs(d1.v[k] + d2.v[k]));
      worst = std::max(worst, std::abs(d3.v[k] + d4.v[k]));
    }
  return worst;
}

NaturalBCNorms natural_bc_residual(const ELSolution& sol, const PrestrainSpec& p,
                                   const Material& m, double nu) {
  const GridSpec& g = sol.v.grid;
  MatrixField2 psi = fd_hessian(sol.v);
  MatrixField2 kg = p.sym_kappa_2x2(g);
  for (int k = 0; k < g.size(); ++k) {
    psi.a11[k] += kg.a11[k];
    psi.a22[k] += kg.a22[k];
    psi.a12[k] += kg.a12[k];
    psi.a21[k] = psi.a12[k];
  }

  NaturalBCNorms out;

  // phi clamped conditions
  VectorField2 gphi = fd_gradient(sol.phi);
  auto phi_res = [&](int i, int j, double nx_, double ny_) {
    double dn = nx_ * gphi.c1[g.index(i, j)] + ny_ * gphi.c2[g.index(i, j)];
    out.clamped_phi =
        std::max(out.clamped_phi, std::max(std::abs(sol.phi.at(i, j)), std::abs(dn)));
  };
  for (int j = 0; j < g.ny; ++j) {
    phi_res(0, j, -1, 0);
    phi_res(g.nx - 1, j, 1, 0);
  }
  for (int i = 0; i < g.nx; ++i) {
    phi_res(i, 0, 0, -1);
    phi_res(i, g.ny - 1, 0, 1);
  }

  // M = Psi + 1/2 cof Psi and its row-wise divergence
  MatrixField2 cof = cof2(psi);
  ScalarField m11{g}, m12{g}, m21{g}, m22{g};
  for (int k = 0; k < g.size(); ++k) {
    m11.v[k] = psi.a11[k] + 0.5 * cof.a11[k];
    m12.v[k] = psi.a12[k] + 0.5 * cof.a12[k];
    m21.v[k] = psi.a21[k] + 0.5 * cof.a21[k];
    m22.v[k] = psi.a22[k] + 0.5 * cof.a22[k];
  }
  ScalarField div1{g}, div2{g};
  {
    ScalarField a = d1_x(m11), b = d1_y(m12), c = d1_x(m21), d = d1_y(m22);
    for (int k = 0; k < g.size(); ++k) {
      div1.v[k] = a.v[k] + b.v[k];
      div2.v[k] = c.v[k] + d.v[k];
    }
  }

  // Psi_ntau along each edge, differentiated tangentially
  auto edge_norms = [&](bool vertical, int fixed, double nsign) {
    int n = vertical ? g.ny : g.nx;
    std::vector<double> pnt(n);
    for (int t = 0; t < n; ++t) {
      int i = vertical ? fixed : t, j = vertical ? t : fixed;
      int k = g.index(i, j);
      double nn = vertical ? psi.a11[k] : psi.a22[k];
      double tt = vertical ? psi.a22[k] : psi.a11[k];
      out.moment = std::max(out.moment, std::abs(nn + 0.5 * tt));
      pnt[t] = nsign * psi.a12[k];  // Psi : n (x) tau
    }
    double h = vertical ? g.hy() : g.hx();
    for (int t = 0; t < n; ++t) {
      double dpnt;
      if (t == 0)
        dpnt = (-3 * pnt[0] + 4 * pnt[1] - pnt[2]) / (2 * h);
      else if (t == n - 1)
        dpnt = (3 * pnt[n - 1] - 4 * pnt[n - 2] + pnt[n - 3]) / (2 * h);
      else
        dpnt = (pnt[t + 1] - pnt[t - 1]) / (2 * h);
      int i = vertical ? fixed : t, j = vertical ? t : fixed;
      int k = g.index(i, j);
      double divn = nsign * (vertical ? div1.v[k] : div2.v[k]);
      out.edge_traction =
          std::max(out.edge_traction, std::abs((1.0 - nu) * dpnt + divn));
    }
  };
  edge_norms(true, 0, -1.0);
  edge_norms(true, g.nx - 1, 1.0);
  edge_norms(false, 0, -1.0);
  edge_norms(false, g.ny - 1, 1.0);
  return out;
}

Expr laplacian_expr(const Expr& f) {
  return f.diff(0).diff(0) + f.diff(1).diff(1);
}

Expr biharmonic_expr(const Expr& f) { return laplacian_expr(laplacian_expr(f)); }

Expr bracket_expr(const Expr& v, const Expr& u) {
  Expr v11 = v.diff(0).diff(0), v22 = v.diff(1).diff(1), v12 = v.diff(0).diff(1);
  Expr u11 = u.diff(0).diff(0), u22 = u.diff(1).diff(1), u12 = u.diff(0).diff(1);
  return v11 * u22 + v22 * u11 - Expr::constant(2.0) * v12 * u12;
}

Expr curl_t_curl_sym2_expr(const ExprMat3& m) {
  Expr s11 = m[0];
  Expr s22 = m[4];
  Expr s12 = (m[1] + m[3]) / Expr::constant(2.0);
  return s11.diff(1).diff(1) + s22.diff(0).diff(0) -
         Expr::constant(2.0) * s12.diff(0).diff(1);
}

}  // namespace vkp
