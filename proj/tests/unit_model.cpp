#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "elpde.hpp"
#include "energy2d.hpp"
#include "minimize.hpp"

using namespace vkp;

namespace {

double max_abs_field(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// In-plane field w = x' and deflection v = 0 on a grid.
PlateState identity_inplane(const GridSpec& g) {
  PlateState s(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      s.w.c1[g.index(i, j)] = g.x(i);
      s.w.c2[g.index(i, j)] = g.y(j);
    }
  return s;
}

/// Analytic zero-energy state for kappa_g = -diag(1,0,0): bending cancels
/// against v = x1^2/2 and stretching against w = (-x1^3/6, 0).
PlateState compensated_bend_state(const GridSpec& g) {
  PlateState s(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double x = g.x(i);
      s.v.v[g.index(i, j)] = 0.5 * x * x;
      s.w.c1[g.index(i, j)] = -x * x * x / 6.0;
    }
  return s;
}

}  // namespace

TEST_CASE("stretching strain") {
  GridSpec g = GridSpec::unit_square(9, 9);
  PrestrainSpec zero = preset_prestrain("zero");

  MatrixField2 s0 = stretching_strain(PlateState(g), zero);
  CHECK(max_abs_field(s0.a11) == 0.0);

  // identity in-plane gradient cancels a unit swell
  MatrixField2 s1 = stretching_strain(identity_inplane(g), preset_prestrain("swell", 1.0));
  CHECK(max_abs_field(s1.a11) < 1e-12);
  CHECK(max_abs_field(s1.a12) < 1e-12);

  PlateState tilt(g);
  tilt.v = sample(g, Expr::parse("x1"));
  MatrixField2 s2 = stretching_strain(tilt, zero);
  for (int i = 0; i < g.size(); ++i) {
    CHECK(s2.a11[i] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(s2.a22[i]) < 1e-12);
  }
}

TEST_CASE("bending strain") {
  GridSpec g = GridSpec::unit_square(9, 9);
  CHECK(max_abs_field(bending_strain(PlateState(g), preset_prestrain("zero")).a11) ==
        0.0);

  PlateState s(g);
  s.v = sample(g, Expr::parse("-0.5*x1^2"));
  MatrixField2 b = bending_strain(s, preset_prestrain("uniform-bend", 1.0));
  for (int i = 0; i < g.size(); ++i) {
    CHECK(std::abs(b.a11[i]) < 1e-11);
    CHECK(b.a22[i] == doctest::Approx(1.0).epsilon(1e-12));
  }

  PlateState bowl(g);
  bowl.v = sample(g, Expr::parse("0.5*(x1^2 + x2^2)"));
  MatrixField2 b2 = bending_strain(bowl, preset_prestrain("zero"));
  for (int i = 0; i < g.size(); ++i) {
    CHECK(b2.a11[i] == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(b2.a22[i] == doctest::Approx(1.0).epsilon(1e-11));
  }
}

TEST_CASE("energy of constant-strain configurations") {
  GridSpec g = GridSpec::unit_square(9, 9);
  Material m(1.0, 0.0);
  PrestrainSpec bend = preset_prestrain("uniform-bend", 1.0);

  EnergyBreakdown ez =
      energy(PlateState(g), preset_prestrain("zero"), m, EnergyMode::incompressible);
  CHECK(ez.total == 0.0);

  EnergyBreakdown ei = energy(PlateState(g), bend, m, EnergyMode::incompressible);
  CHECK(ei.stretching == doctest::Approx(0.0));
  CHECK(ei.bending == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ei.total == doctest::Approx(ei.stretching + ei.bending));

  EnergyBreakdown ec = energy(PlateState(g), bend, m, EnergyMode::compressible);
  CHECK(ec.bending == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("energy mode ordering and invariances") {
  GridSpec g = GridSpec::unit_square(9, 9);
  PrestrainSpec p = preset_prestrain("incompatible-stretch");
  PlateState s = random_state(g, 11, 0.1);

  double ein = energy(s, p, Material(1.0, 3.0), EnergyMode::incompressible).total;
  // lambda never enters the trace-free mode
  CHECK(ein ==
        doctest::Approx(energy(s, p, Material(1.0, 99.0), EnergyMode::incompressible)
                            .total)
            .epsilon(1e-14));

  Material m(1.0, 3.0);
  double prev = energy(s, p, m, EnergyMode::compressible).total;
  for (double k : {1.0, 10.0, 1e3}) {
    double ek = energy(s, p, m, EnergyMode::penalized, k).total;
    CHECK(ek >= prev - 1e-13);
    CHECK(ek <= ein + 1e-13);
    prev = ek;
  }

  // rigid in-plane translation is energy-neutral
  PlateState t = s;
  for (int i = 0; i < g.size(); ++i) {
    t.w.c1[i] += 0.37;
    t.w.c2[i] -= 1.2;
  }
  CHECK(energy(t, p, m, EnergyMode::compressible).total ==
        doctest::Approx(energy(s, p, m, EnergyMode::compressible).total)
            .epsilon(1e-13));
}

TEST_CASE("analytic gradient matches finite differences") {
  GridSpec g = GridSpec::unit_square(9, 9);
  PrestrainSpec p = preset_prestrain("saddle-bend", 0.5);
  Material m(1.0, 2.0);
  PlateState s = random_state(g, 5, 0.1);

  CHECK(gradient_check(p, m, EnergyMode::incompressible, 0.0, s) < 1e-6);
  CHECK(gradient_check(p, m, EnergyMode::compressible, 0.0, s) < 1e-6);
  CHECK(gradient_check(p, m, EnergyMode::penalized, 1e3, s) < 1e-6);
  // zero state, zero prestrain: both sides vanish
  CHECK(gradient_check(preset_prestrain("zero"), m, EnergyMode::incompressible, 0.0,
                       PlateState(g)) < 1e-6);

  VectorField2 gw;
  ScalarField gv;
  energy_gradient(PlateState(g), preset_prestrain("zero"), m,
                  EnergyMode::incompressible, 0.0, gw, gv);
  CHECK(max_abs_field(gw.c1) == 0.0);
  CHECK(max_abs(gv) == 0.0);
}

TEST_CASE("minimization reaches analytic zero-energy states") {
  GridSpec g = GridSpec::unit_square(9, 9);
  SolveReport r0 = minimize_energy(preset_prestrain("zero"), Material(1.0, 0.0),
                                   EnergyMode::incompressible, 0.0,
                                   random_state(g, 2, 1e-2));
  CHECK(r0.converged);
  CHECK(r0.energy.total <= 1e-10);

  GridSpec g17 = GridSpec::unit_square(17, 17);
  SolveReport rs = minimize_energy(preset_prestrain("swell", 1.0), Material(1.0, 0.0),
                                   EnergyMode::incompressible, 0.0,
                                   random_state(g17, 3, 1e-2));
  CHECK(rs.converged);
  CHECK(rs.energy.total <= 1e-8);
  CHECK(rs.gradient_max_norm <= 1e-8);
}

TEST_CASE("compensated bend state has vanishing energy") {
  GridSpec g = GridSpec::unit_square(17, 17);
  PrestrainSpec p = preset_prestrain("cylinder-bend", -1.0);
  Material m(1.0, 0.0);
  PlateState s = compensated_bend_state(g);
  // the cubic in-plane field carries an O(h^2) stencil error, so the raw
  // state is only small; polishing removes it
  CHECK(energy(s, p, m, EnergyMode::incompressible).total <= 1e-5);

  SolveReport r = minimize_energy(p, m, EnergyMode::incompressible, 0.0, s);
  CHECK(r.energy.total <= 1e-8);
  CHECK(r.gradient_max_norm <= 1e-8);
}

TEST_CASE("minimal energy scales linearly in the shear modulus") {
  GridSpec g = GridSpec::unit_square(9, 9);
  PrestrainSpec p = preset_prestrain("incompatible-stretch");
  MinimizeOptions o;
  o.gradient_tolerance = 1e-9;
  SolveReport r = minimize_energy(p, Material(1.0, 0.0), EnergyMode::incompressible,
                                  0.0, PlateState(g), o);
  REQUIRE(r.converged);
  double scale = 4.0;
  VectorField2 gw;
  ScalarField gv;
  energy_gradient(r.state, p, Material(scale, 0.0), EnergyMode::incompressible, 0.0,
                  gw, gv);
  double gn = std::max(max_abs_field(gw.c1),
                       std::max(max_abs_field(gw.c2), max_abs(gv)));
  CHECK(gn <= scale * o.gradient_tolerance);
  CHECK(energy(r.state, p, Material(scale, 0.0), EnergyMode::incompressible).total ==
        doctest::Approx(scale * r.energy.total).epsilon(1e-12));
}

TEST_CASE("membrane right-hand side") {
  GridSpec g = GridSpec::unit_square(9, 9);
  Material m(1.0, 0.0);
  CHECK(max_abs(membrane_rhs(preset_prestrain("zero"), m, ScalarField(g))) == 0.0);

  ScalarField bowl = sample(g, Expr::parse("0.5*(x1^2 + x2^2)"));
  ScalarField r = membrane_rhs(preset_prestrain("zero"), m, bowl);
  for (double v : r.v) CHECK(v == doctest::Approx(-3.0).epsilon(1e-10));

  // a compatible in-plane prestrain is annihilated
  PrestrainSpec comp;
  // eps_2x2 = sym grad of the in-plane field (x1^2, x1^3)
  comp.eps_g[0] = Expr::parse("2*x1");
  comp.eps_g[1] = Expr::parse("1.5*x1^2");
  comp.eps_g[3] = comp.eps_g[1];
  CHECK(max_abs_interior(membrane_rhs(comp, m, ScalarField(g)), 2) < 1e-9);
}

TEST_CASE("bending right-hand side") {
  GridSpec g = GridSpec::unit_square(9, 9);
  CHECK(max_abs(bending_rhs(preset_prestrain("zero"), Material(1, 0), ScalarField(g),
                            ScalarField(g))) == 0.0);
  // constant bending prestrain differentiates to nothing
  CHECK(max_abs(bending_rhs(preset_prestrain("uniform-bend", 2.0), Material(1, 0),
                            ScalarField(g), ScalarField(g))) < 1e-12);

  PrestrainSpec p;
  p.kappa_g[0] = Expr::parse("x1^2");
  ScalarField r = bending_rhs(p, Material(3.0, 0.0), ScalarField(g), ScalarField(g));
  for (int j = 2; j < g.ny - 2; ++j)
    for (int i = 2; i < g.nx - 2; ++i)
      CHECK(r.at(i, j) == doctest::Approx(-2.0).epsilon(1e-9));
}

TEST_CASE("clamped fourth-order solver") {
  GridSpec g = GridSpec::unit_square(17, 17);
  BiharmonicSolver solver(g);
  BCSpec bc;

  ScalarField z = solver.solve(ScalarField(g), bc);
  CHECK(max_abs(z) == 0.0);

  ScalarField rhs = sample(g, Expr::parse("sin(pi*x1)*sin(pi*x2)"));
  ScalarField u1 = solver.solve(rhs, bc);
  ScalarField rhs3(g);
  for (int i = 0; i < g.size(); ++i) rhs3.v[i] = 3.0 * rhs.v[i];
  ScalarField u3 = solver.solve(rhs3, bc);
  for (int i = 0; i < g.size(); ++i)
    CHECK(u3.v[i] == doctest::Approx(3.0 * u1.v[i]).epsilon(1e-12));
  CHECK(solver.last_residual() <= 1e-10);
}

TEST_CASE("discrete fourth-order operator is symmetric positive definite") {
  GridSpec g = GridSpec::unit_square(9, 9);
  Eigen::MatrixXd A = BiharmonicSolver(g).dense_matrix();
  CHECK((A - A.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("bubble recovery converges at second order") {
  Expr bubble = Expr::parse("(x1*(1-x1))^2 * (x2*(1-x2))^2");
  Expr rhs = biharmonic_expr(bubble);
  double prev = 0.0;
  for (int n : {17, 33, 65}) {
    GridSpec g = GridSpec::unit_square(n, n);
    ScalarField u = BiharmonicSolver(g).solve(sample(g, rhs), BCSpec{});
    ScalarField ex = sample(g, bubble);
    double err = 0.0;
    for (int i = 0; i < g.size(); ++i)
      err = std::max(err, std::abs(u.v[i] - ex.v[i]));
    if (prev > 0.0) {
      double ratio = prev / err;
      CHECK(ratio > 3.3);
      CHECK(ratio < 4.7);
    }
    prev = err;
  }
}

TEST_CASE("coupled solve trivial and small-amplitude cases") {
  GridSpec g = GridSpec::unit_square(17, 17);
  Material m(1.0, 0.0);

  ELSolution z = solve_el(preset_prestrain("zero"), m, g, BCSpec{});
  CHECK(z.converged);
  CHECK(z.picard_iterations == 1);
  CHECK(max_abs(z.v) == 0.0);
  CHECK(max_abs(z.phi) == 0.0);

  PrestrainSpec p;
  p.kappa_g[0] = Expr::parse("0.001*sin(pi*x1)*sin(pi*x2)");
  GridSpec g2 = GridSpec::unit_square(33, 33);
  ELSolution s = solve_el(p, m, g2, BCSpec{});
  REQUIRE(s.converged);
  ELResidual res = el_residual(s, p, m);
  CHECK(res.bending_norm <= 1e-9);
  CHECK(res.membrane_norm <= 1e-9);

  // the nonlinear coupling is quadratically small at this amplitude
  ScalarField rb = bending_rhs(p, m, ScalarField(g2), ScalarField(g2));
  for (double& v : rb.v) v *= 3.0 / m.mu;
  ScalarField vlin = BiharmonicSolver(g2).solve(rb, BCSpec{});
  double diff = 0.0, scale = max_abs(s.v);
  for (int i = 0; i < g2.size(); ++i)
    diff = std::max(diff, std::abs(s.v.v[i] - vlin.v[i]));
  CHECK(diff <= 1e-4 * scale);
}

TEST_CASE("membrane stress equilibrium diagnostics") {
  GridSpec g = GridSpec::unit_square(17, 17);
  Material m(1.0, 0.0);

  // exact zero-stress minimizer
  PlateState sw = identity_inplane(g);
  for (int i = 0; i < g.size(); ++i) {
    sw.w.c1[i] -= 0.5;  // gauge shift, stress-neutral
  }
  // rebuild against swell(1): sym grad w = Id cancels eps
  CHECK(membrane_stress_check(sw, preset_prestrain("swell", 1.0), m) < 1e-10);

  double rnd = membrane_stress_check(random_state(g, 9, 0.5),
                                     preset_prestrain("zero"), m);
  CHECK(rnd > 1.0);
}

TEST_CASE("edge condition report") {
  GridSpec g = GridSpec::unit_square(17, 17);
  Material m(1.0, 0.0);
  ELSolution zero;
  zero.v = ScalarField(g);
  zero.phi = ScalarField(g);
  NaturalBCNorms nz = natural_bc_residual(zero, preset_prestrain("zero"), m);
  CHECK(nz.clamped_phi == 0.0);
  CHECK(nz.moment == 0.0);
  CHECK(nz.edge_traction == 0.0);

  // bending prestrain cancelling the deflection hessian: all moment terms die
  ELSolution s;
  s.v = sample(g, Expr::parse("0.5*x1^2"));
  s.phi = ScalarField(g);
  NaturalBCNorms nc = natural_bc_residual(s, preset_prestrain("cylinder-bend", -1.0), m);
  CHECK(nc.moment < 1e-10);
  CHECK(nc.edge_traction < 1e-9);
}

TEST_CASE("symbolic helpers agree with grid operators") {
  GridSpec g = GridSpec::unit_square(33, 33);
  Expr f = Expr::parse("sin(x1)*cos(2*x2)");
  ScalarField lap_sym = sample(g, laplacian_expr(f));
  MatrixField2 h = fd_hessian(sample(g, f));
  double worst = 0.0;
  for (int j = 2; j < g.ny - 2; ++j)
    for (int i = 2; i < g.nx - 2; ++i)
      worst = std::max(worst, std::abs(lap_sym.at(i, j) -
                                       (h.a11[g.index(i, j)] + h.a22[g.index(i, j)])));
  CHECK(worst < 1e-2);

  Expr u = Expr::parse("x1^2*x2");
  ScalarField br_sym = sample(g, bracket_expr(f, u));
  ScalarField br_num = bracket(sample(g, f), sample(g, u));
  worst = 0.0;
  for (int j = 2; j < g.ny - 2; ++j)
    for (int i = 2; i < g.nx - 2; ++i)
      worst = std::max(worst,
                       std::abs(br_sym.at(i, j) - br_num.at(i, j)));
  CHECK(worst < 1e-2);
}
