#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "expr.hpp"
#include "prestrain.hpp"
#include "quadform.hpp"
#include "tensorfield.hpp"

using namespace vkp;

namespace {

ScalarField constant_field(const GridSpec& g, double c) {
  ScalarField f(g);
  for (double& v : f.v) v = c;
  return f;
}

ScalarField wrap(const GridSpec& g, const std::vector<double>& v) {
  ScalarField f(g);
  f.v = v;
  return f;
}

Mat2 mat2(double a, double b, double c, double d) {
  Mat2 m;
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("expression parse, eval, diff") {
  Expr e = Expr::parse("sin(pi*x1) + x2^2");
  CHECK(e.eval(0.5, 2.0) == doctest::Approx(5.0));
  CHECK(e.diff(1).eval(0.0, 3.0) == doctest::Approx(6.0));
  Expr d = Expr::parse("x1^2").diff(0);
  CHECK(d.eval(1.5, 0.0) == doctest::Approx(3.0));
  CHECK(Expr().is_zero());
  CHECK_THROWS_AS(Expr::parse("sin(x1"), std::invalid_argument);
  CHECK_THROWS_AS(Expr::parse("x3 + 1"), std::invalid_argument);
}

TEST_CASE("gradient stencils exact on low-degree polynomials") {
  GridSpec g = GridSpec::unit_square(5, 5);
  VectorField2 lin = fd_gradient(sample(g, Expr::parse("x1")));
  for (int i = 0; i < g.size(); ++i) {
    CHECK(lin.c1[i] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(lin.c2[i] == doctest::Approx(0.0).epsilon(1e-13));
  }
  VectorField2 quad = fd_gradient(sample(g, Expr::parse("x1^2")));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      CHECK(quad.c1[g.index(i, j)] == doctest::Approx(2.0 * g.x(i)).epsilon(1e-12));
  VectorField2 z = fd_gradient(ScalarField(g));
  CHECK(max_abs(wrap(g, z.c1)) == 0.0);
  CHECK(max_abs(wrap(g, z.c2)) == 0.0);
}

TEST_CASE("hessian stencils") {
  GridSpec g = GridSpec::unit_square(7, 7);
  MatrixField2 h = fd_hessian(sample(g, Expr::parse("0.5*(x1^2 + x2^2)")));
  for (int i = 0; i < g.size(); ++i) {
    CHECK(h.a11[i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h.a22[i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(h.a12[i]) < 1e-12);
    CHECK(h.a12[i] == doctest::Approx(h.a21[i]).epsilon(1e-13));
  }
  MatrixField2 x = fd_hessian(sample(g, Expr::parse("x1*x2")));
  for (int i = 0; i < g.size(); ++i) {
    CHECK(x.a12[i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(x.a11[i]) < 1e-12);
  }
  MatrixField2 l = fd_hessian(sample(g, Expr::parse("3*x1 - 2*x2 + 1")));
  CHECK(max_abs_interior(wrap(g, l.a11), 0) < 1e-12);
}

TEST_CASE("bracket values and symmetry") {
  GridSpec g = GridSpec::unit_square(9, 9);
  ScalarField bowl = sample(g, Expr::parse("0.5*(x1^2 + x2^2)"));
  ScalarField b = bracket(bowl, bowl);
  for (double v : b.v) CHECK(v == doctest::Approx(2.0).epsilon(1e-11));

  ScalarField xy = sample(g, Expr::parse("x1*x2"));
  ScalarField b2 = bracket(xy, xy);
  for (double v : b2.v) CHECK(v == doctest::Approx(-2.0).epsilon(1e-11));

  ScalarField lin = sample(g, Expr::parse("x1 - 3*x2"));
  CHECK(max_abs(bracket(lin, xy)) < 1e-11);

  // symmetry and the determinant identity
  ScalarField u = sample(g, Expr::parse("sin(x1)*cos(x2)"));
  ScalarField bvu = bracket(bowl, u), buv = bracket(u, bowl);
  for (int i = 0; i < g.size(); ++i)
    CHECK(bvu.v[i] == doctest::Approx(buv.v[i]).epsilon(1e-13));
  MatrixField2 hu = fd_hessian(u);
  ScalarField buu = bracket(u, u);
  for (int i = 0; i < g.size(); ++i) {
    double det = hu.a11[i] * hu.a22[i] - hu.a12[i] * hu.a21[i];
    CHECK(buu.v[i] == doctest::Approx(2.0 * det).epsilon(1e-12));
  }
}

TEST_CASE("curl-transpose-curl") {
  GridSpec g = GridSpec::unit_square(9, 9);

  // symmetrized gradients are annihilated
  ScalarField w1 = sample(g, Expr::parse("x1^2"));
  MatrixField2 a(g);
  VectorField2 gw = fd_gradient(w1);
  for (int i = 0; i < g.size(); ++i) {
    a.a11[i] = gw.c1[i];
    a.a12[i] = 0.5 * gw.c2[i];
    a.a21[i] = a.a12[i];
  }
  CHECK(max_abs(curl_t_curl(a)) < 1e-10);

  MatrixField2 d(g);
  ScalarField x22 = sample(g, Expr::parse("x2^2"));
  d.a11 = x22.v;
  ScalarField c = curl_t_curl(d);
  for (double v : c.v) CHECK(v == doctest::Approx(2.0).epsilon(1e-10));

  MatrixField2 k(g);
  k.a11.assign(g.size(), 3.0);
  k.a12.assign(g.size(), -1.0);
  CHECK(max_abs(curl_t_curl(k)) < 1e-11);
}

TEST_CASE("div-transpose-div") {
  GridSpec g = GridSpec::unit_square(9, 9);
  MatrixField2 a(g);
  a.a11 = sample(g, Expr::parse("x1^2")).v;
  a.a22 = sample(g, Expr::parse("x2^2")).v;
  ScalarField d = div_t_div(a);
  for (double v : d.v) CHECK(v == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(max_abs(div_t_div(MatrixField2(g))) == 0.0);
}

TEST_CASE("cofactor annihilation under refinement") {
  double prev = 0.0;
  for (int n : {17, 33}) {
    GridSpec g = GridSpec::unit_square(n, n);
    ScalarField v = sample(g, Expr::parse("sin(2*x1 + x2)"));
    double err = max_abs_interior(div_t_div(cof2(fd_hessian(v))), 2);
    if (prev > 0.0) CHECK(err < prev / 2.5);
    prev = err;
  }
}

TEST_CASE("nodewise cofactor") {
  GridSpec g = GridSpec::unit_square(3, 3);
  MatrixField2 a(g);
  a.a11.assign(g.size(), 2.0);
  a.a22.assign(g.size(), 3.0);
  MatrixField2 c = cof2(a);
  CHECK(c.a11[0] == 3.0);
  CHECK(c.a22[0] == 2.0);

  MatrixField2 r(g);
  r.a12.assign(g.size(), 1.0);
  r.a21.assign(g.size(), -1.0);
  MatrixField2 cr = cof2(r);
  CHECK(cr.a12[0] == 1.0);
  CHECK(cr.a21[0] == -1.0);
  CHECK(cr.a11[0] == 0.0);

  MatrixField2 id(g);
  id.a11.assign(g.size(), 1.0);
  id.a22.assign(g.size(), 1.0);
  MatrixField2 ci = cof2(id);
  CHECK(ci.a11[0] == 1.0);
  CHECK(ci.a12[0] == 0.0);
}

TEST_CASE("trapezoid integration") {
  GridSpec g = GridSpec::unit_square(11, 11);
  CHECK(integrate(constant_field(g, 1.0)) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(integrate(sample(g, Expr::parse("x1"))) ==
        doctest::Approx(0.5).epsilon(1e-13));
  CHECK(integrate(sample(g, Expr::parse("x1*x2"))) ==
        doctest::Approx(0.25).epsilon(1e-13));
  double wsum = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) wsum += quad_weight(g, i, j);
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("full quadratic form values") {
  Material m10(1.0, 0.0), m11(1.0, 1.0);
  CHECK(q3_eval(m10, Mat3::Identity()) == doctest::Approx(6.0));
  CHECK(q3_eval(m11, Mat3::Identity()) == doctest::Approx(15.0));
  Mat3 skew;
  skew << 0, 1, -2, -1, 0, 3, 2, -3, 0;
  CHECK(q3_eval(m11, skew) == doctest::Approx(0.0));
}

TEST_CASE("relaxed form values") {
  Material m10(1.0, 0.0), m11(1.0, 1.0);
  CHECK(q2_relax(m10, Mat2::Identity()) == doctest::Approx(4.0));
  CHECK(q2_relax(m11, Mat2::Identity()) == doctest::Approx(20.0 / 3.0));
  CHECK(q2_relax(m11, Mat2::Zero()) == 0.0);
}

TEST_CASE("trace-free form values") {
  Material m(1.0, 7.0);  // lambda must not matter
  CHECK(q2_incomp(m, Mat2::Identity()) == doctest::Approx(12.0));
  CHECK(q2_incomp(m, mat2(1, 0, 0, -1)) == doctest::Approx(4.0));
  CHECK(q2_incomp(m, Mat2::Zero()) == 0.0);
}

TEST_CASE("penalized form values") {
  Material m(1.0, 0.0);
  CHECK(q2_penalized(m, 2.0, Mat2::Identity()) == doctest::Approx(8.0));
  CHECK(q2_penalized(m, 0.0, Mat2::Identity()) == doctest::Approx(4.0));
  CHECK(q2_penalized(m, 1e6, Mat2::Identity()) ==
        doctest::Approx(12.0).epsilon(1e-5));
  CHECK_THROWS_AS(q2_penalized(m, -1.0, Mat2::Identity()), std::invalid_argument);
}

TEST_CASE("gap between trace-free and penalized forms") {
  Material m(1.0, 0.0);
  CHECK(sandwich_gap(m, 2.0, Mat2::Identity()) == doctest::Approx(4.0));
  CHECK(sandwich_gap(m, 5.0, mat2(1, 2, -1, -1)) == doctest::Approx(0.0));
  // gap * (2 mu + lambda + k) is k-independent
  Mat2 F = mat2(0.3, -1.1, 0.4, 0.9);
  double c1 = sandwich_gap(m, 1.0, F) * (2 + 0 + 1.0);
  double c2 = sandwich_gap(m, 50.0, F) * (2 + 0 + 50.0);
  CHECK(c1 == doctest::Approx(c2).epsilon(1e-12));
}

TEST_CASE("minimizing extensions") {
  Material m(1.0, 0.0);
  Extension3 e = optimal_extension(m, Mat2::Identity(), ExtConstraint::trace_free);
  CHECK(e.F_full(0, 0) == doctest::Approx(1.0));
  CHECK(e.F_full(2, 2) == doctest::Approx(-2.0));
  CHECK(e.c[2] == doctest::Approx(-2.0));
  CHECK(e.value == doctest::Approx(12.0));
  CHECK(std::abs(e.F_full.trace()) < 1e-12);

  Extension3 e2 = optimal_extension(m, mat2(1, 0, 0, 0), ExtConstraint::trace_free);
  CHECK(e2.F_full(2, 2) == doctest::Approx(-1.0));
  CHECK(e2.value == doctest::Approx(4.0));

  Mat2 tf = mat2(1, 0.5, 0.5, -1);
  Extension3 e3 = optimal_extension(m, tf, ExtConstraint::none);
  CHECK(e3.c.norm() < 1e-12);
  CHECK(e3.F_full.block<2, 2>(0, 0).isApprox(tf, 1e-14));
}

TEST_CASE("closed forms match the constrained-minimization oracle") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> fd(-2.0, 2.0), mud(0.1, 10.0),
      ld(0.0, 10.0), kd(0.5, 1e4);
  double worst = 0.0;
  for (int t = 0; t < 300; ++t) {
    Material m(mud(rng), ld(rng));
    double k = kd(rng);
    Mat2 F = mat2(fd(rng), fd(rng), fd(rng), fd(rng));
    QuadForm3 q = QuadForm3::isotropic(m);
    auto rel = [](double a, double b) {
      return std::abs(a - b) / std::max(1.0, std::abs(a));
    };
    worst = std::max(worst, rel(q2_relax(m, F), q2_oracle(q, F, ExtConstraint::none)));
    worst = std::max(worst,
                     rel(q2_incomp(m, F), q2_oracle(q, F, ExtConstraint::trace_free)));
    worst = std::max(worst, rel(q2_penalized(m, k, F),
                                q2_oracle(q, F, ExtConstraint::penalty, k)));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("form ordering and structural identities") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> fd(-2.0, 2.0);
  Material m(1.3, 2.1);
  for (int t = 0; t < 50; ++t) {
    Mat2 F = mat2(fd(rng), fd(rng), fd(rng), fd(rng));
    double prev = q2_relax(m, F);
    for (double k : {1.0, 10.0, 100.0, 1e4}) {
      double qk = q2_penalized(m, k, F);
      CHECK(qk >= prev - 1e-12);
      CHECK(qk <= q2_incomp(m, F) + 1e-12);
      // penalization is a lambda shift
      Material shifted(m.mu, m.lambda + k);
      CHECK(qk == doctest::Approx(q2_relax(shifted, F)).epsilon(1e-13));
      prev = qk;
    }
    // only the symmetric part enters
    Mat2 S = 0.5 * (F + F.transpose());
    CHECK(q2_incomp(m, F) == doctest::Approx(q2_incomp(m, S)).epsilon(1e-13));
    CHECK(q2_relax(m, F) == doctest::Approx(q2_relax(m, S)).epsilon(1e-13));
  }
}

TEST_CASE("prestrain presets") {
  auto [e0, k0] = eval_prestrain(preset_prestrain("zero"), 0.3, 0.7);
  CHECK(e0.norm() == 0.0);
  CHECK(k0.norm() == 0.0);

  auto [e1, k1] = eval_prestrain(preset_prestrain("uniform-bend", 1.0), 0.5, 0.5);
  CHECK(e1.norm() == 0.0);
  CHECK(k1.isApprox(Mat3::Identity(), 1e-14));

  auto [e2, k2] = eval_prestrain(preset_prestrain("swell", 0.1), 0.2, 0.9);
  CHECK(e2.isApprox(0.1 * Mat3::Identity(), 1e-14));
  CHECK(k2.norm() == 0.0);

  auto [e3, k3] = eval_prestrain(preset_prestrain("incompatible-stretch"), 0.5, 0.5);
  CHECK(e3(0, 0) == doctest::Approx(0.25));
  CHECK(k3.norm() == 0.0);

  CHECK_THROWS_AS(preset_prestrain("no-such-preset"), std::invalid_argument);
}

TEST_CASE("growth tensor evaluation") {
  PrestrainSpec zero = preset_prestrain("zero");
  GrowthEval gz = growth_tensor(zero, 0.1, 0.5, 0.5, 0.25);
  CHECK(gz.a_h.isApprox(Mat3::Identity(), 1e-15));
  CHECK(gz.g_h.isApprox(Mat3::Identity(), 1e-15));

  GrowthEval gs = growth_tensor(preset_prestrain("swell", 1.0), 0.1, 0.5, 0.5, 0.3);
  CHECK(gs.a_h.isApprox(1.01 * Mat3::Identity(), 1e-13));

  // physical offset h * x3_scaled = 0.05
  GrowthEval gb =
      growth_tensor(preset_prestrain("uniform-bend", 1.0), 0.1, 0.5, 0.5, 0.5);
  CHECK(gb.a_h.isApprox(1.005 * Mat3::Identity(), 1e-13));

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> xd(0.0, 1.0), x3d(-0.5, 0.5);
  PrestrainSpec inc = preset_prestrain("incompatible-stretch");
  for (int t = 0; t < 20; ++t) {
    GrowthEval ge = growth_tensor(inc, 0.2, xd(rng), xd(rng), x3d(rng));
    CHECK((ge.a_h * ge.a_h_inv - Mat3::Identity()).norm() < 1e-12);
    CHECK((ge.g_h - ge.g_h.transpose()).norm() < 1e-14);
  }
}

TEST_CASE("prestrain config parsing") {
  PrestrainSpec z = load_prestrain_config(R"({"preset": "zero"})");
  CHECK(eval_prestrain(z, 0.5, 0.5).first.norm() == 0.0);

  PrestrainSpec s = load_prestrain_config(
      R"json({"eps_g": "0", "kappa_g": "diag(sin(pi*x1), 0, 0)"})json");
  auto [es, ks] = eval_prestrain(s, 0.5, 0.1);
  CHECK(es.norm() == 0.0);
  CHECK(ks(0, 0) == doctest::Approx(1.0));
  CHECK(ks(1, 1) == doctest::Approx(0.0));

  CHECK_THROWS_AS(load_prestrain_config(R"({"eps_g": "sin(x1"})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(load_prestrain_config(R"({"preset": "zero", "bogus": 1})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(load_prestrain_config("not json"), std::invalid_argument);
}
