#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "recovery3d.hpp"

using namespace vkp;

namespace {

RecoveryRecipe zero_recipe() {
  RecoveryRecipe r;
  r.p = preset_prestrain("zero");
  return r;
}

GridSpec small_grid() { return GridSpec::unit_square(9, 9); }

}  // namespace

TEST_CASE("extension vector of a 3x3 matrix") {
  Mat3 e33 = Mat3::Zero();
  e33(2, 2) = 1.0;
  CHECK(l_vector(e33).isApprox(Vec3(0, 0, 1), 1e-14));
  CHECK(l_vector(Mat3::Identity()).isApprox(Vec3(0, 0, 1), 1e-14));

  Mat3 planar = Mat3::Zero();
  planar(0, 0) = 2.0;
  planar(0, 1) = -1.0;
  planar(1, 0) = 3.0;
  CHECK(l_vector(planar).norm() == 0.0);

  Mat3 f;
  f << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  CHECK(l_vector(f).isApprox(Vec3(10, 14, 9), 1e-14));
}

TEST_CASE("rotation generator and its exponential") {
  Mat3 a = bend_skew(0.3, -0.7);
  CHECK((a + a.transpose()).norm() < 1e-15);

  Mat3 r = skew_exp(0.05 * a);
  CHECK(std::abs(r.determinant() - 1.0) < 1e-14);
  CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-14);

  // the generator squares to the stated rank-two projector
  Mat3 a2 = a * a;
  Mat3 expect = Mat3::Zero();
  double vx = 0.3, vy = -0.7;
  expect(0, 0) = -vx * vx;
  expect(0, 1) = -vx * vy;
  expect(1, 0) = -vx * vy;
  expect(1, 1) = -vy * vy;
  expect(2, 2) = -(vx * vx + vy * vy);
  CHECK((a2 - expect).norm() < 1e-14);
}

TEST_CASE("stored density basics") {
  CHECK(density_w(Mat3::Identity()) == 0.0);
  Mat3 f = Mat3::Identity() + 0.1 * Mat3::Random();
  Mat3 rot = skew_exp(bend_skew(0.4, 0.2));
  CHECK(density_w(rot * f) == doctest::Approx(density_w(f)).epsilon(1e-12));
  CHECK(density_w(f) >= 0.0);
}

TEST_CASE("density curvature at identity matches the quadratic form") {
  std::mt19937 rng(17);
  std::normal_distribution<double> nd(0.0, 1.0);
  Material m(1.0, 0.0);
  const double t = 1e-4;
  for (int trial = 0; trial < 20; ++trial) {
    Mat3 d;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) d(i, j) = nd(rng);
    d = (0.5 * (d + d.transpose())).eval();
    d /= d.norm();
    double second = (density_w(Mat3::Identity() + t * d) +
                     density_w(Mat3::Identity() - t * d)) /
                    (t * t);
    CHECK(second == doctest::Approx(q3_eval(m, d)).epsilon(1e-6));
  }
}

TEST_CASE("candidate map examples") {
  RecoveryRecipe z = zero_recipe();
  auto [pz, gz] = build_candidate(z, 0.1, 0.3, 0.8, 0.25);
  CHECK(pz.isApprox(Vec3(0.3, 0.8, 0.1 * 0.25), 1e-14));
  CHECK(gz.isApprox(Mat3::Identity(), 1e-14));

  // tilted midplane with all corrections forced to zero
  RecoveryRecipe tilt;
  tilt.v = Expr::parse("x1");
  tilt.p = preset_prestrain("zero");
  auto [pt, gt] = build_candidate(tilt, 0.1, 0.4, 0.6, 0.5);
  CHECK(pt[0] == doctest::Approx(0.4 - 0.005).epsilon(1e-14));
  CHECK(pt[1] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(pt[2] == doctest::Approx(0.05 + 0.1 * 0.4).epsilon(1e-14));
  CHECK(gt(2, 0) == doctest::Approx(0.1).epsilon(1e-13));
}

TEST_CASE("candidate gradient matches finite differences") {
  RecoveryRecipe r = standard_study_recipe();
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> xd(0.1, 0.9), x3d(-0.45, 0.45);
  const double h = 1.0 / 16.0, step = 1e-6;
  double worst = 0.0;
  for (int t = 0; t < 30; ++t) {
    double x1 = xd(rng), x2 = xd(rng), x3 = x3d(rng);
    Mat3 g = build_candidate(r, h, x1, x2, x3).second;
    Mat3 fd;
    auto col = [&](double a, double b, double c3, int j) {
      Vec3 plus, minus;
      if (j == 2) {
        plus = build_candidate(r, h, a, b, c3 + step / h).first;
        minus = build_candidate(r, h, a, b, c3 - step / h).first;
      } else if (j == 0) {
        plus = build_candidate(r, h, a + step, b, c3).first;
        minus = build_candidate(r, h, a - step, b, c3).first;
      } else {
        plus = build_candidate(r, h, a, b + step, c3).first;
        minus = build_candidate(r, h, a, b - step, c3).first;
      }
      fd.col(j) = (plus - minus) / (2.0 * step);
    };
    for (int j = 0; j < 3; ++j) col(x1, x2, x3, j);
    worst = std::max(worst, (g - fd).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("volume ratio function") {
  RecoveryRecipe z = zero_recipe();
  CHECK(f_eval(z, 0.1, 0.5, 0.5, 0.2, 0.1) == doctest::Approx(1.0).epsilon(1e-15));

  // the rotation factor has unit determinant, dropping it changes nothing
  RecoveryRecipe r = make_recipe(preset_prestrain("uniform-bend", 1.0), Expr(),
                                 Expr(), Expr());
  double with_rot = f_eval(r, 0.05, 0.5, 0.5, 0.3, 0.1, true);
  double without = f_eval(r, 0.05, 0.5, 0.5, 0.3, 0.1, false);
  CHECK(std::abs(with_rot - without) < 1e-13);

  // leading-order expansion: f = 1 - h^2 (y - x3) Tr(kappa) + O(h^3)
  double f = f_eval(r, 0.05, 0.5, 0.5, 0.3, 0.1);
  CHECK(f == doctest::Approx(1.0 - 0.0025 * 0.2 * 3.0).epsilon(2e-4));

  // quadratic approach to 1 as the thickness shrinks
  double c_prev = 0.0;
  for (double h : {0.1, 0.05, 0.025}) {
    double c = (f_eval(r, h, 0.5, 0.5, 0.3, 0.1) - 1.0) / (h * h);
    if (c_prev != 0.0) CHECK(c == doctest::Approx(c_prev).epsilon(0.2));
    c_prev = c;
  }
}

TEST_CASE("thickness reparametrization fixed point") {
  Slab3D slab(small_grid(), 17, 1.0 / 16.0);

  PhiSolution pz = solve_phi(zero_recipe(), slab);
  CHECK(pz.iterations <= 2);  // exact after one update plus the confirming pass
  CHECK(pz.dev_phi == 0.0);
  CHECK(pz.dev_d3 == 0.0);
  for (int n = 0; n < slab.grid.size(); ++n)
    CHECK(pz.phi[pz.idx(n, slab.mid())] == 0.0);

  // trace-free bending prestrain: the quadratic term of f vanishes
  RecoveryRecipe saddle =
      make_recipe(preset_prestrain("saddle-bend", 1.0), Expr(), Expr(), Expr());
  double prev = 0.0;
  for (double h : {0.125, 0.0625, 0.03125}) {
    Slab3D s(small_grid(), 17, h);
    PhiSolution p = solve_phi(saddle, s);
    CHECK(p.contraction <= 0.501);
    if (prev > 0.0) CHECK(prev / p.dev_phi > 6.0);  // faster than h^2
    prev = p.dev_phi;
  }
}

TEST_CASE("slab and recipe validation") {
  CHECK_THROWS_AS(Slab3D(small_grid(), 16, 0.1), std::invalid_argument);  // even
  CHECK_THROWS_AS(Slab3D(small_grid(), 17, 0.3), std::invalid_argument);  // thick
  CHECK_THROWS_AS(Slab3D(small_grid(), 3, 0.1), std::invalid_argument);   // coarse

  RecoveryRecipe good = standard_study_recipe();
  validate_recipe(good);

  RecoveryRecipe bad = good;
  bad.c0[2] = bad.c0[2] + Expr::constant(0.5);
  CHECK_THROWS_AS(validate_recipe(bad), std::invalid_argument);
}

TEST_CASE("assembled deformation") {
  Slab3D slab(small_grid(), 17, 1.0 / 16.0);
  PhiSolution pz = solve_phi(zero_recipe(), slab);
  auto [p, g] = assemble_uh(zero_recipe(), slab, pz, 0.3, 0.7, 0.2);
  CHECK(p.isApprox(Vec3(0.3, 0.7, slab.h * 0.2), 1e-13));
  CHECK(g.isApprox(Mat3::Identity(), 1e-12));

  RecoveryRecipe r = standard_study_recipe();
  PhiSolution ps = solve_phi(r, slab);
  // midplane invariance: phi vanishes there, so the map equals the candidate
  auto mid_full = assemble_uh(r, slab, ps, 0.4, 0.5, 0.0).first;
  auto mid_cand = build_candidate(r, slab.h, 0.4, 0.5, 0.0).first;
  CHECK((mid_full - mid_cand).norm() < 1e-12);

  // determinant restored against the growth tensor
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> xd(0.05, 0.95), x3d(-0.5, 0.5);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    double x1 = xd(rng), x2 = xd(rng), x3 = x3d(rng);
    Mat3 gu = assemble_uh(r, slab, ps, x1, x2, x3).second;
    GrowthEval ge = growth_tensor(r.p, slab.h, x1, x2, x3);
    worst = std::max(worst, std::abs((gu * ge.a_h_inv).determinant() - 1.0));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("slab energy and its limit") {
  Slab3D slab(small_grid(), 17, 1.0 / 16.0);
  PhiSolution pz = solve_phi(zero_recipe(), slab);
  Energy3D ez = energy3d(zero_recipe(), slab, pz);
  CHECK(ez.value == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(limit_value(zero_recipe(), small_grid()) == doctest::Approx(0.0));

  RecoveryRecipe r = standard_study_recipe();
  PhiSolution ps = solve_phi(r, slab);
  double e1 = energy3d(r, slab, ps).value;

  // transverse quadrature refinement barely moves the value
  Slab3D fine(small_grid(), 33, slab.h);
  double e2 = energy3d(r, fine, solve_phi(r, fine)).value;
  CHECK(std::abs(e1 - e2) < 1e-6 * std::max(1.0, std::abs(e1)));
}

TEST_CASE("thickness sweep on the zero recipe") {
  Slab3D tmpl(small_grid(), 17, 0.125);
  StudyResult s = convergence_study(zero_recipe(), {0.125, 0.0625}, tmpl);
  REQUIRE(s.rows.size() == 2);
  for (const auto& row : s.rows) {
    CHECK(row.dev_phi == 0.0);
    CHECK(row.dev_d3 == 0.0);
    CHECK(row.energy == doctest::Approx(0.0).epsilon(1e-14));
  }
  CHECK(s.limit == doctest::Approx(0.0));
  CHECK(std::isnan(s.slope_phi));
}

TEST_CASE("thickness ordering is enforced") {
  Slab3D tmpl(small_grid(), 17, 0.125);
  CHECK_THROWS_AS(convergence_study(zero_recipe(), {0.0625, 0.125}, tmpl),
                  std::invalid_argument);
}
