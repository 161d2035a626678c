#pragma once

#include <utility>
#include <vector>

#include "expr.hpp"
#include "prestrain.hpp"
#include "quadform.hpp"
#include "tensorfield.hpp"

namespace vkp {

/// Ingredients of the 3D candidate deformation: midplane displacements v, w
/// (analytic), correction vector fields c0, c1, and the prestrain. The stored
/// density is fixed to W(F) = 1/4 |F^T F - Id3|^2 (mu = 1, lambda = 0 at
/// identity).
struct RecoveryRecipe {
  Expr v;
  Expr w1, w2;
  ExprVec3 c0, c1;
  PrestrainSpec p;
};

/// Builds a recipe with the trace-restoring default corrections
/// c0 = (0, 0, -|grad v|^2 - div w + Tr(eps_g)_{2x2}) and
/// c1 = (0, 0, lap v + Tr(kappa_g)_{2x2}), then validates the trace
/// conditions on a sample grid (<= 1e-10).
RecoveryRecipe make_recipe(const PrestrainSpec& p, const Expr& v, const Expr& w1,
                           const Expr& w2);

/// Checks the two trace-zero correction conditions at sampled points.
/// Throws std::invalid_argument when violated beyond 1e-10.
void validate_recipe(const RecoveryRecipe& r);

/// Recipe used by the convergence studies: unit isotropic bending prestrain
/// plus a small polynomial displacement so that the tangential phi bound is
/// exercised with a nonzero field.
RecoveryRecipe standard_study_recipe();

/// Slab discretization: tangential grid, odd transverse node count over the
/// scaled thickness [-1/2, 1/2], physical thickness h in (0, 1/4].
struct Slab3D {
  GridSpec grid;
  int n3 = 33;
  double h = 1.0 / 16.0;

  Slab3D() = default;
  Slab3D(const GridSpec& g, int n3_, double h_);
  double dx3() const { return 1.0 / (n3 - 1); }
  double x3(int j) const { return -0.5 + j * dx3(); }
  int mid() const { return (n3 - 1) / 2; }
  int idx(int node, int j) const { return node * n3 + j; }
};

/// Fixed point of the thickness reparametrization integral equation,
/// stored nodewise on the slab, with its derivatives and sup deviations.
struct PhiSolution {
  GridSpec grid;
  int n3 = 0;
  double h = 0.0;
  std::vector<double> phi;  // idx = node * n3 + j
  std::vector<double> d3;   // exact transverse derivative (the ODE rhs)
  std::vector<double> dx, dy;  // tangential central differences
  int iterations = 0;
  double contraction = 0.0;
  double dev_phi = 0.0;  // ||phi - x3||_inf
  double dev_d3 = 0.0;   // ||d3 phi - 1||_inf
  double dev_tan = 0.0;  // ||grad_x' phi||_inf

  int idx(int node, int j) const { return node * n3 + j; }
};

/// l(F): the unique vector with sym(F - (F_{2x2})^*) = sym(l(F) x e3);
/// equals (F13 + F31, F23 + F32, F33). The defining identity is re-checked
/// to 1e-14 on every call.
Vec3 l_vector(const Mat3& F);

/// Skew generator built from the deflection gradient.
Mat3 bend_skew(double vx, double vy);

/// Closed-form matrix exponential of a skew matrix (Rodrigues).
Mat3 skew_exp(const Mat3& A);

/// The stored density W(F) = 1/4 |F^T F - Id3|^2.
double density_w(const Mat3& F);

/// Candidate deformation and its exact analytic gradient at physical
/// offset h * x3_scaled.
std::pair<Vec3, Mat3> build_candidate(const RecoveryRecipe& r, double h, double x1,
                                      double x2, double x3_scaled);

/// The reparametrization ODE right-hand side
/// f^{-1} = det(R^T grad u_c(x', hy) a(x', hy)^{-1}) det(a(x', hy) a(x', h x3)^{-1}).
/// `include_rotation = false` drops the (determinant-neutral) rotation factor;
/// used as a self check.
double f_eval(const RecoveryRecipe& r, double h, double x1, double x2, double y,
              double x3_scaled, bool include_rotation = true);

/// Picard iteration for the fixed point of (Tu)(x3) = int_0^{x3} f(u(t), t) dt,
/// columnwise with composite Simpson accumulation from the midplane.
/// Throws std::runtime_error on contraction failure (factor >= 1) or when f
/// leaves (1/2, 2).
PhiSolution solve_phi(const RecoveryRecipe& r, const Slab3D& slab, double tol = 1e-10);

/// Full deformation u^h(x', x3) = u_c(x', h phi(x', x3)) and its gradient at
/// an arbitrary slab point; phi interpolated cubically across the thickness
/// and bilinearly in x'.
std::pair<Vec3, Mat3> assemble_uh(const RecoveryRecipe& r, const Slab3D& slab,
                                  const PhiSolution& phi, double x1, double x2,
                                  double x3_scaled);

struct Energy3D {
  double value = 0.0;    // h^-4 times the rescaled 3D energy
  double det_dev = 0.0;  // max |det(grad u^h a^-1) - 1| over quadrature nodes
};

/// Tensor-product composite Simpson quadrature of the rescaled 3D energy
/// (requires odd tangential node counts). Hard error when the determinant
/// deviates beyond 1e-4 anywhere.
Energy3D energy3d(const RecoveryRecipe& r, const Slab3D& slab, const PhiSolution& phi);

/// The analytic limiting value: 1/2 int Q3(strain0*) + 1/24 int Q3(strain1*)
/// with the recipe corrections completing the two limiting strains, Q3 of the
/// stored density, trapezoid quadrature on the given grid.
double limit_value(const RecoveryRecipe& r, const GridSpec& g);

struct StudyRow {
  double h = 0.0;
  double dev_phi = 0.0, dev_d3 = 0.0, dev_tan = 0.0;
  double det_dev = 0.0;
  double energy = 0.0;
  double gap = 0.0;  // |energy - limit|
};

struct StudyResult {
  std::vector<StudyRow> rows;
  double limit = 0.0;
  // least-squares log-log slopes vs h; NaN when a column is identically zero
  double slope_phi = 0.0, slope_d3 = 0.0, slope_tan = 0.0, slope_gap = 0.0;
  double max_contraction = 0.0;
};

/// Runs solve_phi + energy3d over a decreasing h list on the template slab
/// and fits the deviation and gap rates.
StudyResult convergence_study(const RecoveryRecipe& r, const std::vector<double>& hs,
                              const Slab3D& slab_template);

}  // namespace vkp
