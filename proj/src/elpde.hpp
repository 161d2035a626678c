#pragma once

#include <memory>

#include "energy2d.hpp"
#include "expr.hpp"
#include "prestrain.hpp"
#include "tensorfield.hpp"

namespace vkp {

/// Essential boundary data for the deflection v; the Airy potential is
/// always clamped homogeneously (Phi = dPhi/dn = 0).
struct BCSpec {
  bool homogeneous = true;
  Expr v_value;  // evaluated on the boundary when inhomogeneous
};

struct ELSolution {
  ScalarField v;
  ScalarField phi;
  double membrane_residual = 0.0;  // interior max-norms
  double bending_residual = 0.0;
  int picard_iterations = 0;
  bool converged = false;
};

struct ELOptions {
  double picard_tol = 1e-10;
  int max_outer = 200;
  double damping = 1.0;
  const ScalarField* membrane_source = nullptr;  // appended manufactured sources
  const ScalarField* bending_source = nullptr;
};

/// Direct sparse solver for the clamped 13-point biharmonic system with
/// ghost-node elimination of the normal-derivative condition. The
/// factorization is computed once per grid and reused across solves.
class BiharmonicSolver {
 public:
  explicit BiharmonicSolver(const GridSpec& g);
  ~BiharmonicSolver();
  BiharmonicSolver(BiharmonicSolver&&) noexcept;

  /// Solves Delta^2 u = rhs with essential data (value, outward normal
  /// derivative) taken from `bc` (zero when homogeneous).
  ScalarField solve(const ScalarField& rhs, const BCSpec& bc) const;

  const GridSpec& grid() const;
  /// Relative residual of the last linear solve.
  double last_residual() const;
  /// Dense copy of the interior system matrix (small grids; SPD check).
  Eigen::MatrixXd dense_matrix() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Composed 13-point Delta^2 of a full field, valid at depth >= 2 nodes;
/// other nodes are left zero.
ScalarField biharmonic_apply_interior(const ScalarField& u);

/// -(3 mu / 2) [v, v] - 3 mu curl^T curl (sym eps_g)_{2x2}
ScalarField membrane_rhs(const PrestrainSpec& p, const Material& m,
                         const ScalarField& v);

/// [v, phi] - (mu/3) div^T div ((sym kappa_g)_{2x2} + 1/2 cof(sym kappa_g)_{2x2})
ScalarField bending_rhs(const PrestrainSpec& p, const Material& m, const ScalarField& v,
                        const ScalarField& phi);

struct ELResidual {
  ScalarField membrane;  // Delta^2 phi - membrane_rhs - source
  ScalarField bending;   // (mu/3) Delta^2 v - bending_rhs - source
  double membrane_norm = 0.0;
  double bending_norm = 0.0;
};

ELResidual el_residual(const ELSolution& sol, const PrestrainSpec& p, const Material& m,
                       const ScalarField* membrane_source = nullptr,
                       const ScalarField* bending_source = nullptr);

/// Picard iteration with the bracket frozen on the right-hand side.
ELSolution solve_el(const PrestrainSpec& p, const Material& m, const GridSpec& g,
                    const BCSpec& bc, const ELOptions& opts = {});

/// Max-norm of the row-wise divergence of the incompressible membrane
/// stress N = 2 mu (S + Tr(S) Id2), on interior nodes.
double membrane_stress_check(const PlateState& s, const PrestrainSpec& p,
                             const Material& m);

struct NaturalBCNorms {
  double clamped_phi = 0.0;    // max(|phi|, |dphi/dn|) on the boundary
  double moment = 0.0;         // <Psi:n(x)n> + 1/2 <Psi:tau(x)tau>
  double edge_traction = 0.0;  // (1-nu) d_tau<Psi:n(x)tau> + div(Psi + cof Psi/2).n
};

NaturalBCNorms natural_bc_residual(const ELSolution& sol, const PrestrainSpec& p,
                                   const Material& m, double nu = 0.5);

// Analytic helpers for manufactured solutions.
Expr laplacian_expr(const Expr& f);
Expr biharmonic_expr(const Expr& f);
Expr bracket_expr(const Expr& v, const Expr& u);
/// curl^T curl of the symmetrized 2x2 block of an analytic 3x3 field.
Expr curl_t_curl_sym2_expr(const ExprMat3& m);

}  // namespace vkp
