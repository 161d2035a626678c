#include "vkplate.h"

#include <cstring>
#include <exception>
#include <new>
#include <stdexcept>
#include <string>

#include "elpde.hpp"
#include "energy2d.hpp"
#include "expr.hpp"
#include "minimize.hpp"
#include "prestrain.hpp"
#include "quadform.hpp"
#include "recovery3d.hpp"
#include "tensorfield.hpp"

struct vkp_ctx {
  std::string err;
};

struct vkp_prestrain {
  vkp::PrestrainSpec spec;
};

struct vkp_solve {
  vkp::SolveReport rep;
  vkp::PrestrainSpec p;
  vkp::Material m;
};

struct vkp_elsol {
  vkp::ELSolution sol;
  vkp::PrestrainSpec p;
  vkp::Material m;
};

struct vkp_recipe {
  vkp::RecoveryRecipe r;
};

namespace {

/// Runs the body, mapping invalid_argument to VKP_EINVAL and runtime
/// failures to `fail_code`.
template <class F>
int guarded(vkp_ctx* ctx, int fail_code, F&& body) {
  if (!ctx) return VKP_EINVAL;
  try {
    body();
    ctx->err.clear();
    return VKP_OK;
  } catch (const std::invalid_argument& e) {
    ctx->err = e.what();
    return VKP_EINVAL;
  } catch (const std::bad_alloc&) {
    ctx->err = "out of memory";
    return fail_code;
  } catch (const std::exception& e) {
    ctx->err = e.what();
    return fail_code;
  }
}

vkp::Mat2 to_mat2(const double F[4]) {
  vkp::Mat2 M;
  M << F[0], F[1], F[2], F[3];
  return M;
}

vkp::Mat3 to_mat3(const double F[9]) {
  vkp::Mat3 M;
  M << F[0], F[1], F[2], F[3], F[4], F[5], F[6], F[7], F[8];
  return M;
}

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

vkp::EnergyMode to_mode(int mode) {
  switch (mode) {
    case 0: return vkp::EnergyMode::incompressible;
    case 1: return vkp::EnergyMode::compressible;
    case 2: return vkp::EnergyMode::penalized;
  }
  throw std::invalid_argument("mode must be 0, 1 or 2");
}

}  // namespace

extern "C" {

vkp_ctx* vkp_ctx_create(void) { return new (std::nothrow) vkp_ctx; }

void vkp_ctx_destroy(vkp_ctx* ctx) { delete ctx; }

const char* vkp_last_error(const vkp_ctx* ctx) {
  return ctx ? ctx->err.c_str() : "null context";
}

int vkp_quadform_eval(vkp_ctx* ctx, double mu, double lambda, double k,
                      const double F[4], double* q2, double* q2k, double* q2in,
                      double* gap) {
  return guarded(ctx, VKP_EINVAL, [&] {
    require(F != nullptr, "F is null");
    vkp::Material m(mu, lambda);
    vkp::Mat2 M = to_mat2(F);
    if (q2) *q2 = vkp::q2_relax(m, M);
    if (q2k) *q2k = vkp::q2_penalized(m, k, M);
    if (q2in) *q2in = vkp::q2_incomp(m, M);
    if (gap) *gap = vkp::sandwich_gap(m, k, M);
  });
}

int vkp_quadform_oracle(vkp_ctx* ctx, double mu, double lambda, double k,
                        const double F[4], double* q2, double* q2k, double* q2in) {
  return guarded(ctx, VKP_EINVAL, [&] {
    require(F != nullptr, "F is null");
    vkp::Material m(mu, lambda);
    vkp::QuadForm3 q = vkp::QuadForm3::isotropic(m);
    vkp::Mat2 M = to_mat2(F);
    if (q2) *q2 = vkp::q2_oracle(q, M, vkp::ExtConstraint::none);
    if (q2k) *q2k = vkp::q2_oracle(q, M, vkp::ExtConstraint::penalty, k);
    if (q2in) *q2in = vkp::q2_oracle(q, M, vkp::ExtConstraint::trace_free);
  });
}

int vkp_q3_eval(vkp_ctx* ctx, double mu, double lambda, const double F[9], double* out) {
  return guarded(ctx, VKP_EINVAL, [&] {
    require(F != nullptr && out != nullptr, "null argument");
    *out = vkp::q3_eval(vkp::Material(mu, lambda), to_mat3(F));
  });
}

int vkp_optimal_extension(vkp_ctx* ctx, double mu, double lambda, int constraint,
                          double k, const double F[4], double F_full[9], double c[3],
                          double* value) {
  return guarded(ctx, VKP_EINVAL, [&] {
    require(F != nullptr, "F is null");
    require(constraint >= 0 && constraint <= 2, "constraint must be 0, 1 or 2");
    auto cons = static_cast<vkp::ExtConstraint>(constraint);
    vkp::Extension3 e =
        vkp::optimal_extension(vkp::Material(mu, lambda), to_mat2(F), cons, k);
    if (F_full)
      for (int r = 0; r < 3; ++r)
        for (int col = 0; col < 3; ++col) F_full[3 * r + col] = e.F_full(r, col);
    if (c)
      for (int i = 0; i < 3; ++i) c[i] = e.c[i];
    if (value) *value = e.value;
  });
}

int vkp_prestrain_preset(vkp_ctx* ctx, const char* name, double param,
                         vkp_prestrain** out) {
  return guarded(ctx, VKP_EINVAL, [&] {
    require(name != nullptr && out != nullptr, "null argument");
    auto* p = new vkp_prestrain{vkp::preset_prestrain(name, param)};
    *out = p;
  });
}

int vkp_prestrain_load(vkp_ctx* ctx, const char* json_text, vkp_prestrain** out) {
  return guarded(ctx, VKP_EINVAL, [&] {
    require(json_text != nullptr && out != nullptr, "null argument");
    auto* p = new vkp_prestrain{vkp::load_prestrain_config(json_text)};
    *out = p;
  });
}

void vkp_prestrain_destroy(vkp_prestrain* p) { delete p; }

int vkp_prestrain_eval(vkp_ctx* ctx, const vkp_prestrain* p, double x1, double x2,
                       double eps[9], double kappa[9]) {
  return guarded(ctx, VKP_EINVAL, [&] {
    require(p != nullptr, "null prestrain");
    auto [e, k] = vkp::eval_prestrain(p->spec, x1, x2);
    if (eps)
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) eps[3 * r + c] = e(r, c);
    if (kappa)
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) kappa[3 * r + c] = k(r, c);
  });
}

int vkp_prestrain_domain(vkp_ctx* ctx, const vkp_prestrain* p, double* x_min,
                         double* x_max, double* y_min, double* y_max) {
  return guarded(ctx, VKP_EINVAL, [&] {
    require(p != nullptr, "null prestrain");
    if (x_min) *x_min = p->spec.domain.x_min;
    if (x_max) *x_max = p->spec.domain.x_max;
    if (y_min) *y_min = p->spec.domain.y_min;
    if (y_max) *y_max = p->spec.domain.y_max;
  });
}

void vkp_minimize_opts_default(vkp_minimize_opts* opts) {
  if (!opts) return;
  opts->mu = 1.0;
  opts->lambda = 0.0;
  opts->k = 0.0;
  opts->mode = 0;
  opts->nx = 17;
  opts->ny = 17;
  opts->x_min = 0.0;
  opts->x_max = 1.0;
  opts->y_min = 0.0;
  opts->y_max = 1.0;
  opts->max_iterations = 2000;
  opts->gradient_tolerance = 1e-8;
  opts->seed = 1;
  opts->init_amplitude = 0.0;
}

int vkp_minimize(vkp_ctx* ctx, const vkp_prestrain* p, const vkp_minimize_opts* opts,
                 vkp_solve** out) {
  return guarded(ctx, VKP_ENOCONV, [&] {
    require(p != nullptr && opts != nullptr && out != nullptr, "null argument");
    vkp::GridSpec g(opts->x_min, opts->x_max, opts->y_min, opts->y_max, opts->nx,
                    opts->ny);
    vkp::Material m(opts->mu, opts->lambda);
    vkp::PlateState init =
        opts->init_amplitude > 0.0
            ? vkp::random_state(g, opts->seed, opts->init_amplitude)
            : vkp::PlateState(g);
    vkp::MinimizeOptions mo;
    mo.max_iterations = opts->max_iterations;
    mo.gradient_tolerance = opts->gradient_tolerance;
    auto* s = new vkp_solve;
    s->p = p->spec;
    s->m = m;
    s->rep = vkp::minimize_energy(p->spec, m, to_mode(opts->mode), opts->k, init, mo);
    s->rep.seed = opts->seed;
    *out = s;
  });
}

void vkp_solve_destroy(vkp_solve* s) { delete s; }

int vkp_solve_stats(vkp_ctx* ctx, const vkp_solve* s, double* total, double* stretching,
                    double* bending, double* grad_norm, int* iterations,
                    int* converged) {
  return guarded(ctx, VKP_EINVAL, [&] {
    require(s != nullptr, "null solve");
    if (total) *total = s->rep.energy.total;
    if (stretching) *stretching = s->rep.energy.stretching;
    if (bending) *bending = s->rep.energy.bending;
    if (grad_norm) *grad_norm = s->rep.gradient_max_norm;
    if (iterations) *iterations = s->rep.iterations;
    if (converged) *converged = s->rep.converged ? 1 : 0;
  });
}

int vkp_solve_field(vkp_ctx* ctx, const vkp_solve* s, int which, double* out) {
  return guarded(ctx, VKP_EINVAL, [&] {
    require(s != nullptr && out != nullptr, "null argument");
    require(which >= 0 && which <= 2, "field selector must be 0, 1 or 2");
    const auto& st = s->rep.state;
    int n = st.grid().size();
    const double* src = which == 0   ? st.w.c1.data()
                        : which == 1 ? st.w.c2.data()
                                     : st.v.v.data();
    std::memcpy(out, src, n * sizeof(double));
  });
}

int vkp_solve_stress_divergence(vkp_ctx* ctx, const vkp_solve* s, double* out) {
  return guarded(ctx, VKP_EINVAL, [&] {
    require(s != nullptr && out != nullptr, "null argument");
    *out = vkp::membrane_stress_check(s->rep.state, s->p, s->m);
  });
}

void vkp_el_opts_default(vkp_el_opts* opts) {
  if (!opts) return;
  opts->mu = 1.0;
  opts->nx = 33;
  opts->ny = 33;
  opts->picard_tol = 1e-10;
  opts->max_outer = 200;
  opts->damping = 1.0;
}

int vkp_el_solve(vkp_ctx* ctx, const vkp_prestrain* p, const vkp_el_opts* opts,
                 vkp_elsol** out) {
  return guarded(ctx, VKP_ENOCONV, [&] {
    require(p != nullptr && opts != nullptr && out != nullptr, "null argument");
    const vkp::Rect& d = p->spec.domain;
    vkp::GridSpec g(d.x_min, d.x_max, d.y_min, d.y_max, opts->nx, opts->ny);
    vkp::Material m(opts->mu, 0.0);
    vkp::ELOptions eo;
    eo.picard_tol = opts->picard_tol;
    eo.max_outer = opts->max_outer;
    eo.damping = opts->damping;
    auto* s = new vkp_elsol;
    s->p = p->spec;
    s->m = m;
    s->sol = vkp::solve_el(p->spec, m, g, vkp::BCSpec{}, eo);
    *out = s;
  });
}

void vkp_elsol_destroy(vkp_elsol* s) { delete s; }

int vkp_elsol_stats(vkp_ctx* ctx, const vkp_elsol* s, double* membrane_res,
                    double* bending_res, int* iterations, int* converged) {
  return guarded(ctx, VKP_EINVAL, [&] {
    require(s != nullptr, "null solution");
    if (membrane_res) *membrane_res = s->sol.membrane_residual;
    if (bending_res) *bending_res = s->sol.bending_residual;
    if (iterations) *iterations = s->sol.picard_iterations;
    if (converged) *converged = s->sol.converged ? 1 : 0;
  });
}

int vkp_elsol_field(vkp_ctx* ctx, const vkp_elsol* s, int which, double* out) {
  return guarded(ctx, VKP_EINVAL, [&] {
    require(s != nullptr && out != nullptr, "null argument");
    require(which == 0 || which == 1, "field selector must be 0 or 1");
    const auto& f = which == 0 ? s->sol.v : s->sol.phi;
    std::memcpy(out, f.v.data(), f.v.size() * sizeof(double));
  });
}

int vkp_elsol_natural_bc(vkp_ctx* ctx, const vkp_elsol* s, double nu,
                         double* clamped_phi, double* moment, double* edge_traction) {
  return guarded(ctx, VKP_EINVAL, [&] {
    require(s != nullptr, "null solution");
    vkp::NaturalBCNorms n = vkp::natural_bc_residual(s->sol, s->p, s->m, nu);
    if (clamped_phi) *clamped_phi = n.clamped_phi;
    if (moment) *moment = n.moment;
    if (edge_traction) *edge_traction = n.edge_traction;
  });
}

int vkp_el_manufactured(vkp_ctx* ctx, const vkp_prestrain* p, const vkp_el_opts* opts,
                        const char* v_expr, const char* phi_expr, double* v_err,
                        double* phi_err) {
  return guarded(ctx, VKP_ENOCONV, [&] {
    require(p != nullptr && opts != nullptr && v_expr != nullptr &&
                phi_expr != nullptr,
            "null argument");
    vkp::Expr vs = vkp::Expr::parse(v_expr);
    vkp::Expr ps = vkp::Expr::parse(phi_expr);
    const vkp::Rect& d = p->spec.domain;
    vkp::GridSpec g(d.x_min, d.x_max, d.y_min, d.y_max, opts->nx, opts->ny);
    vkp::Material m(opts->mu, 0.0);
    double mu = m.mu;

    // sources that make the analytic pair an exact solution
    vkp::Expr sm = vkp::biharmonic_expr(ps) +
                   vkp::Expr::constant(1.5 * mu) * vkp::bracket_expr(vs, vs) +
                   vkp::Expr::constant(3.0 * mu) *
                       vkp::curl_t_curl_sym2_expr(p->spec.eps_g);

    const vkp::ExprMat3& kg = p->spec.kappa_g;
    vkp::Expr s11 = kg[0];
    vkp::Expr s22 = kg[4];
    vkp::Expr s12 = (kg[1] + kg[3]) / vkp::Expr::constant(2.0);
    // M = S + cof(S)/2 for the symmetrized 2x2 bending prestrain block
    vkp::Expr m11 = s11 + vkp::Expr::constant(0.5) * s22;
    vkp::Expr m22 = s22 + vkp::Expr::constant(0.5) * s11;
    vkp::Expr m12 = vkp::Expr::constant(0.5) * s12;
    vkp::Expr dtd = m11.diff(0).diff(0) + m22.diff(1).diff(1) +
                    vkp::Expr::constant(2.0) * m12.diff(0).diff(1);
    vkp::Expr sb = vkp::Expr::constant(mu / 3.0) * vkp::biharmonic_expr(vs) -
                   vkp::bracket_expr(vs, ps) + vkp::Expr::constant(mu / 3.0) * dtd;

    vkp::ScalarField sm_f = vkp::sample(g, sm);
    vkp::ScalarField sb_f = vkp::sample(g, sb);
    vkp::ELOptions eo;
    eo.picard_tol = opts->picard_tol;
    eo.max_outer = opts->max_outer;
    eo.damping = opts->damping;
    eo.membrane_source = &sm_f;
    eo.bending_source = &sb_f;
    vkp::BCSpec bc;
    bc.homogeneous = false;
    bc.v_value = vs;
    vkp::ELSolution sol = vkp::solve_el(p->spec, m, g, bc, eo);
    if (!sol.converged)
      throw std::runtime_error("manufactured run: iteration did not converge");

    vkp::ScalarField v_ex = vkp::sample(g, vs);
    vkp::ScalarField p_ex = vkp::sample(g, ps);
    double ev = 0.0, ep = 0.0;
    for (int i = 0; i < g.size(); ++i) {
      ev = std::max(ev, std::abs(sol.v.v[i] - v_ex.v[i]));
      ep = std::max(ep, std::abs(sol.phi.v[i] - p_ex.v[i]));
    }
    if (v_err) *v_err = ev;
    if (phi_err) *phi_err = ep;
  });
}

int vkp_recipe_standard(vkp_ctx* ctx, vkp_recipe** out) {
  return guarded(ctx, VKP_EINVAL, [&] {
    require(out != nullptr, "null argument");
    *out = new vkp_recipe{vkp::standard_study_recipe()};
  });
}

int vkp_recipe_create(vkp_ctx* ctx, const vkp_prestrain* p, const char* v,
                      const char* w1, const char* w2, vkp_recipe** out) {
  return guarded(ctx, VKP_EINVAL, [&] {
    require(p != nullptr && v != nullptr && w1 != nullptr && w2 != nullptr &&
                out != nullptr,
            "null argument");
    *out = new vkp_recipe{vkp::make_recipe(p->spec, vkp::Expr::parse(v),
                                           vkp::Expr::parse(w1), vkp::Expr::parse(w2))};
  });
}

void vkp_recipe_destroy(vkp_recipe* r) { delete r; }

int vkp_recovery_study(vkp_ctx* ctx, const vkp_recipe* r, const double* hs, int nh,
                       int nxy, int n3, vkp_study_row* rows, double* limit,
                       double slopes[4], double* max_contraction) {
  return guarded(ctx, VKP_ECONSTRUCT, [&] {
    require(r != nullptr && hs != nullptr && nh > 0 && rows != nullptr,
            "null argument");
    for (int i = 0; i < nh; ++i)
      if (!(hs[i] > 0.0) || hs[i] > 0.25)
        throw std::runtime_error("recovery study: thickness " +
                                 std::to_string(hs[i]) +
                                 " outside the valid range (0, 1/4]");
    const vkp::Rect& d = r->r.p.domain;
    vkp::GridSpec g(d.x_min, d.x_max, d.y_min, d.y_max, nxy, nxy);
    vkp::Slab3D slab(g, n3, hs[0]);
    vkp::StudyResult res =
        vkp::convergence_study(r->r, std::vector<double>(hs, hs + nh), slab);
    for (int i = 0; i < nh; ++i) {
      rows[i].h = res.rows[i].h;
      rows[i].dev_phi = res.rows[i].dev_phi;
      rows[i].dev_d3 = res.rows[i].dev_d3;
      rows[i].dev_tan = res.rows[i].dev_tan;
      rows[i].det_dev = res.rows[i].det_dev;
      rows[i].energy = res.rows[i].energy;
      rows[i].gap = res.rows[i].gap;
    }
    if (limit) *limit = res.limit;
    if (slopes) {
      slopes[0] = res.slope_phi;
      slopes[1] = res.slope_d3;
      slopes[2] = res.slope_tan;
      slopes[3] = res.slope_gap;
    }
    if (max_contraction) *max_contraction = res.max_contraction;
  });
}

}  // extern "C"
