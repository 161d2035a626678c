/* C interface to the plate-model library: quadratic-form relaxations,
 * 2D energy minimization, the coupled plate system, and the 3D
 * incompressible-construction studies. All entry points return a status
 * code; details of the last failure are kept per context. */
#ifndef VKPLATE_H
#define VKPLATE_H

#ifdef __cplusplus
extern "C" {
#endif

enum {
  VKP_OK = 0,
  VKP_EINVAL = 1,    /* bad arguments or configuration */
  VKP_ENOCONV = 2,   /* iteration failed to converge */
  VKP_ECONSTRUCT = 3 /* 3D construction invalid at the requested thickness */
};

typedef struct vkp_ctx vkp_ctx;
typedef struct vkp_prestrain vkp_prestrain;
typedef struct vkp_solve vkp_solve;
typedef struct vkp_elsol vkp_elsol;
typedef struct vkp_recipe vkp_recipe;

vkp_ctx* vkp_ctx_create(void);
void vkp_ctx_destroy(vkp_ctx* ctx);
/* Message for the most recent failing call on this context. */
const char* vkp_last_error(const vkp_ctx* ctx);

/* ---- quadratic forms (2x2 input F row-major: F11 F12 F21 F22) ---- */

/* Closed isotropic values: relaxed form, penalized form at strength k,
 * trace-free (incompressible) form, and the exact penalized gap. Any output
 * pointer may be NULL. Requires mu > 0, lambda >= 0, k > 0. */
int vkp_quadform_eval(vkp_ctx* ctx, double mu, double lambda, double k,
                      const double F[4], double* q2, double* q2k, double* q2in,
                      double* gap);

/* Same three values through the generic constrained-minimization oracle. */
int vkp_quadform_oracle(vkp_ctx* ctx, double mu, double lambda, double k,
                        const double F[4], double* q2, double* q2k, double* q2in);

/* Full 3x3 quadratic form (row-major F). */
int vkp_q3_eval(vkp_ctx* ctx, double mu, double lambda, const double F[9], double* out);

/* Minimizing third-row/column extension. constraint: 0 none, 1 trace-free,
 * 2 penalty (with strength k). Outputs may be NULL. */
int vkp_optimal_extension(vkp_ctx* ctx, double mu, double lambda, int constraint,
                          double k, const double F[4], double F_full[9], double c[3],
                          double* value);

/* ---- prestrain ---- */

int vkp_prestrain_preset(vkp_ctx* ctx, const char* name, double param,
                         vkp_prestrain** out);
/* JSON document, same schema as the CLI config. */
int vkp_prestrain_load(vkp_ctx* ctx, const char* json_text, vkp_prestrain** out);
void vkp_prestrain_destroy(vkp_prestrain* p);
int vkp_prestrain_eval(vkp_ctx* ctx, const vkp_prestrain* p, double x1, double x2,
                       double eps[9], double kappa[9]);
int vkp_prestrain_domain(vkp_ctx* ctx, const vkp_prestrain* p, double* x_min,
                         double* x_max, double* y_min, double* y_max);

/* ---- 2D energy minimization ---- */

typedef struct {
  double mu, lambda, k;
  int mode; /* 0 incompressible, 1 compressible, 2 penalized */
  int nx, ny;
  double x_min, x_max, y_min, y_max;
  int max_iterations;
  double gradient_tolerance;
  unsigned seed;
  double init_amplitude; /* random initial state amplitude; 0 starts at rest */
} vkp_minimize_opts;

void vkp_minimize_opts_default(vkp_minimize_opts* opts);

int vkp_minimize(vkp_ctx* ctx, const vkp_prestrain* p, const vkp_minimize_opts* opts,
                 vkp_solve** out);
void vkp_solve_destroy(vkp_solve* s);
int vkp_solve_stats(vkp_ctx* ctx, const vkp_solve* s, double* total, double* stretching,
                    double* bending, double* grad_norm, int* iterations,
                    int* converged);
/* which: 0 in-plane component 1, 1 in-plane component 2, 2 deflection.
 * out must hold nx*ny doubles (row-major nodes). */
int vkp_solve_field(vkp_ctx* ctx, const vkp_solve* s, int which, double* out);
/* Interior max-norm of the divergence of the incompressible membrane stress. */
int vkp_solve_stress_divergence(vkp_ctx* ctx, const vkp_solve* s, double* out);

/* ---- coupled plate system ---- */

typedef struct {
  double mu;
  int nx, ny;
  double picard_tol;
  int max_outer;
  double damping;
} vkp_el_opts;

void vkp_el_opts_default(vkp_el_opts* opts);

int vkp_el_solve(vkp_ctx* ctx, const vkp_prestrain* p, const vkp_el_opts* opts,
                 vkp_elsol** out);
void vkp_elsol_destroy(vkp_elsol* s);
int vkp_elsol_stats(vkp_ctx* ctx, const vkp_elsol* s, double* membrane_res,
                    double* bending_res, int* iterations, int* converged);
/* which: 0 deflection, 1 stress potential. */
int vkp_elsol_field(vkp_ctx* ctx, const vkp_elsol* s, int which, double* out);
int vkp_elsol_natural_bc(vkp_ctx* ctx, const vkp_elsol* s, double nu,
                         double* clamped_phi, double* moment, double* edge_traction);
/* Manufactured-solution run: analytic targets (expressions in x1, x2) are
 * imposed through extra sources; reports max-norm recovery errors. */
int vkp_el_manufactured(vkp_ctx* ctx, const vkp_prestrain* p, const vkp_el_opts* opts,
                        const char* v_expr, const char* phi_expr, double* v_err,
                        double* phi_err);

/* ---- 3D recovery studies ---- */

int vkp_recipe_standard(vkp_ctx* ctx, vkp_recipe** out);
/* v, w1, w2: expressions in x1, x2; corrections are derived automatically. */
int vkp_recipe_create(vkp_ctx* ctx, const vkp_prestrain* p, const char* v,
                      const char* w1, const char* w2, vkp_recipe** out);
void vkp_recipe_destroy(vkp_recipe* r);

typedef struct {
  double h;
  double dev_phi, dev_d3, dev_tan; /* sup deviations of the thickness map */
  double det_dev;                  /* max |det - 1| at quadrature nodes */
  double energy;                   /* rescaled 3D energy */
  double gap;                      /* |energy - limit| */
} vkp_study_row;

/* Runs the thickness sweep on an nxy x nxy tangential grid (odd) with n3
 * transverse nodes. rows must hold nh entries; slopes: {phi, d3, tangential,
 * gap} log-log fits (NaN for identically zero columns). */
int vkp_recovery_study(vkp_ctx* ctx, const vkp_recipe* r, const double* hs, int nh,
                       int nxy, int n3, vkp_study_row* rows, double* limit,
                       double slopes[4], double* max_contraction);

#ifdef __cplusplus
}
#endif

#endif /* VKPLATE_H */
