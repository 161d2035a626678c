// Batch front-end: every study is a subcommand with reproducible inputs and
// machine-readable outputs (CSV for tables and fields, JSON for reports).
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vkplate.h"

namespace {

using nlohmann::json;

struct CtxGuard {
  vkp_ctx* ctx = vkp_ctx_create();
  ~CtxGuard() { vkp_ctx_destroy(ctx); }
};

[[noreturn]] void fail(vkp_ctx* ctx, int rc) {
  std::cerr << "error: " << vkp_last_error(ctx) << "\n";
  std::exit(rc == VKP_OK ? 1 : rc);
}

void check(vkp_ctx* ctx, int rc) {
  if (rc != VKP_OK) fail(ctx, rc);
}

/// Write-then-rename so readers never observe partial artifacts. "-" writes
/// to stdout.
void atomic_write(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    return;
  }
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) {
      std::cerr << "error: cannot open " << tmp << " for writing\n";
      std::exit(1);
    }
    f << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::cerr << "error: cannot rename " << tmp << " to " << path << "\n";
    std::exit(1);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    std::cerr << "error: cannot read " << path << "\n";
    std::exit(1);
  }
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

int thread_cap() {
  if (const char* e = std::getenv("VKPLATE_THREADS")) {
    int n = std::atoi(e);
    if (n >= 1) return n;
  }
  return 1;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw CLI::ValidationError("empty numeric list");
  return out;
}

/// Shared prestrain selection: either a preset name (+ parameter) or a JSON
/// config file.
struct PrestrainArgs {
  std::string preset = "zero";
  double param = 1.0;
  std::string config_path;

  void attach(CLI::App* cmd) {
    cmd->add_option("--preset", preset,
                    "prestrain preset: zero, swell, uniform-bend, saddle-bend, "
                    "cylinder-bend, incompatible-stretch");
    cmd->add_option("--param", param, "preset parameter");
    cmd->add_option("--config", config_path, "prestrain JSON config file");
  }

  vkp_prestrain* make(vkp_ctx* ctx) const {
    vkp_prestrain* p = nullptr;
    int rc = config_path.empty()
                 ? vkp_prestrain_preset(ctx, preset.c_str(), param, &p)
                 : vkp_prestrain_load(ctx, read_file(config_path).c_str(), &p);
    check(ctx, rc);
    return p;
  }

  json describe() const {
    json j;
    if (config_path.empty()) {
      j["preset"] = preset;
      j["param"] = param;
    } else {
      j["config"] = config_path;
    }
    return j;
  }
};

std::string csv_config_header(const json& cfg) {
  return "# config: " + cfg.dump() + "\n";
}

// ---------------------------------------------------------------- quadform

int cmd_quadform(vkp_ctx* ctx, double mu, double lambda,
                 const std::vector<double>& ks,
                 const std::vector<std::vector<double>>& mats, int random_n,
                 unsigned seed, const std::string& out) {
  std::vector<std::array<double, 4>> rows;
  for (const auto& m : mats) {
    if (m.size() != 4) {
      std::cerr << "error: --matrix needs 4 comma-separated entries\n";
      return 1;
    }
    rows.push_back({m[0], m[1], m[2], m[3]});
  }
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int i = 0; i < random_n; ++i)
    rows.push_back({dist(rng), dist(rng), dist(rng), dist(rng)});
  if (rows.empty()) {
    std::cerr << "error: no input matrices (use --matrix or --random)\n";
    return 1;
  }

  json cfg = {{"subcommand", "quadform"}, {"mu", mu},     {"lambda", lambda},
              {"k", ks},                  {"seed", seed}, {"random", random_n}};
  std::ostringstream os;
  os << csv_config_header(cfg);
  os << "F11,F12,F21,F22,Q2";
  for (double k : ks) os << ",Q2k_" << k;
  os << ",Q2In,gap_k_" << ks.front() << ",oracle_max_rel_err\n";
  os.precision(15);

  for (const auto& F : rows) {
    double q2, q2in;
    check(ctx, vkp_quadform_eval(ctx, mu, lambda, ks.front(), F.data(), &q2, nullptr,
                                 &q2in, nullptr));
    std::vector<double> q2ks(ks.size());
    double gap0 = 0.0;
    for (size_t i = 0; i < ks.size(); ++i) {
      double g;
      check(ctx, vkp_quadform_eval(ctx, mu, lambda, ks[i], F.data(), nullptr, &q2ks[i],
                                   nullptr, &g));
      if (i == 0) gap0 = g;
    }
    double o2, o2k, o2in;
    check(ctx, vkp_quadform_oracle(ctx, mu, lambda, ks.front(), F.data(), &o2, &o2k,
                                   &o2in));
    auto rel = [](double a, double b) {
      return std::abs(a - b) / std::max(1.0, std::abs(a));
    };
    double err = std::max({rel(q2, o2), rel(q2ks.front(), o2k), rel(q2in, o2in)});

    os << F[0] << "," << F[1] << "," << F[2] << "," << F[3] << "," << q2;
    for (double q : q2ks) os << "," << q;
    os << "," << q2in << "," << gap0 << "," << err << "\n";
  }
  atomic_write(out, os.str());
  return 0;
}

// ---------------------------------------------------------------- minimize

json minimize_one(vkp_ctx* ctx, const vkp_prestrain* p, vkp_minimize_opts opts,
                  const std::string& fields_out, const json& base_cfg) {
  check(ctx, vkp_prestrain_domain(ctx, p, &opts.x_min, &opts.x_max, &opts.y_min,
                                  &opts.y_max));
  vkp_solve* s = nullptr;
  check(ctx, vkp_minimize(ctx, p, &opts, &s));
  std::unique_ptr<vkp_solve, void (*)(vkp_solve*)> guard(s, vkp_solve_destroy);

  double total, stretch, bend, gn;
  int iters, conv;
  check(ctx, vkp_solve_stats(ctx, s, &total, &stretch, &bend, &gn, &iters, &conv));
  double div;
  check(ctx, vkp_solve_stress_divergence(ctx, s, &div));

  json rep = base_cfg;
  rep["lambda"] = opts.lambda;
  rep["energy"] = {{"total", total}, {"stretching", stretch}, {"bending", bend}};
  rep["gradient_max_norm"] = gn;
  rep["iterations"] = iters;
  rep["converged"] = conv != 0;
  rep["stress_divergence"] = div;

  if (!fields_out.empty()) {
    int n = opts.nx * opts.ny;
    std::vector<double> w1(n), w2(n), v(n);
    check(ctx, vkp_solve_field(ctx, s, 0, w1.data()));
    check(ctx, vkp_solve_field(ctx, s, 1, w2.data()));
    check(ctx, vkp_solve_field(ctx, s, 2, v.data()));
    std::ostringstream os;
    os << csv_config_header(rep);
    os << "i,j,x1,x2,w1,w2,v\n";
    os.precision(15);
    double hx = (opts.x_max - opts.x_min) / (opts.nx - 1);
    double hy = (opts.y_max - opts.y_min) / (opts.ny - 1);
    for (int j = 0; j < opts.ny; ++j)
      for (int i = 0; i < opts.nx; ++i) {
        int id = j * opts.nx + i;
        os << i << "," << j << "," << opts.x_min + i * hx << ","
           << opts.y_min + j * hy << "," << w1[id] << "," << w2[id] << "," << v[id]
           << "\n";
      }
    atomic_write(fields_out, os.str());
  }
  return rep;
}

// ---------------------------------------------------------------- main

int run(int argc, char** argv) {
  CtxGuard cg;
  vkp_ctx* ctx = cg.ctx;

  CLI::App app{"prestrained-plate model studies"};
  app.require_subcommand(1);

  // quadform
  auto* qf = app.add_subcommand("quadform", "quadratic-form table with oracle check");
  double q_mu = 1.0, q_lambda = 0.0;
  std::string q_ks = "1";
  std::vector<std::string> q_mats;
  int q_random = 0;
  unsigned q_seed = 1;
  std::string q_out = "-";
  qf->add_option("--mu", q_mu);
  qf->add_option("--lambda", q_lambda);
  qf->add_option("--k", q_ks, "comma-separated penalty strengths");
  qf->add_option("--matrix", q_mats, "2x2 matrix entries F11,F12,F21,F22")
      ->take_all();
  qf->add_option("--random", q_random, "number of random matrices");
  qf->add_option("--seed", q_seed);
  qf->add_option("--out", q_out, "output CSV path ('-' for stdout)");

  // minimize
  auto* mi = app.add_subcommand("minimize", "2D energy minimization");
  PrestrainArgs mi_p;
  mi_p.attach(mi);
  double m_mu = 1.0, m_k = 0.0, m_tol = 1e-8, m_amp = 0.0;
  std::string m_lambdas = "0", m_mode = "incompressible";
  int m_nx = 17, m_ny = 17, m_maxit = 2000;
  unsigned m_seed = 1;
  std::string m_report = "-", m_fields;
  mi->add_option("--mu", m_mu);
  mi->add_option("--lambda", m_lambdas, "comma-separated list sweeps runs");
  mi->add_option("--k", m_k, "penalty strength (penalized mode)");
  mi->add_option("--mode", m_mode)
      ->check(CLI::IsMember({"incompressible", "compressible", "penalized"}));
  mi->add_option("--nx", m_nx);
  mi->add_option("--ny", m_ny);
  mi->add_option("--max-iter", m_maxit);
  mi->add_option("--tol", m_tol, "gradient max-norm tolerance");
  mi->add_option("--seed", m_seed);
  mi->add_option("--amplitude", m_amp, "random initial state amplitude");
  mi->add_option("--report", m_report, "JSON report path ('-' for stdout)");
  mi->add_option("--fields", m_fields, "CSV field dump path");

  // elsolve
  auto* el = app.add_subcommand("elsolve", "coupled plate system solve");
  PrestrainArgs el_p;
  el_p.attach(el);
  double e_mu = 1.0, e_tol = 1e-10, e_damp = 1.0, e_nu = 0.5;
  int e_nx = 33, e_ny = 33, e_maxout = 200;
  std::string e_report = "-", e_fields;
  el->add_option("--mu", e_mu);
  el->add_option("--nx", e_nx);
  el->add_option("--ny", e_ny);
  el->add_option("--tol", e_tol, "fixed-point tolerance");
  el->add_option("--max-outer", e_maxout);
  el->add_option("--damping", e_damp);
  el->add_option("--nu", e_nu, "Poisson ratio for the edge-condition report");
  el->add_option("--report", e_report, "JSON report path");
  el->add_option("--fields", e_fields, "CSV field dump path");

  // residual (manufactured refinement)
  auto* rs = app.add_subcommand("residual",
                                "manufactured-solution refinement study");
  PrestrainArgs rs_p;
  rs_p.attach(rs);
  double r_mu = 1.0;
  std::string r_grids = "17,33,65";
  std::string r_v = "0.5*(x1*(1-x1)*x2*(1-x2))^2";
  std::string r_phi = "0.3*(x1*(1-x1))^2*(x2*(1-x2))^2";
  std::string r_report = "-";
  rs->add_option("--mu", r_mu);
  rs->add_option("--grids", r_grids, "comma-separated node counts");
  rs->add_option("--v-expr", r_v, "target deflection (expression in x1, x2)");
  rs->add_option("--phi-expr", r_phi, "target stress potential");
  rs->add_option("--report", r_report, "JSON report path");

  // recovery
  auto* rc = app.add_subcommand("recovery", "3D construction convergence table");
  PrestrainArgs rc_p;
  rc_p.attach(rc);
  bool rc_standard = false;
  std::string rc_hs = "0.125,0.0625,0.03125,0.015625";
  std::string rc_v = "0", rc_w1 = "0", rc_w2 = "0";
  int rc_nxy = 17, rc_n3 = 33;
  std::string rc_table = "-", rc_report;
  rc->add_flag("--standard", rc_standard, "use the built-in study recipe");
  rc->add_option("--h-list", rc_hs, "comma-separated decreasing thicknesses");
  rc->add_option("--v", rc_v, "deflection expression");
  rc->add_option("--w1", rc_w1, "in-plane displacement component 1");
  rc->add_option("--w2", rc_w2, "in-plane displacement component 2");
  rc->add_option("--nxy", rc_nxy, "tangential node count (odd)");
  rc->add_option("--n3", rc_n3, "transverse node count (odd)");
  rc->add_option("--table", rc_table, "CSV table path");
  rc->add_option("--report", rc_report, "JSON slope report path");

  bool emit_plot = false;
  app.add_flag("--emit-plot-data", emit_plot,
               "write tables in tidy long format for external plotters");

  CLI11_PARSE(app, argc, argv);

  if (qf->parsed()) {
    std::vector<std::vector<double>> mats;
    for (const auto& s : q_mats) mats.push_back(parse_list(s));
    return cmd_quadform(ctx, q_mu, q_lambda, parse_list(q_ks), mats, q_random, q_seed,
                        q_out);
  }

  if (mi->parsed()) {
    vkp_prestrain* p = mi_p.make(ctx);
    std::unique_ptr<vkp_prestrain, void (*)(vkp_prestrain*)> pg(p,
                                                               vkp_prestrain_destroy);
    std::vector<double> lambdas = parse_list(m_lambdas);
    int mode = m_mode == "incompressible" ? 0 : (m_mode == "compressible" ? 1 : 2);

    json base = {{"subcommand", "minimize"}, {"prestrain", mi_p.describe()},
                 {"mu", m_mu},               {"k", m_k},
                 {"mode", m_mode},           {"nx", m_nx},
                 {"ny", m_ny},               {"max_iter", m_maxit},
                 {"tol", m_tol},             {"seed", m_seed},
                 {"amplitude", m_amp}};

    auto make_opts = [&](double lambda) {
      vkp_minimize_opts o;
      vkp_minimize_opts_default(&o);
      o.mu = m_mu;
      o.lambda = lambda;
      o.k = m_k;
      o.mode = mode;
      o.nx = m_nx;
      o.ny = m_ny;
      o.max_iterations = m_maxit;
      o.gradient_tolerance = m_tol;
      o.seed = m_seed;
      o.init_amplitude = m_amp;
      return o;
    };

    json runs = json::array();
    int cap = thread_cap();
    if (cap > 1 && lambdas.size() > 1) {
      // fan out over the sweep; each run gets its own context
      std::vector<std::future<json>> futs;
      size_t next = 0;
      std::vector<json> results(lambdas.size());
      for (size_t i = 0; i < lambdas.size(); ++i) {
        futs.push_back(std::async(
            std::launch::async, [&, i] {
              CtxGuard local;
              vkp_prestrain* lp = mi_p.make(local.ctx);
              std::unique_ptr<vkp_prestrain, void (*)(vkp_prestrain*)> lpg(
                  lp, vkp_prestrain_destroy);
              return minimize_one(local.ctx, lp, make_opts(lambdas[i]), "", base);
            }));
        if ((int)futs.size() >= cap || i + 1 == lambdas.size()) {
          for (auto& f : futs) results[next++] = f.get();
          futs.clear();
        }
      }
      for (auto& r : results) runs.push_back(std::move(r));
    } else {
      for (double lam : lambdas)
        runs.push_back(minimize_one(ctx, p, make_opts(lam),
                                    lambdas.size() == 1 ? m_fields : "", base));
    }

    json out = runs.size() == 1 ? runs[0] : json{{"config", base}, {"runs", runs}};
    atomic_write(m_report, out.dump(2) + "\n");
    for (const auto& r : runs)
      if (!r["converged"].get<bool>()) return 2;
    return 0;
  }

  if (el->parsed()) {
    vkp_prestrain* p = el_p.make(ctx);
    std::unique_ptr<vkp_prestrain, void (*)(vkp_prestrain*)> pg(p,
                                                               vkp_prestrain_destroy);
    vkp_el_opts o;
    vkp_el_opts_default(&o);
    o.mu = e_mu;
    o.nx = e_nx;
    o.ny = e_ny;
    o.picard_tol = e_tol;
    o.max_outer = e_maxout;
    o.damping = e_damp;
    vkp_elsol* s = nullptr;
    check(ctx, vkp_el_solve(ctx, p, &o, &s));
    std::unique_ptr<vkp_elsol, void (*)(vkp_elsol*)> sg(s, vkp_elsol_destroy);

    double mr, br;
    int it, conv;
    check(ctx, vkp_elsol_stats(ctx, s, &mr, &br, &it, &conv));
    double b1, b2, b3;
    check(ctx, vkp_elsol_natural_bc(ctx, s, e_nu, &b1, &b2, &b3));

    json rep = {{"subcommand", "elsolve"},
                {"prestrain", el_p.describe()},
                {"mu", e_mu},
                {"nx", e_nx},
                {"ny", e_ny},
                {"tol", e_tol},
                {"damping", e_damp},
                {"nu", e_nu},
                {"iterations", it},
                {"converged", conv != 0},
                {"membrane_residual", mr},
                {"bending_residual", br},
                {"edge_norms",
                 {{"clamped_phi", b1}, {"moment", b2}, {"edge_traction", b3}}}};

    if (!e_fields.empty()) {
      int n = e_nx * e_ny;
      std::vector<double> v(n), phi(n);
      check(ctx, vkp_elsol_field(ctx, s, 0, v.data()));
      check(ctx, vkp_elsol_field(ctx, s, 1, phi.data()));
      double x0, x1, y0, y1;
      check(ctx, vkp_prestrain_domain(ctx, p, &x0, &x1, &y0, &y1));
      std::ostringstream os;
      os << csv_config_header(rep) << "i,j,x1,x2,v,phi\n";
      os.precision(15);
      for (int j = 0; j < e_ny; ++j)
        for (int i = 0; i < e_nx; ++i)
          os << i << "," << j << "," << x0 + i * (x1 - x0) / (e_nx - 1) << ","
             << y0 + j * (y1 - y0) / (e_ny - 1) << "," << v[j * e_nx + i] << ","
             << phi[j * e_nx + i] << "\n";
      atomic_write(e_fields, os.str());
    }
    atomic_write(e_report, rep.dump(2) + "\n");
    return conv ? 0 : 2;
  }

  if (rs->parsed()) {
    vkp_prestrain* p = rs_p.make(ctx);
    std::unique_ptr<vkp_prestrain, void (*)(vkp_prestrain*)> pg(p,
                                                               vkp_prestrain_destroy);
    std::vector<double> grids = parse_list(r_grids);
    json rows = json::array();
    std::vector<double> verrs, herrs;
    for (double gn : grids) {
      vkp_el_opts o;
      vkp_el_opts_default(&o);
      o.mu = r_mu;
      o.nx = o.ny = static_cast<int>(gn);
      double ev, ep;
      check(ctx, vkp_el_manufactured(ctx, p, &o, r_v.c_str(), r_phi.c_str(), &ev, &ep));
      rows.push_back({{"n", o.nx}, {"v_err", ev}, {"phi_err", ep}});
      verrs.push_back(ev);
      herrs.push_back(ep);
    }
    auto order = [&](const std::vector<double>& errs) {
      // least squares of log err vs log spacing
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int n = 0;
      for (size_t i = 0; i < errs.size(); ++i) {
        if (!(errs[i] > 0)) continue;
        double lx = std::log(1.0 / (grids[i] - 1)), ly = std::log(errs[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly; ++n;
      }
      return n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;
    };
    json rep = {{"subcommand", "residual"}, {"prestrain", rs_p.describe()},
                {"mu", r_mu},               {"v_expr", r_v},
                {"phi_expr", r_phi},        {"rows", rows},
                {"order_v", order(verrs)},  {"order_phi", order(herrs)}};
    atomic_write(r_report, rep.dump(2) + "\n");
    return 0;
  }

  if (rc->parsed()) {
    vkp_recipe* recipe = nullptr;
    json rdesc;
    if (rc_standard) {
      check(ctx, vkp_recipe_standard(ctx, &recipe));
      rdesc = "standard";
    } else {
      vkp_prestrain* p = rc_p.make(ctx);
      std::unique_ptr<vkp_prestrain, void (*)(vkp_prestrain*)> pg(
          p, vkp_prestrain_destroy);
      check(ctx, vkp_recipe_create(ctx, p, rc_v.c_str(), rc_w1.c_str(),
                                   rc_w2.c_str(), &recipe));
      rdesc = {{"prestrain", rc_p.describe()},
               {"v", rc_v},
               {"w1", rc_w1},
               {"w2", rc_w2}};
    }
    std::unique_ptr<vkp_recipe, void (*)(vkp_recipe*)> rg(recipe, vkp_recipe_destroy);

    std::vector<double> hs = parse_list(rc_hs);
    std::vector<vkp_study_row> rows(hs.size());
    double limit, slopes[4], contraction;
    int rcode = vkp_recovery_study(ctx, recipe, hs.data(), (int)hs.size(), rc_nxy,
                                   rc_n3, rows.data(), &limit, slopes, &contraction);
    if (rcode != VKP_OK) fail(ctx, rcode);

    json cfg = {{"subcommand", "recovery"}, {"recipe", rdesc}, {"h_list", hs},
                {"nxy", rc_nxy},            {"n3", rc_n3}};
    std::ostringstream os;
    os << csv_config_header(cfg);
    os.precision(15);
    if (emit_plot) {
      os << "h,quantity,value\n";
      for (const auto& r : rows) {
        os << r.h << ",phi_dev," << r.dev_phi << "\n"
           << r.h << ",d3_dev," << r.dev_d3 << "\n"
           << r.h << ",tangential_dev," << r.dev_tan << "\n"
           << r.h << ",det_dev," << r.det_dev << "\n"
           << r.h << ",energy," << r.energy << "\n"
           << r.h << ",gap," << r.gap << "\n";
      }
    } else {
      os << "h,phi_dev,d3_dev,tangential_dev,det_dev,energy,gap\n";
      for (const auto& r : rows)
        os << r.h << "," << r.dev_phi << "," << r.dev_d3 << "," << r.dev_tan << ","
           << r.det_dev << "," << r.energy << "," << r.gap << "\n";
    }
    atomic_write(rc_table, os.str());

    if (!rc_report.empty()) {
      json rep = cfg;
      rep["limit"] = limit;
      rep["max_contraction"] = contraction;
      rep["slopes"] = {{"phi", slopes[0]},
                       {"d3", slopes[1]},
                       {"tangential", slopes[2]},
                       {"gap", slopes[3]}};
      atomic_write(rc_report, rep.dump(2) + "\n");
    }
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
