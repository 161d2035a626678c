#include "minimize.hpp"

#include <Eigen/Sparse>
#include <chrono>
#include <cmath>
#include <deque>
#include <random>
#include <stdexcept>
#include <vector>

namespace vkp {

namespace {

using Vec = std::vector<double>;
using SpMat = Eigen::SparseMatrix<double>;

/// Matrix of a linear grid operator, assembled by applying it to unit fields.
SpMat op_matrix(const GridSpec& g, ScalarField (*op)(const ScalarField&)) {
  int n = g.size();
  std::vector<Eigen::Triplet<double>> trip;
  ScalarField e(g);
  for (int c = 0; c < n; ++c) {
    e.v.assign(n, 0.0);
    e.v[c] = 1.0;
    ScalarField col = op(e);
    for (int r = 0; r < n; ++r)
      if (col.v[r] != 0.0) trip.emplace_back(r, c, col.v[r]);
  }
  SpMat M(n, n);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

/// Hessian of the quadratic part of the energy (membrane with the strain
/// linearized at rest, plus the full bending term), used as the fixed metric
/// of the quasi-Newton iteration. Gauge null modes are handled by a tiny
/// diagonal shift.
SpMat quadratic_hessian(const GridSpec& g, const Material& m, double beta) {
  int n = g.size();
  SpMat d1x = op_matrix(g, d1_x), d1y = op_matrix(g, d1_y);
  SpMat d2x = op_matrix(g, d2_x), d2y = op_matrix(g, d2_y);
  SpMat dxy = d1x * d1y;

  Eigen::VectorXd wq(n);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) wq[g.index(i, j)] = quad_weight(g, i, j);
  SpMat Ws(n, n), Wb(n, n);
  for (int i = 0; i < n; ++i) {
    Ws.insert(i, i) = 0.5 * wq[i];
    Wb.insert(i, i) = wq[i] / 24.0;
  }
  double mu = m.mu;

  SpMat H11 = 2.0 * ((2 * mu + beta) * SpMat(d1x.transpose() * Ws * d1x) +
                     mu * SpMat(d1y.transpose() * Ws * d1y));
  SpMat H22 = 2.0 * ((2 * mu + beta) * SpMat(d1y.transpose() * Ws * d1y) +
                     mu * SpMat(d1x.transpose() * Ws * d1x));
  SpMat H12 = 2.0 * (mu * SpMat(d1y.transpose() * Ws * d1x) +
                     beta * SpMat(d1x.transpose() * Ws * d1y));
  SpMat Hv = 2.0 * ((2 * mu + beta) * SpMat(d2x.transpose() * Wb * d2x) +
                    (2 * mu + beta) * SpMat(d2y.transpose() * Wb * d2y) +
                    beta * SpMat(d2x.transpose() * Wb * d2y) +
                    beta * SpMat(d2y.transpose() * Wb * d2x) +
                    4.0 * mu * SpMat(dxy.transpose() * Wb * dxy));

  std::vector<Eigen::Triplet<double>> trip;
  auto add_block = [&](const SpMat& B, int r0, int c0) {
    for (int c = 0; c < B.outerSize(); ++c)
      for (SpMat::InnerIterator itr(B, c); itr; ++itr)
        trip.emplace_back(r0 + itr.row(), c0 + itr.col(), itr.value());
  };
  add_block(H11, 0, 0);
  add_block(H12, 0, n);
  add_block(SpMat(H12.transpose()), n, 0);
  add_block(H22, n, n);
  add_block(Hv, 2 * n, 2 * n);

  SpMat H(3 * n, 3 * n);
  H.setFromTriplets(trip.begin(), trip.end());
  double shift = 0.0;
  for (int i = 0; i < 3 * n; ++i) shift += H.coeff(i, i);
  shift *= 1e-7 / (3 * n);
  SpMat I(3 * n, 3 * n);
  I.setIdentity();
  H += shift * I;
  return H;
}

struct Problem {
  const PrestrainSpec& p;
  const Material& m;
  EnergyMode mode;
  double k;
  GridSpec grid;
  int n;  // nodes

  PlateState unpack(const Vec& x) const {
    PlateState s(grid);
    for (int i = 0; i < n; ++i) {
      s.w.c1[i] = x[i];
      s.w.c2[i] = x[n + i];
      s.v.v[i] = x[2 * n + i];
    }
    return s;
  }

  void pack(const PlateState& s, Vec& x) const {
    x.resize(3 * n);
    for (int i = 0; i < n; ++i) {
      x[i] = s.w.c1[i];
      x[n + i] = s.w.c2[i];
      x[2 * n + i] = s.v.v[i];
    }
  }

  double value(const Vec& x) const {
    return energy(unpack(x), p, m, mode, k).total;
  }

  double value_grad(const Vec& x, Vec& g) const {
    PlateState s = unpack(x);
    VectorField2 gw;
    ScalarField gv;
    energy_gradient(s, p, m, mode, k, gw, gv);
    g.resize(3 * n);
    for (int i = 0; i < n; ++i) {
      g[i] = gw.c1[i];
      g[n + i] = gw.c2[i];
      g[2 * n + i] = gv.v[i];
    }
    return energy(s, p, m, mode, k).total;
  }
};

double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_norm(const Vec& a) {
  double s = 0;
  for (double x : a) s = std::max(s, std::abs(x));
  return s;
}

// translations of w and v are energy-neutral; pin the means
void gauge_fix(Vec& x, int n) {
  for (int blk = 0; blk < 3; ++blk) {
    double mean = 0;
    for (int i = 0; i < n; ++i) mean += x[blk * n + i];
    mean /= n;
    for (int i = 0; i < n; ++i) x[blk * n + i] -= mean;
  }
}

}  // namespace

PlateState random_state(const GridSpec& g, uint32_t seed, double amplitude) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  PlateState s(g);
  for (int i = 0; i < g.size(); ++i) {
    s.w.c1[i] = dist(rng);
    s.w.c2[i] = dist(rng);
    s.v.v[i] = dist(rng);
  }
  return s;
}

SolveReport minimize_energy(const PrestrainSpec& p, const Material& m, EnergyMode mode,
                            double k, const PlateState& init,
                            const MinimizeOptions& opts) {
  auto t0 = std::chrono::steady_clock::now();
  Problem prob{p, m, mode, k, init.grid(), init.grid().size()};

  SpMat H = quadratic_hessian(prob.grid, m, trace_coefficient(m, mode, k));
  Eigen::SimplicialLDLT<SpMat> metric(H);
  if (metric.info() != Eigen::Success)
    throw std::runtime_error("minimize: metric factorization failed");

  Vec x;
  prob.pack(init, x);
  gauge_fix(x, prob.n);

  Vec g;
  double f = prob.value_grad(x, g);
  if (!std::isfinite(f)) throw std::invalid_argument("minimize: non-finite energy at init");

  struct Pair {
    Vec s, y;
    double rho;
  };
  std::deque<Pair> hist;

  SolveReport rep;
  rep.converged = max_norm(g) <= opts.gradient_tolerance;

  int it = 0;
  for (; it < opts.max_iterations && !rep.converged; ++it) {
    // two-loop recursion
    Vec q = g;
    std::vector<double> alpha(hist.size());
    for (int i = static_cast<int>(hist.size()) - 1; i >= 0; --i) {
      alpha[i] = hist[i].rho * dot(hist[i].s, q);
      for (size_t j = 0; j < q.size(); ++j) q[j] -= alpha[i] * hist[i].y[j];
    }
    // initial metric: inverse of the quadratic-part Hessian
    {
      Eigen::Map<Eigen::VectorXd> qv(q.data(), q.size());
      qv = metric.solve(qv);
    }
    for (size_t i = 0; i < hist.size(); ++i) {
      double beta = hist[i].rho * dot(hist[i].y, q);
      for (size_t j = 0; j < q.size(); ++j) q[j] += (alpha[i] - beta) * hist[i].s[j];
    }
    Vec d(q.size());
    for (size_t j = 0; j < q.size(); ++j) d[j] = -q[j];

    double slope = dot(g, d);
    if (slope >= 0) {  // fall back to steepest descent
      for (size_t j = 0; j < d.size(); ++j) d[j] = -g[j];
      slope = dot(g, d);
      hist.clear();
    }

    // Wolfe line search: sufficient decrease 1e-4, curvature 0.9, with
    // doubling when the slope stays steep and halving on overshoot
    double step = 1.0;
    Vec xn(x.size()), gn;
    double fn = f;
    bool accepted = false;
    int expansions = 0;
    for (int ls = 0; ls < 60; ++ls) {
      for (size_t j = 0; j < x.size(); ++j) xn[j] = x[j] + step * d[j];
      fn = prob.value_grad(xn, gn);
      if (!std::isfinite(fn) || fn > f + 1e-4 * step * slope) {
        step *= 0.5;
        continue;
      }
      double dg = dot(gn, d);
      if (dg < 0.9 * slope && expansions < 20) {  // still steeply descending
        ++expansions;
        step *= 2.0;
        continue;
      }
      accepted = true;
      break;
    }
    if (!accepted) {
      ++rep.line_search_failures;
      break;  // stagnation reported, not raised
    }

    gauge_fix(xn, prob.n);
    double fn2 = fn;

    Pair pr;
    pr.s.resize(x.size());
    pr.y.resize(x.size());
    for (size_t j = 0; j < x.size(); ++j) {
      pr.s[j] = xn[j] - x[j];
      pr.y[j] = gn[j] - g[j];
    }
    double sy = dot(pr.s, pr.y);
    if (sy > 1e-18) {
      pr.rho = 1.0 / sy;
      hist.push_back(std::move(pr));
      if (static_cast<int>(hist.size()) > opts.history) hist.pop_front();
    }

    x = std::move(xn);
    g = std::move(gn);
    f = fn2;
    if (max_norm(g) <= opts.gradient_tolerance) rep.converged = true;
  }

  rep.state = prob.unpack(x);
  rep.energy = energy(rep.state, p, m, mode, k);
  rep.gradient_max_norm = max_norm(g);
  rep.iterations = it;
  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

double gradient_check(const PrestrainSpec& p, const Material& m, EnergyMode mode,
                      double k, const PlateState& s, int ndir, uint32_t seed) {
  Problem prob{p, m, mode, k, s.grid(), s.grid().size()};
  Vec x;
  prob.pack(s, x);
  Vec g;
  prob.value_grad(x, g);

  std::mt19937 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  const double step = 1e-5;
  double worst = 0.0;
  for (int d = 0; d < ndir; ++d) {
    Vec dir(x.size());
    double nrm = 0;
    for (double& e : dir) {
      e = dist(rng);
      nrm += e * e;
    }
    nrm = std::sqrt(nrm);
    for (double& e : dir) e /= nrm;

    double analytic = dot(g, dir);
    Vec xp = x, xm = x;
    for (size_t j = 0; j < x.size(); ++j) {
      xp[j] += step * dir[j];
      xm[j] -= step * dir[j];
    }
    double fd = (prob.value(xp) - prob.value(xm)) / (2.0 * step);
    double err = std::abs(analytic - fd) / std::max(1.0, std::abs(analytic));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace vkp
