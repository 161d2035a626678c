#pragma once

#include <cstdint>

#include "energy2d.hpp"

namespace vkp {

struct MinimizeOptions {
  int max_iterations = 2000;
  double gradient_tolerance = 1e-8;
  int history = 10;  // quasi-Newton memory
};

struct SolveReport {
  PlateState state;
  EnergyBreakdown energy;
  double gradient_max_norm = 0.0;
  int iterations = 0;
  int line_search_failures = 0;
  bool converged = false;
  double wall_time_s = 0.0;
  uint32_t seed = 0;
};

/// Limited-memory quasi-Newton descent with backtracking line search and
/// mean-subtraction gauge fixing. Deterministic given inputs.
SolveReport minimize_energy(const PrestrainSpec& p, const Material& m, EnergyMode mode,
                            double k, const PlateState& init,
                            const MinimizeOptions& opts = {});

/// Random perturbation state for a given seed and amplitude.
PlateState random_state(const GridSpec& g, uint32_t seed, double amplitude);

/// Max over `ndir` random unit directions of the relative error between the
/// analytic directional derivative and a central finite difference.
double gradient_check(const PrestrainSpec& p, const Material& m, EnergyMode mode,
                      double k, const PlateState& s, int ndir = 20,
                      uint32_t seed = 1234);

}  // namespace vkp
