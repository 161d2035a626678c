#pragma once

#include <string>

#include "prestrain.hpp"
#include "quadform.hpp"
#include "tensorfield.hpp"

namespace vkp {

enum class EnergyMode { incompressible, compressible, penalized };

struct PlateState {
  VectorField2 w;  // in-plane displacement
  ScalarField v;   // out-of-plane displacement

  PlateState() = default;
  explicit PlateState(const GridSpec& g) : w(g), v(g) {}
  const GridSpec& grid() const { return v.grid; }
};

struct EnergyBreakdown {
  double stretching = 0.0;
  double bending = 0.0;
  double total = 0.0;
  EnergyMode mode = EnergyMode::incompressible;
  double k = 0.0;  // penalty parameter when mode == penalized
};

/// Coefficient of (Tr M)^2 in the nodewise quadratic form for the mode;
/// the |sym M|^2 coefficient is 2*mu in every mode.
double trace_coefficient(const Material& m, EnergyMode mode, double k);

/// sym grad w + 1/2 grad v \otimes grad v - (sym eps_g)_{2x2}
MatrixField2 stretching_strain(const PlateState& s, const PrestrainSpec& p);

/// hess v + (sym kappa_g)_{2x2}
MatrixField2 bending_strain(const PlateState& s, const PrestrainSpec& p);

EnergyBreakdown energy(const PlateState& s, const PrestrainSpec& p, const Material& m,
                       EnergyMode mode, double k = 0.0);

/// Exact gradient of the discrete energy with respect to every nodal value,
/// via adjoints of the difference and quadrature stencils.
void energy_gradient(const PlateState& s, const PrestrainSpec& p, const Material& m,
                     EnergyMode mode, double k, VectorField2& grad_w,
                     ScalarField& grad_v);

}  // namespace vkp
