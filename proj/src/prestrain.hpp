#pragma once

#include <string>
#include <utility>

#include "expr.hpp"
#include "quadform.hpp"
#include "tensorfield.hpp"

namespace vkp {

struct Rect {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  bool contains(double x1, double x2) const {
    return x1 >= x_min && x1 <= x_max && x2 >= y_min && x2 <= y_max;
  }
};

/// Analytic midplane prestrain fields eps_g, kappa_g (full 3x3).
struct PrestrainSpec {
  ExprMat3 eps_g;
  ExprMat3 kappa_g;
  std::string name = "zero";
  Rect domain;

  Mat3 eps_at(double x1, double x2) const;
  Mat3 kappa_at(double x1, double x2) const;
  /// 2x2 block of sym eps_g / sym kappa_g, sampled on a grid.
  MatrixField2 sym_eps_2x2(const GridSpec& g) const;
  MatrixField2 sym_kappa_2x2(const GridSpec& g) const;
};

struct GrowthEval {
  Mat3 a_h;
  Mat3 a_h_inv;
  Mat3 g_h;
};

// Named presets: zero, swell(alpha), uniform-bend(c), saddle-bend(c),
// cylinder-bend(c), incompatible-stretch.
PrestrainSpec preset_prestrain(const std::string& name, double param = 1.0);

std::pair<Mat3, Mat3> eval_prestrain(const PrestrainSpec& spec, double x1, double x2);

/// a^h = Id3 + h^2 eps_g + h * (h*x3_scaled) * kappa_g, with exact inverse
/// and metric g^h = a^T a. x3_scaled in [-1/2, 1/2].
GrowthEval growth_tensor(const PrestrainSpec& spec, double h, double x1, double x2,
                         double x3_scaled);

/// Parses the JSON config document; rejects unknown keys.
PrestrainSpec load_prestrain_config(const std::string& text);

}  // namespace vkp
