#pragma once

#include <Eigen/Dense>

namespace vkp {

using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

/// Isotropic Lame pair; nu derived.
struct Material {
  double mu = 1.0;
  double lambda = 0.0;

  Material() = default;
  Material(double mu_, double lambda_);
  double nu() const { return lambda / (2.0 * (lambda + mu)); }
};

/// Quadratic form on 3x3 matrices acting through the symmetric part,
/// represented by a symmetric 6x6 matrix on the basis
/// (s11, s22, s33, s12, s13, s23) of sym F.
class QuadForm3 {
 public:
  static QuadForm3 isotropic(const Material& m);
  static QuadForm3 from_matrix(const Eigen::Matrix<double, 6, 6>& r, bool definite);

  double eval(const Mat3& F) const;
  const Eigen::Matrix<double, 6, 6>& rep() const { return rep_; }
  bool definite() const { return definite_; }

 private:
  Eigen::Matrix<double, 6, 6> rep_ = Eigen::Matrix<double, 6, 6>::Zero();
  bool definite_ = false;
};

enum class ExtConstraint { none, trace_free, penalty };

/// Minimizing third-row/column extension of a 2x2 matrix.
struct Extension3 {
  Mat3 F_full;   // the argmin, with symmetric extension entries
  Vec3 c;        // sym(F_full - (F)^*) = sym(c \otimes e3)
  double value;  // attained quadratic-form value
};

// Closed isotropic formulas.
double q3_eval(const Material& m, const Mat3& F);
double q2_relax(const Material& m, const Mat2& F);
double q2_incomp(const Material& m, const Mat2& F);
double q2_penalized(const Material& m, double k, const Mat2& F);
/// q2_incomp - q2_penalized; closed form 4 mu^2 (Tr F)^2 / (2 mu + lambda + k).
double sandwich_gap(const Material& m, double k, const Mat2& F);

/// Generic constrained-minimization oracle over the free extension entries,
/// via explicit KKT solve on the 6x6 representation.
double q2_oracle(const QuadForm3& q, const Mat2& F, ExtConstraint constraint,
                 double k = 0.0);

Extension3 optimal_extension(const QuadForm3& q, const Mat2& F,
                             ExtConstraint constraint, double k = 0.0);
Extension3 optimal_extension(const Material& m, const Mat2& F,
                             ExtConstraint constraint, double k = 0.0);

}  // namespace vkp
