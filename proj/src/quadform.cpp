#include "quadform.hpp"

#include <stdexcept>

namespace vkp {

Material::Material(double mu_, double lambda_) : mu(mu_), lambda(lambda_) {
  if (!(mu > 0.0)) throw std::invalid_argument("Material: mu must be > 0");
  if (lambda < 0.0) throw std::invalid_argument("Material: lambda must be >= 0");
}

QuadForm3 QuadForm3::isotropic(const Material& m) {
  Eigen::Matrix<double, 6, 6> r = Eigen::Matrix<double, 6, 6>::Zero();
  r.diagonal() << 2 * m.mu, 2 * m.mu, 2 * m.mu, 4 * m.mu, 4 * m.mu, 4 * m.mu;
  r.block<3, 3>(0, 0) += Eigen::Matrix3d::Constant(m.lambda);
  QuadForm3 q;
  q.rep_ = r;
  q.definite_ = true;
  return q;
}

QuadForm3 QuadForm3::from_matrix(const Eigen::Matrix<double, 6, 6>& r, bool definite) {
  if ((r - r.transpose()).norm() > 1e-12 * (1.0 + r.norm()))
    throw std::invalid_argument("QuadForm3: representation must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> es(r);
  double lo = es.eigenvalues().minCoeff();
  if (lo < -1e-10 * (1.0 + r.norm()))
    throw std::invalid_argument("QuadForm3: representation must be PSD");
  if (definite && lo <= 0.0)
    throw std::invalid_argument("QuadForm3: definite flag on singular form");
  QuadForm3 q;
  q.rep_ = r;
  q.definite_ = definite;
  return q;
}

namespace {

Eigen::Matrix<double, 6, 1> sym_basis(const Mat3& F) {
  Mat3 s = 0.5 * (F + F.transpose());
  Eigen::Matrix<double, 6, 1> m;
  m << s(0, 0), s(1, 1), s(2, 2), s(0, 1), s(0, 2), s(1, 2);
  return m;
}

Mat3 star(const Mat2& F) {
  Mat3 out = Mat3::Zero();
  out.block<2, 2>(0, 0) = F;
  return out;
}

}  // namespace

double QuadForm3::eval(const Mat3& F) const {
  auto m = sym_basis(F);
  return m.dot(rep_ * m);
}

double q3_eval(const Material& m, const Mat3& F) {
  Mat3 s = 0.5 * (F + F.transpose());
  double tr = F.trace();
  return 2.0 * m.mu * s.squaredNorm() + m.lambda * tr * tr;
}

double q2_relax(const Material& m, const Mat2& F) {
  Mat2 s = 0.5 * (F + F.transpose());
  double tr = F.trace();
  return 2.0 * m.mu * s.squaredNorm() +
         (2.0 * m.mu * m.lambda / (2.0 * m.mu + m.lambda)) * tr * tr;
}

double q2_incomp(const Material& m, const Mat2& F) {
  Mat2 s = 0.5 * (F + F.transpose());
  double tr = F.trace();
  return 2.0 * m.mu * (s.squaredNorm() + tr * tr);
}

double q2_penalized(const Material& m, double k, const Mat2& F) {
  if (k < 0.0) throw std::invalid_argument("q2_penalized: k must be >= 0");
  Mat2 s = 0.5 * (F + F.transpose());
  double tr = F.trace();
  double lk = m.lambda + k;
  return 2.0 * m.mu * s.squaredNorm() +
         (2.0 * m.mu * lk / (2.0 * m.mu + lk)) * tr * tr;
}

double sandwich_gap(const Material& m, double k, const Mat2& F) {
  if (!(k > 0.0)) throw std::invalid_argument("sandwich_gap: k must be > 0");
  return q2_incomp(m, F) - q2_penalized(m, k, F);
}

Extension3 optimal_extension(const QuadForm3& q, const Mat2& F,
                             ExtConstraint constraint, double k) {
  if (constraint == ExtConstraint::penalty && k < 0.0)
    throw std::invalid_argument("optimal_extension: penalty k must be >= 0");

  // Basis (s11, s22, s33, s12, s13, s23); free entries are s13, s23 and,
  // unless the trace constraint pins it, s33.
  Eigen::Matrix<double, 6, 6> R = q.rep();
  if (constraint == ExtConstraint::penalty) {
    Eigen::Matrix<double, 6, 1> e;
    e << 1, 1, 1, 0, 0, 0;
    R += k * e * e.transpose();
  }

  Mat2 sF = 0.5 * (F + F.transpose());
  double s11 = sF(0, 0), s22 = sF(1, 1), s12 = sF(0, 1);

  double s13, s23, s33;
  if (constraint == ExtConstraint::trace_free) {
    s33 = -(s11 + s22);
    std::array<int, 2> free_ix = {4, 5};
    std::array<int, 4> fix_ix = {0, 1, 2, 3};
    Eigen::Vector4d p(s11, s22, s33, s12);
    Eigen::Matrix2d A;
    Eigen::Vector2d b;
    for (int a = 0; a < 2; ++a) {
      for (int c = 0; c < 2; ++c) A(a, c) = R(free_ix[a], free_ix[c]);
      double s = 0;
      for (int c = 0; c < 4; ++c) s += R(free_ix[a], fix_ix[c]) * p[c];
      b[a] = -s;
    }
    Eigen::Vector2d f = A.ldlt().solve(b);
    s13 = f[0];
    s23 = f[1];
  } else {
    std::array<int, 3> free_ix = {4, 5, 2};
    std::array<int, 3> fix_ix = {0, 1, 3};
    Eigen::Vector3d p(s11, s22, s12);
    Eigen::Matrix3d A;
    Eigen::Vector3d b;
    for (int a = 0; a < 3; ++a) {
      for (int c = 0; c < 3; ++c) A(a, c) = R(free_ix[a], free_ix[c]);
      double s = 0;
      for (int c = 0; c < 3; ++c) s += R(free_ix[a], fix_ix[c]) * p[c];
      b[a] = -s;
    }
    Eigen::Vector3d f = A.ldlt().solve(b);
    s13 = f[0];
    s23 = f[1];
    s33 = f[2];
  }

  Extension3 out;
  out.F_full = star(F);
  out.F_full(0, 2) = out.F_full(2, 0) = s13;
  out.F_full(1, 2) = out.F_full(2, 1) = s23;
  out.F_full(2, 2) = s33;
  out.c = Vec3(2.0 * s13, 2.0 * s23, s33);

  Eigen::Matrix<double, 6, 1> m;
  m << s11, s22, s33, s12, s13, s23;
  out.value = m.dot(R * m);  // includes the k(Tr)^2 term in penalty mode
  return out;
}

Extension3 optimal_extension(const Material& m, const Mat2& F,
                             ExtConstraint constraint, double k) {
  return optimal_extension(QuadForm3::isotropic(m), F, constraint, k);
}

double q2_oracle(const QuadForm3& q, const Mat2& F, ExtConstraint constraint,
                 double k) {
  return optimal_extension(q, F, constraint, k).value;
}

}  // namespace vkp
