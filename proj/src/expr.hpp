#pragma once

#include <array>
#include <memory>
#include <stdexcept>
#include <string>

namespace vkp {

struct ExprNode;

/// Closed-form scalar expression in the midplane coordinates x1, x2.
/// Immutable tree; supports evaluation and exact symbolic differentiation.
class Expr {
 public:
  Expr();  // zero
  static Expr constant(double v);
  static Expr var(int axis);  // 0 -> x1, 1 -> x2

  /// Parses "+ - * / ^ sin cos exp", numbers, pi, x1, x2.
  /// Throws std::invalid_argument with a position diagnostic on bad input.
  static Expr parse(const std::string& text);

  double eval(double x1, double x2) const;
  Expr diff(int axis) const;

  bool is_zero() const;
  std::string str() const;

 private:
  explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const ExprNode> node_;

  friend Expr operator+(const Expr&, const Expr&);
  friend Expr operator-(const Expr&, const Expr&);
  friend Expr operator*(const Expr&, const Expr&);
  friend Expr operator/(const Expr&, const Expr&);
  friend Expr operator-(const Expr&);
  friend Expr pow(const Expr&, double);
  friend Expr sin(const Expr&);
  friend Expr cos(const Expr&);
  friend Expr exp(const Expr&);
};

Expr operator+(const Expr&, const Expr&);
Expr operator-(const Expr&, const Expr&);
Expr operator*(const Expr&, const Expr&);
Expr operator/(const Expr&, const Expr&);
Expr operator-(const Expr&);
Expr pow(const Expr&, double exponent);
Expr sin(const Expr&);
Expr cos(const Expr&);
Expr exp(const Expr&);

using ExprVec2 = std::array<Expr, 2>;
using ExprVec3 = std::array<Expr, 3>;
using ExprMat3 = std::array<Expr, 9>;  // row-major 3x3

}  // namespace vkp
