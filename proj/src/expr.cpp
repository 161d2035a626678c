#include "expr.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace vkp {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp };

struct ExprNode {
  Op op = Op::Const;
  double value = 0.0;   // Const payload, or Pow exponent
  int axis = 0;         // Var payload
  std::shared_ptr<const ExprNode> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

NodePtr make_const(double v) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

bool is_const(const NodePtr& n, double v) {
  return n->op == Op::Const && n->value == v;
}

NodePtr node1(Op op, NodePtr a, double value = 0.0) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = std::move(a);
  n->value = value;
  return n;
}

NodePtr node2(Op op, NodePtr a, NodePtr b) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr mk_add(NodePtr a, NodePtr b);
NodePtr mk_mul(NodePtr a, NodePtr b);

NodePtr mk_add(NodePtr a, NodePtr b) {
  if (a->op == Op::Const && b->op == Op::Const) return make_const(a->value + b->value);
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return node2(Op::Add, std::move(a), std::move(b));
}

NodePtr mk_sub(NodePtr a, NodePtr b) {
  if (a->op == Op::Const && b->op == Op::Const) return make_const(a->value - b->value);
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return node1(Op::Neg, std::move(b));
  return node2(Op::Sub, std::move(a), std::move(b));
}

NodePtr mk_mul(NodePtr a, NodePtr b) {
  if (a->op == Op::Const && b->op == Op::Const) return make_const(a->value * b->value);
  if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return node2(Op::Mul, std::move(a), std::move(b));
}

NodePtr mk_div(NodePtr a, NodePtr b) {
  if (is_const(b, 0.0)) throw std::invalid_argument("expr: division by constant zero");
  if (a->op == Op::Const && b->op == Op::Const) return make_const(a->value / b->value);
  if (is_const(a, 0.0)) return make_const(0.0);
  if (is_const(b, 1.0)) return a;
  return node2(Op::Div, std::move(a), std::move(b));
}

NodePtr mk_neg(NodePtr a) {
  if (a->op == Op::Const) return make_const(-a->value);
  if (a->op == Op::Neg) return a->a;
  return node1(Op::Neg, std::move(a));
}

NodePtr mk_pow(NodePtr a, double e) {
  if (e == 0.0) return make_const(1.0);
  if (e == 1.0) return a;
  if (a->op == Op::Const) return make_const(std::pow(a->value, e));
  return node1(Op::Pow, std::move(a), e);
}

double eval_node(const ExprNode& n, double x1, double x2) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return n.axis == 0 ? x1 : x2;
    case Op::Add: return eval_node(*n.a, x1, x2) + eval_node(*n.b, x1, x2);
    case Op::Sub: return eval_node(*n.a, x1, x2) - eval_node(*n.b, x1, x2);
    case Op::Mul: return eval_node(*n.a, x1, x2) * eval_node(*n.b, x1, x2);
    case Op::Div: return eval_node(*n.a, x1, x2) / eval_node(*n.b, x1, x2);
    case Op::Neg: return -eval_node(*n.a, x1, x2);
    case Op::Pow: return std::pow(eval_node(*n.a, x1, x2), n.value);
    case Op::Sin: return std::sin(eval_node(*n.a, x1, x2));
    case Op::Cos: return std::cos(eval_node(*n.a, x1, x2));
    case Op::Exp: return std::exp(eval_node(*n.a, x1, x2));
  }
  return 0.0;
}

NodePtr diff_node(const NodePtr& n, int axis) {
  switch (n->op) {
    case Op::Const: return make_const(0.0);
    case Op::Var: return make_const(n->axis == axis ? 1.0 : 0.0);
    case Op::Add: return mk_add(diff_node(n->a, axis), diff_node(n->b, axis));
    case Op::Sub: return mk_sub(diff_node(n->a, axis), diff_node(n->b, axis));
    case Op::Mul:
      return mk_add(mk_mul(diff_node(n->a, axis), n->b),
                    mk_mul(n->a, diff_node(n->b, axis)));
    case Op::Div:
      return mk_div(mk_sub(mk_mul(diff_node(n->a, axis), n->b),
                           mk_mul(n->a, diff_node(n->b, axis))),
                    mk_pow(n->b, 2.0));
    case Op::Neg: return mk_neg(diff_node(n->a, axis));
    case Op::Pow:
      return mk_mul(mk_mul(make_const(n->value), mk_pow(n->a, n->value - 1.0)),
                    diff_node(n->a, axis));
    case Op::Sin: return mk_mul(node1(Op::Cos, n->a), diff_node(n->a, axis));
    case Op::Cos: return mk_neg(mk_mul(node1(Op::Sin, n->a), diff_node(n->a, axis)));
    case Op::Exp: return mk_mul(node1(Op::Exp, n->a), diff_node(n->a, axis));
  }
  return make_const(0.0);
}

void str_node(const ExprNode& n, std::ostream& os) {
  switch (n.op) {
    case Op::Const: os << n.value; break;
    case Op::Var: os << (n.axis == 0 ? "x1" : "x2"); break;
    case Op::Add: os << '('; str_node(*n.a, os); os << " + "; str_node(*n.b, os); os << ')'; break;
    case Op::Sub: os << '('; str_node(*n.a, os); os << " - "; str_node(*n.b, os); os << ')'; break;
    case Op::Mul: os << '('; str_node(*n.a, os); os << "*"; str_node(*n.b, os); os << ')'; break;
    case Op::Div: os << '('; str_node(*n.a, os); os << "/"; str_node(*n.b, os); os << ')'; break;
    case Op::Neg: os << "(-"; str_node(*n.a, os); os << ')'; break;
    case Op::Pow: os << '('; str_node(*n.a, os); os << '^' << n.value << ')'; break;
    case Op::Sin: os << "sin("; str_node(*n.a, os); os << ')'; break;
    case Op::Cos: os << "cos("; str_node(*n.a, os); os << ')'; break;
    case Op::Exp: os << "exp("; str_node(*n.a, os); os << ')'; break;
  }
}

// Recursive-descent parser.
class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = expression();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing input");
    return e;
  }

 private:
  const std::string& s_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) {
    std::ostringstream os;
    os << "expr parse error at position " << pos_ << ": " << what;
    throw std::invalid_argument(os.str());
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  NodePtr expression() {
    NodePtr e = term();
    for (;;) {
      if (consume('+')) e = mk_add(e, term());
      else if (consume('-')) e = mk_sub(e, term());
      else return e;
    }
  }

  NodePtr term() {
    NodePtr e = unary();
    for (;;) {
      if (consume('*')) e = mk_mul(e, unary());
      else if (consume('/')) e = mk_div(e, unary());
      else return e;
    }
  }

  NodePtr unary() {
    if (consume('-')) return mk_neg(unary());
    if (consume('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (consume('^')) {
      NodePtr e = unary();
      if (e->op != Op::Const) fail("exponent must be a constant");
      return mk_pow(base, e->value);
    }
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '(') {
      ++pos_;
      NodePtr e = expression();
      if (!consume(')')) fail("expected ')'");
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr number() {
    size_t end = pos_;
    while (end < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[end])) || s_[end] == '.' ||
            s_[end] == 'e' || s_[end] == 'E' ||
            ((s_[end] == '+' || s_[end] == '-') && end > pos_ &&
             (s_[end - 1] == 'e' || s_[end - 1] == 'E'))))
      ++end;
    double v;
    try {
      size_t used;
      v = std::stod(s_.substr(pos_, end - pos_), &used);
      if (used != end - pos_) fail("bad number");
    } catch (const std::exception&) {
      fail("bad number");
    }
    pos_ = end;
    return make_const(v);
  }

  NodePtr identifier() {
    size_t end = pos_;
    while (end < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_'))
      ++end;
    std::string name = s_.substr(pos_, end - pos_);
    pos_ = end;
    if (name == "x1") {
      auto n = std::make_shared<ExprNode>();
      n->op = Op::Var;
      n->axis = 0;
      return n;
    }
    if (name == "x2") {
      auto n = std::make_shared<ExprNode>();
      n->op = Op::Var;
      n->axis = 1;
      return n;
    }
    if (name == "pi") return make_const(M_PI);
    if (name == "sin" || name == "cos" || name == "exp") {
      if (!consume('(')) fail("expected '(' after " + name);
      NodePtr arg = expression();
      if (!consume(')')) fail("expected ')'");
      Op op = name == "sin" ? Op::Sin : name == "cos" ? Op::Cos : Op::Exp;
      return node1(op, std::move(arg));
    }
    fail("unknown identifier '" + name + "'");
  }
};

}  // namespace

Expr::Expr() : node_(make_const(0.0)) {}

Expr Expr::constant(double v) { return Expr(make_const(v)); }

Expr Expr::var(int axis) {
  if (axis != 0 && axis != 1) throw std::invalid_argument("expr: axis must be 0 or 1");
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Var;
  n->axis = axis;
  return Expr(std::move(n));
}

Expr Expr::parse(const std::string& text) { return Expr(Parser(text).parse()); }

double Expr::eval(double x1, double x2) const { return eval_node(*node_, x1, x2); }

Expr Expr::diff(int axis) const { return Expr(diff_node(node_, axis)); }

bool Expr::is_zero() const { return is_const(node_, 0.0); }

std::string Expr::str() const {
  std::ostringstream os;
  str_node(*node_, os);
  return os.str();
}

Expr operator+(const Expr& a, const Expr& b) { return Expr(mk_add(a.node_, b.node_)); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(mk_sub(a.node_, b.node_)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(mk_mul(a.node_, b.node_)); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(mk_div(a.node_, b.node_)); }
Expr operator-(const Expr& a) { return Expr(mk_neg(a.node_)); }
Expr pow(const Expr& a, double e) { return Expr(mk_pow(a.node_, e)); }
Expr sin(const Expr& a) { return Expr(node1(Op::Sin, a.node_)); }
Expr cos(const Expr& a) { return Expr(node1(Op::Cos, a.node_)); }
Expr exp(const Expr& a) { return Expr(node1(Op::Exp, a.node_)); }

}  // namespace vkp
