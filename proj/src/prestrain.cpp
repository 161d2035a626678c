#include "prestrain.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace vkp {

namespace {

ExprMat3 zero_mat() {
  ExprMat3 m;
  return m;  // Expr default-constructs to zero
}

ExprMat3 const_diag(double a, double b, double c) {
  ExprMat3 m = zero_mat();
  m[0] = Expr::constant(a);
  m[4] = Expr::constant(b);
  m[8] = Expr::constant(c);
  return m;
}

Mat3 eval_mat(const ExprMat3& m, double x1, double x2) {
  Mat3 out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out(r, c) = m[3 * r + c].eval(x1, x2);
  return out;
}

void check_inside(const PrestrainSpec& spec, double x1, double x2) {
  if (!spec.domain.contains(x1, x2))
    throw std::invalid_argument("prestrain: point outside domain rectangle");
}

// "0", "diag(e1,e2,e3)", or a single expression placed at every entry is not
// allowed; shorthand is restricted to the forms the schema names.
ExprMat3 parse_matrix_shorthand(const std::string& s, const std::string& field) {
  std::string t;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  if (t == "0") return zero_mat();
  if (t.rfind("diag(", 0) == 0 && t.back() == ')') {
    std::string inner = t.substr(5, t.size() - 6);
    // split on top-level commas
    std::array<std::string, 3> parts;
    int depth = 0, idx = 0;
    for (char c : inner) {
      if (c == '(') ++depth;
      if (c == ')') --depth;
      if (c == ',' && depth == 0) {
        if (++idx > 2)
          throw std::invalid_argument("prestrain config: diag() in '" + field +
                                      "' needs exactly 3 entries");
        continue;
      }
      parts[idx] += c;
    }
    if (idx != 2)
      throw std::invalid_argument("prestrain config: diag() in '" + field +
                                  "' needs exactly 3 entries");
    ExprMat3 m = zero_mat();
    try {
      m[0] = Expr::parse(parts[0]);
      m[4] = Expr::parse(parts[1]);
      m[8] = Expr::parse(parts[2]);
    } catch (const std::exception& e) {
      throw std::invalid_argument("prestrain config: field '" + field +
                                  "': " + e.what());
    }
    return m;
  }
  throw std::invalid_argument("prestrain config: field '" + field +
                              "': expected \"0\", \"diag(...)\" or a 3x3 array");
}

ExprMat3 parse_matrix(const nlohmann::json& j, const std::string& field) {
  if (j.is_string()) return parse_matrix_shorthand(j.get<std::string>(), field);
  if (j.is_array()) {
    if (j.size() != 3)
      throw std::invalid_argument("prestrain config: field '" + field +
                                  "' must be a 3x3 array");
    ExprMat3 m = zero_mat();
    for (int r = 0; r < 3; ++r) {
      if (!j[r].is_array() || j[r].size() != 3)
        throw std::invalid_argument("prestrain config: field '" + field +
                                    "' must be a 3x3 array");
      for (int c = 0; c < 3; ++c) {
        const auto& e = j[r][c];
        try {
          if (e.is_number())
            m[3 * r + c] = Expr::constant(e.get<double>());
          else
            m[3 * r + c] = Expr::parse(e.get<std::string>());
        } catch (const std::exception& ex) {
          throw std::invalid_argument("prestrain config: field '" + field + "' entry (" +
                                      std::to_string(r) + "," + std::to_string(c) +
                                      "): " + ex.what());
        }
      }
    }
    return m;
  }
  throw std::invalid_argument("prestrain config: field '" + field +
                              "' must be a string or 3x3 array");
}

}  // namespace

Mat3 PrestrainSpec::eps_at(double x1, double x2) const { return eval_mat(eps_g, x1, x2); }
Mat3 PrestrainSpec::kappa_at(double x1, double x2) const {
  return eval_mat(kappa_g, x1, x2);
}

MatrixField2 PrestrainSpec::sym_eps_2x2(const GridSpec& g) const {
  MatrixField2 out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      Mat3 e = eps_at(g.x(i), g.y(j));
      Mat3 s = 0.5 * (e + e.transpose());
      int k = g.index(i, j);
      out.a11[k] = s(0, 0);
      out.a12[k] = s(0, 1);
      out.a21[k] = s(1, 0);
      out.a22[k] = s(1, 1);
    }
  out.symmetric = true;
  return out;
}

MatrixField2 PrestrainSpec::sym_kappa_2x2(const GridSpec& g) const {
  MatrixField2 out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      Mat3 e = kappa_at(g.x(i), g.y(j));
      Mat3 s = 0.5 * (e + e.transpose());
      int k = g.index(i, j);
      out.a11[k] = s(0, 0);
      out.a12[k] = s(0, 1);
      out.a21[k] = s(1, 0);
      out.a22[k] = s(1, 1);
    }
  out.symmetric = true;
  return out;
}

PrestrainSpec preset_prestrain(const std::string& name, double param) {
  PrestrainSpec spec;
  spec.eps_g = zero_mat();
  spec.kappa_g = zero_mat();
  if (name == "zero") {
    spec.name = "zero";
  } else if (name == "swell") {
    spec.eps_g = const_diag(param, param, param);
    spec.name = "swell(" + std::to_string(param) + ")";
  } else if (name == "uniform-bend") {
    spec.kappa_g = const_diag(param, param, param);
    spec.name = "uniform-bend(" + std::to_string(param) + ")";
  } else if (name == "saddle-bend") {
    spec.kappa_g = const_diag(param, -param, 0.0);
    spec.name = "saddle-bend(" + std::to_string(param) + ")";
  } else if (name == "cylinder-bend") {
    spec.kappa_g = const_diag(param, 0.0, 0.0);
    spec.name = "cylinder-bend(" + std::to_string(param) + ")";
  } else if (name == "incompatible-stretch") {
    spec.eps_g = zero_mat();
    spec.eps_g[0] = Expr::var(1) * Expr::var(1);  // eps_11 = x2^2
    spec.name = "incompatible-stretch";
  } else {
    throw std::invalid_argument("unknown prestrain preset '" + name + "'");
  }
  return spec;
}

std::pair<Mat3, Mat3> eval_prestrain(const PrestrainSpec& spec, double x1, double x2) {
  check_inside(spec, x1, x2);
  return {spec.eps_at(x1, x2), spec.kappa_at(x1, x2)};
}

GrowthEval growth_tensor(const PrestrainSpec& spec, double h, double x1, double x2,
                         double x3_scaled) {
  if (!(h > 0.0)) throw std::invalid_argument("growth_tensor: h must be > 0");
  check_inside(spec, x1, x2);
  double t = h * x3_scaled;  // physical offset fed to the x3 slot
  GrowthEval out;
  out.a_h = Mat3::Identity() + h * h * spec.eps_at(x1, x2) + h * t * spec.kappa_at(x1, x2);
  double det = out.a_h.determinant();
  if (!(std::abs(det) > 1e-14))
    throw std::runtime_error("growth_tensor: singular a^h at h=" + std::to_string(h) +
                             " x'=(" + std::to_string(x1) + "," + std::to_string(x2) +
                             ")");
  out.a_h_inv = out.a_h.inverse();
  out.g_h = out.a_h.transpose() * out.a_h;
  return out;
}

PrestrainSpec load_prestrain_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("prestrain config: ") + e.what());
  }
  if (!j.is_object())
    throw std::invalid_argument("prestrain config: document must be an object");

  static const std::set<std::string> known = {"preset", "params", "eps_g", "kappa_g",
                                             "domain"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw std::invalid_argument("prestrain config: unknown key '" + it.key() + "'");

  PrestrainSpec spec;
  if (j.contains("domain")) {
    const auto& d = j["domain"];
    static const std::set<std::string> dk = {"x_min", "x_max", "y_min", "y_max"};
    for (auto it = d.begin(); it != d.end(); ++it)
      if (!dk.count(it.key()))
        throw std::invalid_argument("prestrain config: unknown domain key '" + it.key() +
                                    "'");
    spec.domain.x_min = d.value("x_min", 0.0);
    spec.domain.x_max = d.value("x_max", 1.0);
    spec.domain.y_min = d.value("y_min", 0.0);
    spec.domain.y_max = d.value("y_max", 1.0);
    if (!(spec.domain.x_max > spec.domain.x_min) ||
        !(spec.domain.y_max > spec.domain.y_min))
      throw std::invalid_argument("prestrain config: empty domain rectangle");
  }

  if (j.contains("preset")) {
    if (j.contains("eps_g") || j.contains("kappa_g"))
      throw std::invalid_argument(
          "prestrain config: 'preset' excludes explicit eps_g/kappa_g");
    double param = 1.0;
    if (j.contains("params")) {
      const auto& p = j["params"];
      static const std::set<std::string> pk = {"alpha", "c"};
      for (auto it = p.begin(); it != p.end(); ++it)
        if (!pk.count(it.key()))
          throw std::invalid_argument("prestrain config: unknown param '" + it.key() +
                                      "'");
      if (p.contains("alpha")) param = p["alpha"].get<double>();
      if (p.contains("c")) param = p["c"].get<double>();
    }
    Rect dom = spec.domain;
    spec = preset_prestrain(j["preset"].get<std::string>(), param);
    spec.domain = dom;
  } else {
    if (j.contains("params"))
      throw std::invalid_argument("prestrain config: 'params' requires 'preset'");
    spec.name = "custom";
    spec.eps_g = j.contains("eps_g") ? parse_matrix(j["eps_g"], "eps_g") : zero_mat();
    spec.kappa_g =
        j.contains("kappa_g") ? parse_matrix(j["kappa_g"], "kappa_g") : zero_mat();
  }

  // validate by evaluation at the domain corners
  const double xs[2] = {spec.domain.x_min, spec.domain.x_max};
  const double ys[2] = {spec.domain.y_min, spec.domain.y_max};
  for (double x1 : xs)
    for (double x2 : ys) {
      Mat3 e = spec.eps_at(x1, x2), kq = spec.kappa_at(x1, x2);
      if (!e.allFinite() || !kq.allFinite())
        throw std::invalid_argument(
            "prestrain config: non-finite field value at domain corner");
    }
  return spec;
}

}  // namespace vkp
