#ifndef CONVEXINEQ_CONFIG_HPP
#define CONVEXINEQ_CONFIG_HPP

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "convexineq/errors.hpp"
#include "convexineq/fields.hpp"
#include "convexineq/integrate.hpp"
#include "convexineq/phi_functions.hpp"
#include "convexineq/potentials.hpp"

namespace convexineq::config {

using json = nlohmann::json;

/// Line and column of a byte offset in `text`.
inline std::string locate(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline json parse(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::ostringstream os;
    os << source << ": malformed JSON at " << locate(text, e.byte) << ": " << e.what();
    throw ConfigError(os.str());
  }
}

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
  throw ConfigError("field " + path + ": " + msg);
}

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(path + "." + key, "missing");
  return *it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number, got " + j.dump());
  return j.get<double>();
}

inline double number_or(const json& j, const std::string& key, double dflt, const std::string& path) {
  if (!j.contains(key)) return dflt;
  return number(j.at(key), path + "." + key);
}

inline std::int64_t integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer, got " + j.dump());
  return j.get<std::int64_t>();
}

inline std::int64_t integer_or(const json& j, const std::string& key, std::int64_t dflt, const std::string& path) {
  if (!j.contains(key)) return dflt;
  return integer(j.at(key), path + "." + key);
}

inline std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string, got " + j.dump());
  return j.get<std::string>();
}

inline std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

inline Vec vector(const json& j, int n, const std::string& path) {
  const auto v = numbers(j, path);
  if (static_cast<int>(v.size()) != n) fail(path, "expected " + std::to_string(n) + " entries");
  return Eigen::Map<const Vec>(v.data(), n);
}

inline Mat matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of rows");
  const int n = static_cast<int>(j.size());
  Mat a(n, n);
  for (int i = 0; i < n; ++i) {
    a.row(i) = vector(j[i], n, path + "[" + std::to_string(i) + "]").transpose();
  }
  return a;
}

/// "grid" | "mc".
inline Method method(const json& j, const std::string& path) {
  const std::string s = string(j, path);
  if (s == "grid") return Method::grid;
  if (s == "mc") return Method::mc;
  fail(path, "expected \"grid\" or \"mc\", got \"" + s + "\"");
}

/// Integration block: top-level "method", "grid" and "mc" objects.
inline IntegrationOptions integration(const json& root) {
  IntegrationOptions o;
  if (root.contains("method")) o.method = method(root.at("method"), "method");
  if (root.contains("grid")) {
    const json& g = root.at("grid");
    if (!g.is_object()) fail("grid", "expected an object");
    if (g.contains("R") && !(g.at("R").is_string() && g.at("R") == "auto")) {
      o.grid.radius = number(g.at("R"), "grid.R");
      if (!(*o.grid.radius > 0)) fail("grid.R", "must be positive");
    }
    o.grid.points_per_dim = static_cast<int>(integer_or(g, "points_per_dim", 0, "grid"));
    if (o.grid.points_per_dim < 0) fail("grid.points_per_dim", "must be nonnegative");
  }
  if (root.contains("mc")) {
    const json& m = root.at("mc");
    if (!m.is_object()) fail("mc", "expected an object");
    o.mc.samples = integer_or(m, "samples", o.mc.samples, "mc");
    o.mc.burn_in = integer_or(m, "burn_in", o.mc.burn_in, "mc");
    o.mc.stride = static_cast<int>(integer_or(m, "stride", o.mc.stride, "mc"));
    o.mc.seed = static_cast<std::uint64_t>(integer_or(m, "seed", static_cast<std::int64_t>(o.mc.seed), "mc"));
    if (o.mc.samples <= 0) fail("mc.samples", "must be positive");
  }
  if (root.contains("seed")) o.mc.seed = static_cast<std::uint64_t>(integer(root.at("seed"), "seed"));
  return o;
}

/// {"psi": "gaussian", "n": int, "rho": float}.
inline ConvexPotential psi(const json& j, int n, const std::string& path) {
  const std::string kind = j.contains("psi") ? string(j.at("psi"), path + ".psi") : "gaussian";
  if (kind != "gaussian") fail(path + ".psi", "only \"gaussian\" is supported");
  const double rho = number_or(j, "rho", 1.0, path);
  if (!(rho > 0)) fail(path + ".rho", "must be positive");
  return gaussian_psi(n, rho);
}

/// { "kind": "cauchy" | "quadratic" | "limit_family", "n", "beta", "params" }.
inline ConvexMeasure measure(const json& j, NormalizationMode mode, const std::string& path = "measure") {
  const std::string kind = string(require(j, "kind", path), path + ".kind");
  const int n = static_cast<int>(integer(require(j, "n", path), path + ".n"));
  if (n < 1) fail(path + ".n", "must be positive");
  const double beta = number(require(j, "beta", path), path + ".beta");
  const json params = j.contains("params") ? j.at("params") : json::object();
  if (!params.is_object()) fail(path + ".params", "expected an object");
  if (kind == "cauchy") return make_cauchy(n, beta, mode);
  if (kind == "quadratic") {
    const Mat a = params.contains("A") ? matrix(params.at("A"), path + ".params.A") : Mat::Identity(n, n);
    if (a.rows() != n) fail(path + ".params.A", "must be n x n");
    return make_quadratic(a, beta, number_or(params, "offset", 1.0, path + ".params"), mode);
  }
  if (kind == "limit_family") return make_limit_family(psi(params, n, path + ".params"), beta, mode);
  fail(path + ".kind", "expected \"cauchy\", \"quadratic\" or \"limit_family\", got \"" + kind + "\"");
}

/// "square" | "xlogx" | {"power": p}.
inline PhiFunction phi(const json& j, const std::string& path = "phi") {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "square") return phi_square();
    if (s == "xlogx") return phi_xlogx();
    fail(path, "expected \"square\", \"xlogx\" or {\"power\": p}, got \"" + s + "\"");
  }
  if (j.is_object() && j.contains("power")) {
    try {
      return phi_power(number(j.at("power"), path + ".power"));
    } catch (const ParameterError& e) {
      fail(path + ".power", e.what());
    }
  }
  fail(path, "expected \"square\", \"xlogx\" or {\"power\": p}");
}

/// {"field": kind, "params": {...}, "range": [a, b]}.
inline ScalarField field(const json& j, int n, const std::string& path) {
  const std::string kind = string(require(j, "field", path), path + ".field");
  const json p = j.contains("params") ? j.at("params") : json::object();
  if (!p.is_object()) fail(path + ".params", "expected an object");
  const std::string pp = path + ".params";
  const int axis = static_cast<int>(integer_or(p, "axis", 0, pp));
  if (axis < 0 || axis >= n) fail(pp + ".axis", "out of range for n = " + std::to_string(n));
  ScalarField f;
  if (kind == "coordinate") {
    f = fields::coordinate(n, axis);
  } else if (kind == "linear") {
    const Vec a = p.contains("a") ? vector(p.at("a"), n, pp + ".a") : Vec(Vec::Unit(n, 0));
    f = fields::linear(a, number_or(p, "b", 0.0, pp));
  } else if (kind == "constant") {
    f = fields::constant(n, number_or(p, "value", 1.0, pp));
  } else if (kind == "gaussian_bump") {
    const Vec c = p.contains("center") ? vector(p.at("center"), n, pp + ".center") : Vec(Vec::Zero(n));
    const double width = number_or(p, "width", 1.0, pp);
    if (!(width > 0)) fail(pp + ".width", "must be positive");
    f = fields::gaussian_bump(c, number_or(p, "base", 1.0, pp), number_or(p, "amplitude", 0.2, pp), width);
  } else if (kind == "polynomial") {
    const auto coeffs = p.contains("coeffs") ? numbers(p.at("coeffs"), pp + ".coeffs") : std::vector<double>{0, 1};
    f = fields::polynomial(n, axis, coeffs);
  } else if (kind == "tanh") {
    const double scale = number_or(p, "scale", 1.0, pp);
    if (!(scale > 0)) fail(pp + ".scale", "must be positive");
    f = fields::tanh_ramp(n, axis, number_or(p, "base", 1.0, pp), number_or(p, "amplitude", 0.1, pp), scale);
  } else if (kind == "sine") {
    f = fields::sine(n, axis, number_or(p, "base", 1.0, pp), number_or(p, "amplitude", 0.2, pp),
                     number_or(p, "frequency", 1.0, pp));
  } else {
    fail(path + ".field",
         "expected coordinate, linear, constant, gaussian_bump, polynomial, tanh or sine, got \"" + kind + "\"");
  }
  if (j.contains("range")) {
    const auto r = numbers(j.at("range"), path + ".range");
    if (r.size() != 2 || !(r[0] <= r[1])) fail(path + ".range", "expected [lo, hi] with lo <= hi");
    f.range = {r[0], r[1]};
  }
  return f;
}

/// Times as an explicit array or {"t_max", "count"} (uniform from 0).
inline std::vector<double> times(const json& j, const std::string& path) {
  if (j.is_array()) {
    auto t = numbers(j, path);
    if (t.empty()) fail(path, "must not be empty");
    return t;
  }
  const double tmax = number(require(j, "t_max", path), path + ".t_max");
  const auto count = integer(require(j, "count", path), path + ".count");
  if (!(tmax > 0) || count < 2) fail(path, "needs t_max > 0 and count >= 2");
  std::vector<double> t;
  for (std::int64_t i = 0; i < count; ++i) t.push_back(tmax * double(i) / double(count - 1));
  return t;
}

/// Nonempty list of numbers.
inline std::vector<double> sweep(const json& j, const std::string& path) {
  auto v = numbers(j, path);
  if (v.empty()) fail(path, "sweep list must not be empty");
  return v;
}

}  // namespace convexineq::config

#endif  // CONVEXINEQ_CONFIG_HPP
