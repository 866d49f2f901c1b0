#pragma once

// JSON for domain specs and kernel models, and the experiment report with
// its CSV/JSON emitters.

#include "invmetric/bergman.hpp"

#include <json.hpp>

#include <cstdio>
#include <set>
#include <sstream>

namespace invmetric {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Strict field access

inline void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::config, where + ": expected an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw Error(ErrorCode::config, where + ": unknown key '" + k + "'");
}

inline const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw Error(ErrorCode::config, where + ": missing key '" + key + "'");
  return obj.at(key);
}

template <class T>
T read(const json& obj, const std::string& key, const std::string& where) {
  try {
    return require(obj, key, where).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config, where + "." + key + ": " + e.what());
  }
}

template <class T>
T read_or(const json& obj, const std::string& key, T fallback, const std::string& where) {
  return obj.contains(key) ? read<T>(obj, key, where) : fallback;
}

// Complex numbers are [re, im] pairs or plain reals.
inline cplx complex_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  throw Error(ErrorCode::config, where + ": expected a number or [re, im]");
}

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline CVec point_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::config, where + ": expected a non-empty array");
  CVec z(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) z[static_cast<Eigen::Index>(i)] = complex_from_json(j[i], where);
  return z;
}

inline json point_to_json(const CVec& z) {
  json a = json::array();
  for (Eigen::Index i = 0; i < z.size(); ++i) a.push_back(complex_to_json(z[i]));
  return a;
}

inline CMat matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw Error(ErrorCode::config, where + ": expected rows");
  const auto r = static_cast<Eigen::Index>(j.size()), c = static_cast<Eigen::Index>(j[0].size());
  CMat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) throw Error(ErrorCode::config, where + ": ragged rows");
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = complex_from_json(row[static_cast<std::size_t>(k)], where);
  }
  return m;
}

inline json matrix_to_json(const CMat& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_to_json(m(i, k)));
    a.push_back(row);
  }
  return a;
}

// ---------------------------------------------------------------------------
// Domain specs. Discriminator "variant": ball | polydisk | ellipsoid | planar |
// convex_body | product | image.

inline HoloMap map_from_json(const json& j, int dim, const std::string& where) {
  const auto kind = read<std::string>(j, "kind", where);
  if (kind == "identity") {
    check_keys(j, {"kind"}, where);
    return identity_map(dim);
  }
  if (kind == "affine") {
    check_keys(j, {"kind", "translation", "linear"}, where);
    return affine_map(point_from_json(require(j, "translation", where), where + ".translation"),
                      matrix_from_json(require(j, "linear", where), where + ".linear"));
  }
  if (kind == "omega_psi") {
    check_keys(j, {"kind"}, where);
    return omega_psi_map();
  }
  throw Error(ErrorCode::config, where + ": unknown map kind '" + kind + "'");
}

inline Domain domain_from_json(const json& j, const std::string& where = "domain") {
  const auto variant = read<std::string>(j, "variant", where);
  if (variant == "ball") {
    check_keys(j, {"variant", "dim", "radius", "center"}, where);
    const int dim = read<int>(j, "dim", where);
    std::optional<CVec> c;
    if (j.contains("center")) c = point_from_json(j.at("center"), where + ".center");
    return make_ball(dim, read_or<double>(j, "radius", 1.0, where), c);
  }
  if (variant == "polydisk") {
    check_keys(j, {"variant", "radii"}, where);
    return make_polydisk(read<std::vector<double>>(j, "radii", where));
  }
  if (variant == "ellipsoid") {
    check_keys(j, {"variant", "weights"}, where);
    return make_ellipsoid(read<std::vector<double>>(j, "weights", where));
  }
  if (variant == "planar") {
    check_keys(j, {"variant", "coeffs"}, where);
    const auto& a = require(j, "coeffs", where);
    if (!a.is_array()) throw Error(ErrorCode::config, where + ".coeffs: expected an array");
    std::vector<cplx> c;
    for (const auto& x : a) c.push_back(complex_from_json(x, where + ".coeffs"));
    return make_planar(std::move(c));
  }
  if (variant == "convex_body") {
    check_keys(j, {"variant", "kind", "p", "scales"}, where);
    const auto kind = read<std::string>(j, "kind", where);
    if (kind != "complex_lp") throw Error(ErrorCode::config, where + ": unknown convex body kind '" + kind + "'");
    return make_complex_lp_body(read<double>(j, "p", where), read<std::vector<double>>(j, "scales", where));
  }
  if (variant == "product") {
    check_keys(j, {"variant", "left", "right"}, where);
    return make_product(domain_from_json(require(j, "left", where), where + ".left"),
                        domain_from_json(require(j, "right", where), where + ".right"));
  }
  if (variant == "image") {
    check_keys(j, {"variant", "base", "map"}, where);
    Domain base = domain_from_json(require(j, "base", where), where + ".base");
    return make_image(base, map_from_json(require(j, "map", where), base.dim(), where + ".map"));
  }
  throw Error(ErrorCode::config, where + ": unknown variant '" + variant + "'");
}

inline json domain_to_json(const Domain& spec) {
  return std::visit(
      [&](const auto& v) -> json {
        using V = std::decay_t<decltype(v)>;
        json j;
        if constexpr (std::is_same_v<V, Ball>) {
          j = {{"variant", "ball"}, {"dim", v.dim}, {"radius", v.radius}};
          if (v.center.size() && v.center.norm() > 0) j["center"] = point_to_json(v.center);
        } else if constexpr (std::is_same_v<V, Polydisk>) {
          j = {{"variant", "polydisk"}, {"radii", v.radii}};
        } else if constexpr (std::is_same_v<V, Ellipsoid>) {
          j = {{"variant", "ellipsoid"}, {"weights", v.weights}};
        } else if constexpr (std::is_same_v<V, PlanarRiemann>) {
          json c = json::array();
          for (cplx a : v.coeffs) c.push_back(complex_to_json(a));
          j = {{"variant", "planar"}, {"coeffs", c}};
        } else if constexpr (std::is_same_v<V, ConvexBody>) {
          if (v.kind != "complex_lp") throw Error(ErrorCode::unsupported_operation, "convex body without serialization tag");
          j = {{"variant", "convex_body"},
               {"kind", v.kind},
               {"p", v.params.at(0)},
               {"scales", std::vector<double>(v.params.begin() + 1, v.params.end())}};
        } else if constexpr (std::is_same_v<V, Product>) {
          j = {{"variant", "product"}, {"left", domain_to_json(v.left)}, {"right", domain_to_json(v.right)}};
        } else {
          json m;
          if (v.map.name == "identity") m = {{"kind", "identity"}};
          else if (v.map.affine) m = {{"kind", "affine"}, {"translation", point_to_json(v.map.translation)}, {"linear", matrix_to_json(v.map.linear)}};
          else if (v.map.name == "omega_psi") m = {{"kind", "omega_psi"}};
          else throw Error(ErrorCode::unsupported_operation, "map '" + v.map.name + "' has no serialization");
          j = {{"variant", "image"}, {"base", domain_to_json(v.base)}, {"map", m}};
        }
        return j;
      },
      spec.node());
}

// ---------------------------------------------------------------------------
// Kernel models

inline json kernel_model_to_json(const KernelModel& km) {
  json coeffs = json::array();
  for (Eigen::Index i = 0; i < km.coeffs.rows(); ++i)
    for (Eigen::Index k = 0; k < km.coeffs.cols(); ++k) coeffs.push_back(complex_to_json(km.coeffs(i, k)));
  return {{"schema", "invmetric.kernel-model/1"},
          {"dim", km.dim},
          {"degree", km.degree},
          {"tensor", km.tensor},
          {"indices", km.indices},
          {"rows", km.coeffs.rows()},
          {"cols", km.coeffs.cols()},
          {"coefficients", coeffs},
          {"metadata",
           {{"nodes", km.nodes}, {"seed", km.seed}, {"condition", km.condition}, {"jitter", km.jitter}, {"quadrature", km.quadrature}}}};
}

inline KernelModel kernel_model_from_json(const json& j) {
  const std::string w = "kernel-model";
  check_keys(j, {"schema", "dim", "degree", "tensor", "indices", "rows", "cols", "coefficients", "metadata"}, w);
  if (read<std::string>(j, "schema", w) != "invmetric.kernel-model/1") throw Error(ErrorCode::config, w + ": unknown schema");
  KernelModel km;
  km.dim = read<int>(j, "dim", w);
  km.degree = read<int>(j, "degree", w);
  km.tensor = read<bool>(j, "tensor", w);
  km.indices = read<std::vector<std::vector<int>>>(j, "indices", w);
  const auto r = read<Eigen::Index>(j, "rows", w), c = read<Eigen::Index>(j, "cols", w);
  const auto& a = require(j, "coefficients", w);
  if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != r * c) throw Error(ErrorCode::config, w + ": coefficient count");
  if (static_cast<Eigen::Index>(km.indices.size()) != c) throw Error(ErrorCode::config, w + ": index count");
  CMat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = complex_from_json(a[static_cast<std::size_t>(i * c + k)], w);
  km.set_coeffs(std::move(m));
  const auto& md = require(j, "metadata", w);
  check_keys(md, {"nodes", "seed", "condition", "jitter", "quadrature"}, w + ".metadata");
  km.nodes = read<std::size_t>(md, "nodes", w);
  km.seed = read<std::uint64_t>(md, "seed", w);
  km.condition = read<double>(md, "condition", w);
  km.jitter = read<double>(md, "jitter", w);
  km.quadrature = read<std::string>(md, "quadrature", w);
  return km;
}

// ---------------------------------------------------------------------------
// Reports

inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string fmt_point(const CVec& z) {
  std::string s;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (i) s += ' ';
    s += fmt_double(z[i].real());
    s += z[i].imag() < 0 || std::signbit(z[i].imag()) ? "" : "+";
    s += fmt_double(z[i].imag()) + "i";
  }
  return s;
}

using Cell = std::variant<double, std::string>;

struct Assertion {
  std::string name;
  double measured = 0.0;
  std::string relation;  // "<=", ">=", "in", "==", "true"
  double bound = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
};

struct ExperimentReport {
  std::string experiment;
  std::string schema = "invmetric.report/1";
  std::vector<std::string> columns;
  struct Row {
    std::vector<Cell> cells;
    std::string status = "ok";
  };
  std::vector<Row> rows;
  std::vector<Assertion> assertions;
  json extra = json::object();

  // Rows with a non-finite number are kept, blanked, and tagged.
  void add_row(std::vector<Cell> cells, std::string status = "ok") {
    if (cells.size() != columns.size()) throw Error(ErrorCode::invalid_argument, "report row width mismatch");
    for (auto& c : cells)
      if (const double* d = std::get_if<double>(&c); d && !std::isfinite(*d)) {
        status = "non-finite";
        c = std::string();
      }
    rows.push_back({std::move(cells), std::move(status)});
  }

  Assertion& check(std::string name, double measured, const std::string& relation, double bound, double tol = 0.0,
                   std::string detail = {}) {
    Assertion a{std::move(name), measured, relation, bound, tol, false, std::move(detail)};
    if (relation == "<=") a.passed = measured <= bound + tol;
    else if (relation == ">=") a.passed = measured >= bound - tol;
    else if (relation == "==") a.passed = std::abs(measured - bound) <= tol;
    else throw Error(ErrorCode::invalid_argument, "unknown relation " + relation);
    if (!std::isfinite(a.measured)) a.passed = false;
    assertions.push_back(std::move(a));
    return assertions.back();
  }

  Assertion& check_true(std::string name, bool ok, std::string detail = {}) {
    assertions.push_back({std::move(name), ok ? 1.0 : 0.0, "true", 1.0, 0.0, ok, std::move(detail)});
    return assertions.back();
  }

  bool passed() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
  }

  std::string to_csv() const {
    std::ostringstream os;
    for (const auto& c : columns) os << c << ',';
    os << "status\n";
    for (const auto& r : rows) {
      for (const auto& c : r.cells) {
        if (const double* d = std::get_if<double>(&c)) os << fmt_double(*d);
        else os << std::get<std::string>(c);
        os << ',';
      }
      os << r.status << '\n';
    }
    return os.str();
  }

  std::string assertions_csv() const {
    std::ostringstream os;
    os << "assertion,measured,relation,bound,tolerance,passed\n";
    for (const auto& a : assertions)
      os << a.name << ',' << fmt_double(a.measured) << ',' << a.relation << ',' << fmt_double(a.bound) << ','
         << fmt_double(a.tolerance) << ',' << (a.passed ? "pass" : "fail") << '\n';
    return os.str();
  }

  json to_json() const {
    json rj = json::array();
    for (const auto& r : rows) {
      json o = json::object();
      for (std::size_t i = 0; i < columns.size(); ++i) {
        if (const double* d = std::get_if<double>(&r.cells[i])) o[columns[i]] = *d;
        else o[columns[i]] = std::get<std::string>(r.cells[i]);
      }
      o["status"] = r.status;
      rj.push_back(o);
    }
    json aj = json::array();
    for (const auto& a : assertions)
      aj.push_back({{"name", a.name},
                    {"measured", a.measured},
                    {"relation", a.relation},
                    {"bound", a.bound},
                    {"tolerance", a.tolerance},
                    {"passed", a.passed},
                    {"detail", a.detail}});
    return {{"schema", schema},
            {"experiment", experiment},
            {"columns", columns},
            {"rows", rj},
            {"assertions", aj},
            {"summary", {{"passed", passed()}, {"assertions", assertions.size()}, {"rows", rows.size()}}},
            {"extra", extra}};
  }
};

}  // namespace invmetric
