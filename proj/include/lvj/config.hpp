#pragma once

// JSON model documents:
//
//   { "n": 2, "b": [..], "A": [[..],[..]], "sigma": [[..],[..]], "x0": [..],
//     "jumps": [ {"rate": 1, "kind": "constant", "c": [..]},
//                {"rate": 1, "kind": "poly", "gamma": [..], "poly_coeffs": [..]},
//                {"rate": 1, "kind": "custom", "name": "saturating", "c": [..]} ] }
//
// Unknown keys are rejected at every level.

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lvj/errors.hpp"
#include "lvj/model.hpp"

namespace lvj {

using json = nlohmann::json;

/// Named custom jump maps that a config document can refer to.
inline CustomJump make_custom_jump(const std::string& name, const Vec& c) {
  if (name == "saturating") {
    // H_i = c_i |x| / (1 + |x|): bounded, zero at the origin, > -1 when c_i > -1.
    return CustomJump{name, c, [c](std::span<const double> x, std::size_t, std::span<double> out) {
                        const double r = norm(x);
                        const double s = r / (1.0 + r);
                        for (std::size_t i = 0; i < out.size(); ++i) out[i] = c[i] * s;
                      }};
  }
  throw ConfigError("unknown custom jump map '" + name + "' (available: saturating)");
}

namespace detail {

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                           const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

inline const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing key '" + std::string(key) + "' in " + where);
  return obj.at(key);
}

inline Vec to_vec(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array");
  Vec v;
  for (const auto& e : j) {
    if (!e.is_number()) throw ConfigError(what + " must contain numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

inline Matrix to_matrix(const json& j, std::size_t n, const std::string& what) {
  if (!j.is_array() || j.size() != n) throw ConfigError(what + " must have " + std::to_string(n) + " rows");
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec row = to_vec(j[i], what + " row");
    if (row.size() != n) throw ConfigError(what + " row " + std::to_string(i) + " has wrong length");
    for (std::size_t k = 0; k < n; ++k) m(i, k) = row[k];
  }
  return m;
}

inline json vec_json(std::span<const double> v) { return json(std::vector<double>(v.begin(), v.end())); }

}  // namespace detail

inline Model model_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("model document must be an object");
  detail::reject_unknown(doc, {"n", "b", "A", "sigma", "x0", "jumps"}, "model");
  const json& jn = detail::require(doc, "n", "model");
  if (!jn.is_number_integer() || jn.get<long long>() <= 0) throw ConfigError("n must be a positive integer");
  const auto n = static_cast<std::size_t>(jn.get<long long>());

  Vec b = detail::to_vec(detail::require(doc, "b", "model"), "b");
  Vec x0 = detail::to_vec(detail::require(doc, "x0", "model"), "x0");
  if (b.size() != n) throw ConfigError("b must have length n");
  if (x0.size() != n) throw ConfigError("x0 must have length n");
  Matrix A = detail::to_matrix(detail::require(doc, "A", "model"), n, "A");
  Matrix sigma = detail::to_matrix(detail::require(doc, "sigma", "model"), n, "sigma");

  std::vector<Mark> marks;
  if (doc.contains("jumps")) {
    const json& jumps = doc.at("jumps");
    if (!jumps.is_array()) throw ConfigError("jumps must be an array");
    for (std::size_t k = 0; k < jumps.size(); ++k) {
      const json& j = jumps[k];
      const std::string where = "jumps[" + std::to_string(k) + "]";
      if (!j.is_object()) throw ConfigError(where + " must be an object");
      const json& kind_j = detail::require(j, "kind", where);
      if (!kind_j.is_string()) throw ConfigError(where + ".kind must be a string");
      const auto kind = kind_j.get<std::string>();
      const json& rate_j = detail::require(j, "rate", where);
      if (!rate_j.is_number()) throw ConfigError(where + ".rate must be a number");
      const double rate = rate_j.get<double>();
      if (kind == "constant") {
        detail::reject_unknown(j, {"rate", "kind", "c"}, where);
        Vec c = detail::to_vec(detail::require(j, "c", where), where + ".c");
        if (c.size() != n) throw ConfigError(where + ".c must have length n");
        marks.push_back({rate, ConstantJump{std::move(c)}});
      } else if (kind == "poly") {
        detail::reject_unknown(j, {"rate", "kind", "gamma", "poly_coeffs"}, where);
        Vec gamma = detail::to_vec(detail::require(j, "gamma", where), where + ".gamma");
        Vec coeffs = detail::to_vec(detail::require(j, "poly_coeffs", where), where + ".poly_coeffs");
        if (gamma.size() != n) throw ConfigError(where + ".gamma must have length n");
        if (coeffs.empty()) throw ConfigError(where + ".poly_coeffs must be non-empty");
        marks.push_back({rate, PolyJump{std::move(gamma), std::move(coeffs)}});
      } else if (kind == "custom") {
        detail::reject_unknown(j, {"rate", "kind", "name", "c"}, where);
        const json& name = detail::require(j, "name", where);
        if (!name.is_string()) throw ConfigError(where + ".name must be a string");
        Vec c = detail::to_vec(detail::require(j, "c", where), where + ".c");
        if (c.size() != n) throw ConfigError(where + ".c must have length n");
        marks.push_back({rate, make_custom_jump(name.get<std::string>(), c)});
      } else {
        throw ConfigError(where + ".kind must be constant, poly or custom");
      }
    }
  }
  try {
    return make_model(std::move(b), std::move(A), std::move(sigma), JumpKernel(std::move(marks)),
                      std::move(x0), "config");
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
}

inline Model load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(doc);
}

/// Inverse of model_from_json. Custom maps serialize by registry name.
inline json model_to_json(const Model& m) {
  json doc;
  doc["n"] = m.n;
  doc["b"] = detail::vec_json(m.b);
  json A = json::array(), S = json::array();
  for (std::size_t i = 0; i < m.n; ++i) {
    A.push_back(detail::vec_json(m.A.row(i)));
    S.push_back(detail::vec_json(m.sigma.row(i)));
  }
  doc["A"] = A;
  doc["sigma"] = S;
  doc["x0"] = detail::vec_json(m.x0);
  json jumps = json::array();
  for (const auto& mk : m.kernel.marks()) {
    json j;
    j["rate"] = mk.rate;
    if (const auto* c = std::get_if<ConstantJump>(&mk.map)) {
      j["kind"] = "constant";
      j["c"] = detail::vec_json(c->c);
    } else if (const auto* p = std::get_if<PolyJump>(&mk.map)) {
      j["kind"] = "poly";
      j["gamma"] = detail::vec_json(p->gamma);
      j["poly_coeffs"] = detail::vec_json(p->coeffs);
    } else {
      const auto& f = std::get<CustomJump>(mk.map);
      j["kind"] = "custom";
      j["name"] = f.name;
      j["c"] = detail::vec_json(f.params);
    }
    jumps.push_back(j);
  }
  doc["jumps"] = jumps;
  return doc;
}

}  // namespace lvj
