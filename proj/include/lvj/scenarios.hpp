#pragma once

#include <map>
#include <string>
#include <vector>

#include "lvj/model.hpp"

namespace lvj {

/// Parameter overrides for built-in scenarios. Recognised keys: x0, b,
/// A (row-major), sigma (row-major), rates (one per mark).
using Overrides = std::map<std::string, Vec>;

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "logistic1d", "cooperative_blowup", "jump_suppressed", "brownian_suppressed",
      "product_lyapunov"};
  return names;
}

namespace detail {

inline Matrix reshape(const Vec& flat, std::size_t n, const char* what) {
  if (flat.size() != n * n)
    throw ModelError(std::string("override ") + what + " needs " + std::to_string(n * n) +
                     " entries");
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = flat[i * n + j];
  return m;
}

inline PolyJump cubic_jump(Vec gamma) { return PolyJump{std::move(gamma), {0.0, 0.0, 0.0, 1.0}}; }

}  // namespace detail

/// Built-in models. Each description states which hypotheses it is built to
/// satisfy or violate.
inline Model scenario(const std::string& name, const Overrides& overrides = {}) {
  Vec b, x0;
  Matrix A, sigma;
  std::vector<Mark> marks;
  std::string purpose;

  if (name == "logistic1d") {
    b = {1.0};
    A = Matrix{{-1.0}};
    sigma = Matrix(1, 1);
    x0 = {0.5};
    purpose = "noise-free logistic baseline; bounded deterministic flow, X(t) -> 1";
  } else if (name == "cooperative_blowup") {
    b = {1.0};
    A = Matrix{{1.0}};
    sigma = Matrix(1, 1);
    x0 = {1.0};
    purpose =
        "noise-free cooperative growth dx = x(1+x)dt; explodes at t* = ln(1+1/x0), "
        "satisfies no suppression hypothesis";
  } else if (name == "jump_suppressed") {
    b = {1.0};
    A = Matrix{{1.0}};
    sigma = Matrix(1, 1);
    x0 = {1.0};
    marks.push_back({1.0, detail::cubic_jump({1.0})});
    purpose =
        "cooperative_blowup plus polynomial jump kernel H = gamma |x|^3 (alpha = 3); "
        "satisfies (H1) and the negative-order jump drift condition, not (H2)";
  } else if (name == "brownian_suppressed") {
    b = {1.0, 1.0};
    A = Matrix{{1.0, 0.5}, {0.5, 1.0}};
    sigma = Matrix::identity(2);
    x0 = {1.0, 1.0};
    marks.push_back({1.0, ConstantJump{{0.5, -0.3}}});
    purpose =
        "cooperative 2-species drift with sigma = I (satisfies (H2)) and bounded "
        "constant jumps (satisfies (H1)); the jump drift condition fails";
  } else if (name == "product_lyapunov") {
    b = {1.0, 1.0};
    A = Matrix{{-0.5, 0.2}, {0.2, -0.5}};
    sigma = Matrix{{0.2, 0.0}, {0.0, 0.2}};
    x0 = {1.0, 1.0};
    marks.push_back({1.0, detail::cubic_jump({1.0, 0.5})});
    purpose =
        "2-species model with the cubic polynomial kernel; satisfies (H1), the jump "
        "drift condition with alpha = 3 and the product-moment condition for "
        "weights summing below 1";
  } else {
    std::string list;
    for (const auto& s : scenario_names()) list += (list.empty() ? "" : ", ") + s;
    throw ModelError("unknown scenario '" + name + "'; available: " + list);
  }

  const std::size_t n = b.size();
  for (const auto& [key, value] : overrides) {
    if (key == "x0") {
      x0 = value;
    } else if (key == "b") {
      b = value;
    } else if (key == "A") {
      A = detail::reshape(value, n, "A");
    } else if (key == "sigma") {
      sigma = detail::reshape(value, n, "sigma");
    } else if (key == "rates") {
      if (value.size() != marks.size())
        throw ModelError("override rates needs one entry per mark");
      for (std::size_t k = 0; k < marks.size(); ++k) marks[k].rate = value[k];
    } else {
      throw ModelError("unknown override '" + key + "'; allowed: x0, b, A, sigma, rates");
    }
  }
  return make_model(std::move(b), std::move(A), std::move(sigma), JumpKernel(std::move(marks)),
                    std::move(x0), name + ": " + purpose);
}

}  // namespace lvj
