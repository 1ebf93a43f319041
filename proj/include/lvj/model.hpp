#pragma once

// Model of the n-species Lotka-Volterra system with one scalar Brownian
// driver and compensated compound-Poisson jumps:
//
//   dX = diag(X) [ (b + A X) dt + (sigma X) dW + ∫ H(X(t-), u) Ñ(dt, du) ]
//
// The mark space is finite, so the jump part is an exact compound-Poisson
// process with total rate Λ = Σ_k λ_k.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lvj/errors.hpp"
#include "lvj/linalg.hpp"
#include "lvj/rng.hpp"

namespace lvj {

/// Width of the ramp that pins constant jump maps to zero at the origin.
inline constexpr double kConstantRampWidth = 1e-6;

/// H_i(x,u) = c_i * min(1, |x| / eps0): constant away from a tiny ball.
struct ConstantJump {
  Vec c;
};

/// H_i(x,u) = gamma_i * P(|x|) with P a polynomial (coefficients lowest
/// degree first). Degree > 2 with positive leading coefficient gives the
/// canonical explosion-suppressing kernel.
struct PolyJump {
  Vec gamma;
  Vec coeffs;

  double poly(double r) const {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * r + *it;
    return acc;
  }
  std::size_t degree() const {
    std::size_t d = coeffs.size();
    while (d > 0 && coeffs[d - 1] == 0.0) --d;
    return d == 0 ? 0 : d - 1;
  }
};

/// Externally supplied jump map. `eval` must be pure: it receives the state
/// and the mark index and fills `out` (length n).
struct CustomJump {
  using Fn = std::function<void(std::span<const double> x, std::size_t mark,
                                std::span<double> out)>;
  std::string name;
  Vec params;  // kept for serialization of registry-built maps
  Fn eval;
};

using JumpMap = std::variant<ConstantJump, PolyJump, CustomJump>;

struct Mark {
  double rate = 0.0;
  JumpMap map;
};

class JumpKernel {
 public:
  JumpKernel() = default;
  explicit JumpKernel(std::vector<Mark> marks) : marks_(std::move(marks)) {
    for (const auto& m : marks_) {
      if (!(m.rate > 0.0) || !std::isfinite(m.rate))
        throw ModelError("jump rates must be positive and finite");
      total_rate_ += m.rate;
    }
  }

  std::size_t size() const { return marks_.size(); }
  bool empty() const { return marks_.empty(); }
  const Mark& mark(std::size_t k) const { return marks_[k]; }
  const std::vector<Mark>& marks() const { return marks_; }
  double rate(std::size_t k) const { return marks_[k].rate; }
  double total_rate() const { return total_rate_; }

  /// Fills out[i] = H_i(x, u_k). No admissibility check.
  void eval(std::span<const double> x, std::size_t k, std::span<double> out) const {
    const double r = norm(x);
    std::visit(
        [&](const auto& map) {
          using T = std::decay_t<decltype(map)>;
          if constexpr (std::is_same_v<T, ConstantJump>) {
            const double ramp = std::min(1.0, r / kConstantRampWidth);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = map.c[i] * ramp;
          } else if constexpr (std::is_same_v<T, PolyJump>) {
            const double h = map.poly(r);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = map.gamma[i] * h;
          } else {
            map.eval(x, k, out);
          }
        },
        marks_[k].map);
  }

  Vec eval(std::span<const double> x, std::size_t k) const {
    Vec out(x.size());
    eval(x, k, out);
    return out;
  }

  /// Like eval, but throws if any 1 + H_i <= 0 (or is not finite).
  void eval_checked(std::span<const double> x, std::size_t k, std::span<double> out) const {
    eval(x, k, out);
    for (double h : out) {
      if (!(1.0 + h > 0.0) || !std::isfinite(h))
        throw KernelAdmissibilityError("jump map value " + std::to_string(h) +
                                       " at mark " + std::to_string(k) +
                                       " violates H_i > -1");
    }
  }

 private:
  std::vector<Mark> marks_;
  double total_rate_ = 0.0;
};

/// The full SDE description. Immutable once built; safe to share between
/// threads.
struct Model {
  std::size_t n = 0;
  Vec b;
  Matrix A;
  Matrix sigma;
  JumpKernel kernel;
  Vec x0;
  std::string description;
};

namespace detail {

inline void check_vec(const Vec& v, std::size_t n, const char* what) {
  if (v.size() != n)
    throw ModelError(std::string(what) + " has length " + std::to_string(v.size()) +
                     ", expected " + std::to_string(n));
  for (double e : v)
    if (!std::isfinite(e)) throw ModelError(std::string(what) + " has a non-finite entry");
}

inline void check_mat(const Matrix& m, std::size_t n, const char* what) {
  if (m.rows() != n || m.cols() != n)
    throw ModelError(std::string(what) + " must be " + std::to_string(n) + "x" +
                     std::to_string(n));
  for (double e : m.flat())
    if (!std::isfinite(e)) throw ModelError(std::string(what) + " has a non-finite entry");
}

}  // namespace detail

/// Builds a model, enforcing structural consistency. A non-positive x0 is
/// not structural: validate_model reports it instead.
inline Model make_model(Vec b, Matrix A, Matrix sigma, JumpKernel kernel, Vec x0,
                        std::string description = {}) {
  const std::size_t n = b.size();
  if (n == 0) throw ModelError("model needs at least one species");
  detail::check_vec(b, n, "b");
  detail::check_mat(A, n, "A");
  detail::check_mat(sigma, n, "sigma");
  detail::check_vec(x0, n, "x0");
  for (std::size_t k = 0; k < kernel.size(); ++k) {
    const auto& map = kernel.mark(k).map;
    if (const auto* c = std::get_if<ConstantJump>(&map)) {
      detail::check_vec(c->c, n, "constant jump c");
    } else if (const auto* p = std::get_if<PolyJump>(&map)) {
      detail::check_vec(p->gamma, n, "poly jump gamma");
      if (p->coeffs.empty()) throw ModelError("poly jump needs coefficients");
    } else if (const auto* f = std::get_if<CustomJump>(&map)) {
      if (!f->eval) throw ModelError("custom jump map has no evaluator");
    }
  }
  return Model{n, std::move(b), std::move(A), std::move(sigma), std::move(kernel),
               std::move(x0), std::move(description)};
}

/// Sample points for hypothesis probing: log-spaced radii times seeded
/// random directions in the positive orthant.
struct ProbeGrid {
  std::size_t radii = 64;
  std::size_t directions = 8;
  double r_min = 1e-3;
  double r_max = 1e3;
  std::uint64_t seed = 20240917;
};

/// Unit vectors with positive components drawn from a seeded stream.
inline std::vector<Vec> positive_directions(std::size_t n, std::size_t count,
                                            std::uint64_t seed) {
  RngStream rng(seed, 0x6469726563ull);
  std::vector<Vec> dirs;
  dirs.reserve(count);
  for (std::size_t d = 0; d < count; ++d) {
    Vec v(n);
    double len = 0.0;
    do {
      for (auto& e : v) e = std::abs(rng.normal()) + 1e-3;
      len = norm(v);
    } while (!(len > 0.0));
    for (auto& e : v) e /= len;
    dirs.push_back(std::move(v));
  }
  return dirs;
}

inline Vec log_spaced(double lo, double hi, std::size_t count) {
  Vec r(count);
  if (count == 1) {
    r[0] = lo;
    return r;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    r[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  r.front() = lo;
  r.back() = hi;
  return r;
}

inline std::vector<Vec> probe_points(std::size_t n, const ProbeGrid& grid) {
  const auto dirs = positive_directions(n, grid.directions, grid.seed);
  const auto radii = log_spaced(grid.r_min, grid.r_max, grid.radii);
  std::vector<Vec> pts;
  pts.reserve(dirs.size() * radii.size());
  for (double r : radii)
    for (const auto& d : dirs) {
      Vec x(n);
      for (std::size_t i = 0; i < n; ++i) x[i] = r * d[i];
      pts.push_back(std::move(x));
    }
  return pts;
}

struct H1Violation {
  Vec x;
  std::size_t mark = 0;
  std::size_t component = 0;
  double value = 0.0;
};

struct LipschitzProbe {
  double radius = 0.0;
  double constant = 0.0;  // max Σ_k λ_k |H(x)-H(y)|^2 / |x-y|^2 over pairs in the ball
};

struct ValidationReport {
  bool h2_holds = false;
  bool h1_pointwise_ok = false;
  bool zero_at_origin = false;
  bool x0_positive = false;
  std::vector<H1Violation> h1_violations;
  std::vector<LipschitzProbe> lipschitz_probe;
  std::size_t points_probed = 0;
  std::string notes;
};

/// (H2): sigma_ii > 0 and sigma_ij >= 0 off the diagonal. Exact, no sampling.
inline bool h2_holds(const Matrix& sigma) {
  for (std::size_t i = 0; i < sigma.rows(); ++i)
    for (std::size_t j = 0; j < sigma.cols(); ++j) {
      const double s = sigma(i, j);
      if (i == j ? !(s > 0.0) : !(s >= 0.0)) return false;
    }
  return true;
}

inline ValidationReport validate_model(const Model& model, const ProbeGrid& grid = {}) {
  ValidationReport rep;
  const std::size_t n = model.n;
  const auto& kernel = model.kernel;

  rep.h2_holds = h2_holds(model.sigma);
  rep.x0_positive = all_positive(model.x0);
  if (!rep.x0_positive) rep.notes += "x0 has a non-positive component; ";

  Vec h(n);
  rep.zero_at_origin = true;
  const Vec origin(n, 0.0);
  for (std::size_t k = 0; k < kernel.size(); ++k) {
    kernel.eval(origin, k, h);
    for (double v : h)
      if (v != 0.0) rep.zero_at_origin = false;
  }
  if (!rep.zero_at_origin) rep.notes += "H(0,u) != 0 for some mark; ";

  const auto pts = probe_points(n, grid);
  rep.points_probed = pts.size();
  for (const auto& x : pts)
    for (std::size_t k = 0; k < kernel.size(); ++k) {
      kernel.eval(x, k, h);
      for (std::size_t i = 0; i < n; ++i)
        if (!(h[i] > -1.0) || !std::isfinite(h[i]))
          rep.h1_violations.push_back({x, k, i, h[i]});
    }
  rep.h1_pointwise_ok = rep.h1_violations.empty() && rep.zero_at_origin;
  if (!rep.h1_violations.empty())
    rep.notes += std::to_string(rep.h1_violations.size()) + " probe values with H_i <= -1; ";

  // Finite-difference Lipschitz ratios on nested balls. Each probe point is
  // paired with a relative perturbation along a second seeded direction.
  const auto perturb = positive_directions(n, grid.directions, grid.seed + 1);
  const double radii_balls[] = {1.0, 10.0, 100.0, 1000.0};
  std::vector<std::pair<double, double>> ratios;  // (max(|x|,|y|), ratio)
  Vec hy(n);
  for (std::size_t p = 0; p < pts.size(); ++p) {
    const auto& x = pts[p];
    const auto& d = perturb[p % perturb.size()];
    const double step = 1e-4 * std::max(norm(x), 1e-3);
    Vec y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + step * (d[i] - 0.5);
    Vec diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = x[i] - y[i];
    const double dxy2 = dot(diff, diff);
    if (!(dxy2 > 0.0)) continue;
    double acc = 0.0;
    for (std::size_t k = 0; k < kernel.size(); ++k) {
      kernel.eval(x, k, h);
      kernel.eval(y, k, hy);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (h[i] - hy[i]) * (h[i] - hy[i]);
      acc += kernel.rate(k) * s;
    }
    ratios.emplace_back(std::max(norm(x), norm(y)), acc / dxy2);
  }
  for (double R : radii_balls) {
    double best = 0.0;
    for (const auto& [rad, ratio] : ratios)
      if (rad <= R && std::isfinite(ratio)) best = std::max(best, ratio);
    rep.lipschitz_probe.push_back({R, best});
  }
  if (rep.h2_holds) rep.notes += "(H2) holds; ";
  return rep;
}

}  // namespace lvj
