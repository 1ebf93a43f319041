#pragma once

// Monte Carlo verification battery: one row per existence / moment /
// pathwise result, each pairing a hypothesis check with an empirical check
// of the conclusion at desk scale.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "lvj/lyapunov.hpp"
#include "lvj/scenarios.hpp"
#include "lvj/simulate.hpp"
#include "lvj/stats.hpp"

namespace lvj {

struct BatteryOptions {
  double scale = 1.0;  // multiplies every path count (use < 1 for smoke runs)
  std::size_t threads = 1;
  std::uint64_t seed = 2024;
  double dt_max = 1e-2;
};

struct TheoremVerdict {
  std::string row;
  bool pass = false;
  std::string detail;
};

inline const std::vector<std::string>& theorem_rows() {
  static const std::vector<std::string> rows = {"general2", "general",  "pth-moment", "time-average",
                                                "theorem2", "exponent", "corollary",  "martingale"};
  return rows;
}

namespace detail {

inline std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

/// max over t in [lo, hi] of curve values.
inline double window_max(const MomentCurve& c, double lo, double hi) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.times.size(); ++i)
    if (c.times[i] >= lo - 1e-12 && c.times[i] <= hi + 1e-12) m = std::max(m, c.estimates[i]);
  return m;
}

inline double value_at(const MomentCurve& c, double t) {
  for (std::size_t i = 0; i < c.times.size(); ++i)
    if (std::abs(c.times[i] - t) <= 1e-9 * std::max(1.0, t)) return c.estimates[i];
  throw PreconditionError("time not on the moment grid");
}

}  // namespace detail

class TheoremBattery {
 public:
  static constexpr double kMomentP = 0.5;

  explicit TheoremBattery(BatteryOptions opt = {}) : opt_(opt) {}

  std::size_t paths(std::size_t nominal) const {
    return std::max<std::size_t>(10, static_cast<std::size_t>(std::llround(nominal * opt_.scale)));
  }

  PathConfig config(double horizon) const {
    PathConfig cfg;
    cfg.horizon = horizon;
    cfg.dt_max = std::min(opt_.dt_max, horizon);
    cfg.seed = opt_.seed;
    return cfg;
  }

  /// Jump suppression: cooperative drift that explodes without noise, cubic
  /// jump kernel. Conditions: eq11 with alpha in [2.9, 3.1]. Conclusion: no
  /// explosion and strictly positive states over 10^3 paths, T = 5.
  TheoremVerdict general2() {
    const auto model = scenario("jump_suppressed");
    const Vec pvec{0.5};
    const auto rep = check_conditions(model, kMomentP, pvec);
    const auto grid = uniform_grid(5.0, 51);
    const auto sum = simulate_ensemble(model, config(5.0), paths(1000), grid, opt_.threads);
    const auto pos = positivity_report(sum);
    const double a = rep.fitted_alpha();
    const bool pass = rep.h1_holds && rep.eq11.holds() && a >= 2.9 && a <= 3.1 && pos.exploded == 0 &&
                      pos.nonpositive_states == 0 && pos.hit_zero == 0;
    return {"general2", pass,
            detail::fmt("eq11 %s alpha=%.4f delta=%.4g; paths=%zu exploded=%zu hit_zero=%zu nonpositive=%zu",
                        to_string(rep.eq11.verdict), a, rep.fitted_delta(), sum.n_paths, pos.exploded,
                        pos.hit_zero, pos.nonpositive_states)};
  }

  /// Brownian suppression under (H2) with bounded constant jumps.
  TheoremVerdict general() {
    const auto model = scenario("brownian_suppressed");
    const auto vr = validate_model(model);
    const auto grid = uniform_grid(5.0, 51);
    const auto sum = simulate_ensemble(model, config(5.0), paths(1000), grid, opt_.threads);
    const auto pos = positivity_report(sum);
    const bool pass = vr.h1_pointwise_ok && vr.h2_holds && pos.exploded == 0 && pos.nonpositive_states == 0 &&
                      pos.hit_zero == 0;
    return {"general", pass,
            detail::fmt("(H1)=%d (H2)=%d; paths=%zu exploded=%zu hit_zero=%zu nonpositive=%zu",
                        vr.h1_pointwise_ok, vr.h2_holds, sum.n_paths, pos.exploded, pos.hit_zero,
                        pos.nonpositive_states)};
  }

  /// Bounded p-th moment: the late-window maximum must not exceed 1.5x the
  /// mid-window maximum (plateau proxy), p = 0.5, 10^4 paths, T = 20.
  TheoremVerdict pth_moment() {
    const auto& sum = moment_run();
    const auto pos = positivity_report(sum);
    const auto curve = estimate_moment(sum, kMomentP);
    const double T = sum.horizon;
    const double late = detail::window_max(curve, T / 2, T);
    const double mid = detail::window_max(curve, T / 4, T / 2);
    const bool pass = pos.exploded == 0 && std::isfinite(late) && late <= 1.5 * mid;
    return {"pth-moment", pass,
            detail::fmt("max E|X|^0.5 on [T/2,T]=%.5f, on [T/4,T/2]=%.5f, ratio=%.4f (<=1.5); exploded=%zu", late,
                        mid, late / mid, pos.exploded)};
  }

  /// Time-averaged (p+2)-th moment stabilizes: values at T/2 and T agree
  /// within 25%.
  TheoremVerdict time_average() {
    const auto& sum = moment_run();
    const auto curve = time_avg_moment(sum, kMomentP + 2.0);
    const double T = sum.horizon;
    const double half = detail::value_at(curve, T / 2);
    const double full = detail::value_at(curve, T);
    const double rel = std::abs(full - half) / half;
    const bool pass = std::isfinite(rel) && rel <= 0.25;
    return {"time-average", pass,
            detail::fmt("(1/t)int E|X|^2.5: t=T/2 %.5f, t=T %.5f, rel diff %.4f (<=0.25)", half, full, rel)};
  }

  /// Finite product moment with the Gronwall bound E Π X_i^{p_i}(T) <= e^{C1 T} V(x0),
  /// C1 = max over probes of LV_prod / V_prod.
  TheoremVerdict theorem2() {
    const auto model = scenario("product_lyapunov");
    const Vec pvec{0.25, 0.25};
    const auto rep = check_conditions(model, kMomentP, pvec);
    const double c1 = product_growth_rate(model, pvec);
    const double T = 5.0;
    const auto grid = uniform_grid(T, 11);
    const auto sum = simulate_ensemble(model, config(T), paths(1000), grid, opt_.threads);
    const auto pos = positivity_report(sum);
    CompensatedSum acc;
    std::size_t used = 0;
    for (std::size_t i = 0; i < sum.n_paths; ++i) {
      if (sum.ends[i].status == PathStatus::Exploded) continue;
      acc.add(product_lyapunov(sum.state(i, grid.size() - 1), pvec));
      ++used;
    }
    const double mean = used ? acc.value() / static_cast<double>(used) : std::numeric_limits<double>::infinity();
    const double bound = std::exp(c1 * T) * product_lyapunov(model.x0, pvec);
    const bool pass = rep.eq11.holds() && rep.eq11a.holds() && pos.exploded == 0 && std::isfinite(mean) &&
                      mean <= bound;
    return {"theorem2", pass,
            detail::fmt("eq11a %s; C1=%.4f; mean prod moment %.5f <= bound %.5f; exploded=%zu",
                        to_string(rep.eq11a.verdict), c1, mean, bound, pos.exploded)};
  }

  /// Pathwise growth: 99th percentile of ln|X(T)|/ln T <= 4e/p, T = 100.
  TheoremVerdict exponent() {
    const auto model = scenario("jump_suppressed");
    const Vec pvec{0.5};
    const auto rep = check_conditions(model, kMomentP, pvec);
    const auto& sum = long_run();
    const auto g = pathwise_growth_exponent(sum);
    const double k = 4.0 * std::numbers::e / kMomentP;
    const bool pass = rep.eq11.holds() && rep.eq90.holds() && g.exploded == 0 && std::isfinite(g.p99) && g.p99 <= k;
    return {"exponent", pass,
            detail::fmt("eq90 %s theta=%.3f; p99 ln|X|/lnT=%.4f max=%.4f (<= %.3f); exploded=%zu",
                        to_string(rep.eq90.verdict), rep.eq90.exponent, g.p99, g.max, k, g.exploded)};
  }

  /// Sample Lyapunov exponent: 99th percentile of ln|X(T)|/T <= 0.05.
  TheoremVerdict corollary() {
    const auto& sum = long_run();
    const auto l = sample_lyapunov_exponent(sum);
    const bool pass = l.exploded == 0 && l.p99 <= 0.05;
    return {"corollary", pass,
            detail::fmt("p99 ln|X|/T=%.5f median=%.5f (<= 0.05); exploded=%zu", l.p99, l.median, l.exploded)};
  }

  /// Exponential martingale inequality for (alpha, beta) in {(1,2),(1,3),(2,1)},
  /// once with g = 1 and once with a unit jump integrand on a rate-1 mark.
  TheoremVerdict martingale() {
    auto results = martingale_cases();
    bool pass = true;
    std::string detail;
    for (const auto& [label, r] : results) {
      pass = pass && r.pass;
      detail += detail::fmt("%s a=%g b=%g freq=%.4f bound=%.4f+3se(%.4f) %s; ", label.c_str(), r.alpha, r.beta,
                            r.exceed_freq, r.bound, r.std_error, r.pass ? "ok" : "FAIL");
    }
    return {"martingale", pass, detail};
  }

  std::vector<std::pair<std::string, MartingaleResult>> martingale_cases() {
    const auto brownian_model = scenario("logistic1d");
    const auto jump_model = make_model({0.0}, Matrix(1, 1), Matrix(1, 1),
                                       JumpKernel({{1.0, ConstantJump{{0.5}}}}), {1.0}, "unit-rate constant jump");
    PathConfig cfg = config(1.0);
    cfg.dt_max = 1e-3;
    const std::pair<double, double> pairs[] = {{1.0, 2.0}, {1.0, 3.0}, {2.0, 1.0}};
    std::vector<std::pair<std::string, MartingaleResult>> out;
    for (const auto& [a, b] : pairs) {
      out.emplace_back("g=1", martingale_exceedance_test(brownian_model, cfg, paths(10000), a, b,
                                                         Integrand::constant({1.0}), Integrand::zero(),
                                                         opt_.threads));
      out.emplace_back("h=1", martingale_exceedance_test(jump_model, cfg, paths(10000), a, b, Integrand::zero(),
                                                         Integrand::constant({1.0}), opt_.threads));
    }
    return out;
  }

  /// max over the default probe grid of LV_prod(x) / V_prod(x).
  static double product_growth_rate(const Model& model, std::span<const double> pvec) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& x : probe_points(model.n, ProbeGrid{})) {
      const double ratio = eval_Lprod(model, x, pvec).total / product_lyapunov(x, pvec);
      best = std::max(best, ratio);
    }
    return best;
  }

  TheoremVerdict run(const std::string& row) {
    if (row == "general2") return general2();
    if (row == "general") return general();
    if (row == "pth-moment") return pth_moment();
    if (row == "time-average") return time_average();
    if (row == "theorem2") return theorem2();
    if (row == "exponent") return exponent();
    if (row == "corollary") return corollary();
    if (row == "martingale") return martingale();
    throw PreconditionError("unknown theorem row '" + row + "'");
  }

  std::vector<TheoremVerdict> run_all(const std::vector<std::string>& only = {}) {
    std::vector<TheoremVerdict> out;
    for (const auto& row : only.empty() ? theorem_rows() : only) out.push_back(run(row));
    return out;
  }

  const EnsembleSummary& moment_run() {
    if (!moment_run_) {
      const auto model = scenario("jump_suppressed");
      const auto grid = uniform_grid(20.0, 201);
      moment_run_ = simulate_ensemble(model, config(20.0), paths(10000), grid, opt_.threads);
    }
    return *moment_run_;
  }

  const EnsembleSummary& long_run() {
    if (!long_run_) {
      const auto model = scenario("jump_suppressed");
      const auto grid = uniform_grid(100.0, 101);
      long_run_ = simulate_ensemble(model, config(100.0), paths(1000), grid, opt_.threads);
    }
    return *long_run_;
  }

 private:
  BatteryOptions opt_;
  std::optional<EnsembleSummary> moment_run_;
  std::optional<EnsembleSummary> long_run_;
};

}  // namespace lvj
