#pragma once

// Ensemble estimators: moments, time-averaged moments, pathwise growth
// exponents, and the exponential-martingale exceedance test.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lvj/errors.hpp"
#include "lvj/simulate.hpp"

namespace lvj {

struct MomentCurve {
  std::vector<double> times;
  std::vector<double> estimates;
  std::vector<double> stderrs;
  double p = 0.0;
  std::size_t used_paths = 0;
  std::size_t excluded_exploded = 0;
  bool biased = false;  // true when exploded paths were dropped
};

namespace detail {

inline std::vector<std::size_t> surviving_paths(const EnsembleSummary& s) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < s.n_paths; ++i)
    if (s.ends[i].status != PathStatus::Exploded) idx.push_back(i);
  return idx;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

/// Mean and standard error, summed in index order so results are bitwise
/// reproducible.
inline MeanSe mean_se(std::span<const double> v) {
  CompensatedSum s;
  for (double e : v) s.add(e);
  const auto m = static_cast<double>(v.size());
  const double mean = s.value() / m;
  if (v.size() < 2) return {mean, 0.0};
  CompensatedSum ss;
  for (double e : v) ss.add((e - mean) * (e - mean));
  return {mean, std::sqrt(ss.value() / (m - 1.0) / m)};
}

}  // namespace detail

/// Per grid time, the sample mean of |X(t)|^p over non-exploded paths.
inline MomentCurve estimate_moment(const EnsembleSummary& s, double p) {
  if (!(p >= 0.0)) throw PreconditionError("moment order must be non-negative");
  const auto paths = detail::surviving_paths(s);
  if (paths.empty()) throw PreconditionError("no non-exploded paths to average");
  MomentCurve c;
  c.p = p;
  c.times = s.time_grid;
  c.used_paths = paths.size();
  c.excluded_exploded = s.n_paths - paths.size();
  c.biased = c.excluded_exploded > 0;
  std::vector<double> vals(paths.size());
  for (std::size_t g = 0; g < s.time_grid.size(); ++g) {
    for (std::size_t j = 0; j < paths.size(); ++j) vals[j] = std::pow(norm(s.state(paths[j], g)), p);
    const auto ms = detail::mean_se(vals);
    c.estimates.push_back(ms.mean);
    c.stderrs.push_back(ms.se);
  }
  return c;
}

/// Per grid time t > 0, (1/t) ∫_0^t E|X(s)|^q ds by the trapezoid rule on the
/// grid. Standard errors come from the per-path time averages.
inline MomentCurve time_avg_moment(const EnsembleSummary& s, double q) {
  if (!(q > 0.0)) throw PreconditionError("moment order must be positive");
  const auto paths = detail::surviving_paths(s);
  if (paths.empty()) throw PreconditionError("no non-exploded paths to average");
  const auto& grid = s.time_grid;
  MomentCurve c;
  c.p = q;
  c.used_paths = paths.size();
  c.excluded_exploded = s.n_paths - paths.size();
  c.biased = c.excluded_exploded > 0;

  std::vector<double> integral(paths.size(), 0.0), prev(paths.size()), vals(paths.size());
  for (std::size_t j = 0; j < paths.size(); ++j) prev[j] = std::pow(norm(s.state(paths[j], 0)), q);
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double h = grid[g] - grid[g - 1];
    for (std::size_t j = 0; j < paths.size(); ++j) {
      const double cur = std::pow(norm(s.state(paths[j], g)), q);
      integral[j] += 0.5 * h * (prev[j] + cur);
      prev[j] = cur;
    }
    if (!(grid[g] > 0.0)) continue;
    const double span = grid[g] - grid[0];
    for (std::size_t j = 0; j < paths.size(); ++j) vals[j] = integral[j] / span;
    const auto ms = detail::mean_se(vals);
    c.times.push_back(grid[g]);
    c.estimates.push_back(ms.mean);
    c.stderrs.push_back(ms.se);
  }
  return c;
}

struct ExponentStats {
  std::vector<double> values;  // per path; +inf for exploded paths
  double max = 0.0;
  double p99 = 0.0;
  double median = 0.0;
  std::size_t flagged = 0;     // HitZero paths (last positive state used)
  std::size_t exploded = 0;
};

/// Linear-interpolation quantile (type 7) of a copy of v.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || v[lo] == v[hi]) return v[lo];
  return v[lo] + frac * (v[hi] - v[lo]);
}

namespace detail {

inline ExponentStats summarize_exponents(const EnsembleSummary& s, double TerminalStats::*field) {
  ExponentStats e;
  for (std::size_t i = 0; i < s.n_paths; ++i) {
    e.values.push_back(s.terminal[i].*field);
    if (s.terminal[i].flagged) ++e.flagged;
    if (s.ends[i].status == PathStatus::Exploded) ++e.exploded;
  }
  if (e.values.empty()) throw PreconditionError("empty ensemble");
  e.max = *std::max_element(e.values.begin(), e.values.end());
  e.p99 = quantile(e.values, 0.99);
  e.median = quantile(e.values, 0.5);
  return e;
}

}  // namespace detail

/// Per path ln|X(T)| / ln T; needs T > 1.
inline ExponentStats pathwise_growth_exponent(const EnsembleSummary& s) {
  if (!(s.horizon > 1.0)) throw PreconditionError("growth exponent needs horizon > 1");
  return detail::summarize_exponents(s, &TerminalStats::growth_exp);
}

/// Per path ln|X(T)| / T.
inline ExponentStats sample_lyapunov_exponent(const EnsembleSummary& s) {
  if (!(s.horizon > 0.0)) throw PreconditionError("horizon must be positive");
  return detail::summarize_exponents(s, &TerminalStats::lyap_exp);
}

struct PositivityCounts {
  std::size_t completed = 0;
  std::size_t exploded = 0;
  std::size_t hit_zero = 0;
  std::size_t nonpositive_states = 0;
};

inline PositivityCounts positivity_report(const EnsembleSummary& s) {
  PositivityCounts c;
  for (std::size_t i = 0; i < s.n_paths; ++i) {
    switch (s.ends[i].status) {
      case PathStatus::Completed: ++c.completed; break;
      case PathStatus::Exploded: ++c.exploded; break;
      case PathStatus::HitZero: ++c.hit_zero; break;
    }
    for (std::size_t g = 0; g < s.time_grid.size(); ++g) {
      const auto x = s.state(i, g);
      bool bad = false;
      for (double v : x)
        if (!std::isnan(v) && !(v > 0.0)) bad = true;
      if (bad) ++c.nonpositive_states;
    }
  }
  return c;
}

/// Predictable integrand from the closed family: value or value * |X(s-)|.
struct Integrand {
  enum class Kind { Constant, NormScaled };
  Kind kind = Kind::Constant;
  std::vector<double> values;  // one for g; one per mark for h (empty = zero)

  static Integrand zero() { return {}; }
  static Integrand constant(std::vector<double> v) { return {Kind::Constant, std::move(v)}; }
  static Integrand norm_scaled(std::vector<double> v) { return {Kind::NormScaled, std::move(v)}; }

  double at(std::size_t k, double state_norm) const {
    if (values.empty()) return 0.0;
    const double v = values[values.size() == 1 ? 0 : k];
    return kind == Kind::Constant ? v : v * state_norm;
  }
};

struct MartingaleResult {
  double alpha = 0.0;
  double beta = 0.0;
  double exceed_freq = 0.0;
  double bound = 0.0;     // e^{-alpha beta}
  double std_error = 0.0;   // binomial standard error at the bound
  bool pass = false;
  std::size_t used_paths = 0;
  std::size_t excluded_exploded = 0;
};

namespace detail {

/// Accumulates
///   S(t) = ∫g dW - (α/2)∫g² ds + Σ_jumps h - ∫Σ_k λ_k h_k ds
///          - (1/α)∫Σ_k λ_k (e^{αh_k} - 1 - αh_k) ds
/// along the simulated drivers and tracks sup_t S(t).
class ExponentialMartingale {
 public:
  ExponentialMartingale(const Model& model, const Integrand& g, const Integrand& h, double alpha)
      : model_(model), g_(g), h_(h), alpha_(alpha) {}

  void on_step(double, double dt, double dW, std::span<const double> x0, std::span<const double>) {
    const double r = norm(x0);
    const double gv = g_.at(0, r);
    double comp = 0.0;
    for (std::size_t k = 0; k < model_.kernel.size(); ++k) {
      const double hv = h_.at(k, r);
      // h_k + (e^{αh_k} - 1 - αh_k)/α collapses to (e^{αh_k} - 1)/α
      comp += model_.kernel.rate(k) * std::expm1(alpha_ * hv) / alpha_;
    }
    value_ += gv * dW - 0.5 * alpha_ * gv * gv * dt - comp * dt;
    sup_ = std::max(sup_, value_);
  }
  void on_jump(double, std::size_t k, std::span<const double> pre, std::span<const double>) {
    value_ += h_.at(k, norm(pre));
    sup_ = std::max(sup_, value_);
  }
  void on_landmark(std::size_t, double, std::span<const double>) {}
  void on_end(const Termination&, std::span<const double>) {}

  double sup() const { return sup_; }

 private:
  const Model& model_;
  const Integrand& g_;
  const Integrand& h_;
  double alpha_;
  double value_ = 0.0;
  double sup_ = 0.0;
};

}  // namespace detail

/// Fraction of paths with sup_{t<=T} S(t) > beta, compared against e^{-αβ}
/// plus three binomial standard errors.
inline MartingaleResult martingale_exceedance_test(const Model& model, const PathConfig& cfg,
                                                   std::size_t n_paths, double alpha, double beta,
                                                   const Integrand& g, const Integrand& h,
                                                   std::size_t threads = 1) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw PreconditionError("alpha and beta must be positive");
  if (n_paths == 0) throw PreconditionError("need at least one path");
  if (!h.values.empty() && h.values.size() != 1 && h.values.size() != model.kernel.size())
    throw PreconditionError("jump integrand needs one value or one per mark");
  std::vector<char> exceeded(n_paths, 0), exploded(n_paths, 0);
  detail::parallel_for(n_paths, threads, [&](std::size_t i) {
    RngStream stream(cfg.seed, i);
    detail::ExponentialMartingale mart(model, g, h, alpha);
    const auto end = integrate(model, model.x0, cfg, stream, mart);
    if (end.status == PathStatus::Exploded) {
      exploded[i] = 1;
      return;
    }
    exceeded[i] = mart.sup() > beta ? 1 : 0;
  });
  MartingaleResult r;
  r.alpha = alpha;
  r.beta = beta;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n_paths; ++i) {
    if (exploded[i]) {
      ++r.excluded_exploded;
      continue;
    }
    ++r.used_paths;
    hits += static_cast<std::size_t>(exceeded[i]);
  }
  r.bound = std::exp(-alpha * beta);
  if (r.used_paths == 0) return r;
  r.exceed_freq = static_cast<double>(hits) / static_cast<double>(r.used_paths);
  r.std_error = std::sqrt(r.bound * (1.0 - r.bound) / static_cast<double>(r.used_paths));
  r.pass = r.exceed_freq <= r.bound + 3.0 * r.std_error;
  return r;
}

}  // namespace lvj
