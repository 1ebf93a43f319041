#pragma once

// Positivity-preserving path simulation. Between jumps each component is
// advanced in log coordinates with coefficients frozen at the step start:
//
//   ln x_i' = ln x_i + [b_i + (Ax)_i - (σx)_i^2 / 2 - Σ_k λ_k H_i(x,u_k)] dt + (σx)_i dW
//
// and jumps act multiplicatively, x_i' = x_i (1 + H_i(x, u_k)), at exact
// compound-Poisson clock times.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "lvj/errors.hpp"
#include "lvj/model.hpp"
#include "lvj/rng.hpp"

namespace lvj {

struct PathConfig {
  double horizon = 1.0;
  double dt_max = 1e-3;
  std::uint64_t seed = 0;
  double explosion_threshold = 1e12;
  double zero_threshold = 1e-12;
  std::size_t record_stride = 1;
  double c_tame = 1.0;
  // Caps on the per-step log increment: |drift| dt and its diffusive
  // counterpart s^2 dt are kept below max_log_step and max_log_step^2.
  double max_log_step = 0.1;

  void validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw PreconditionError("horizon must be positive");
    if (!(dt_max > 0.0) || dt_max > horizon) throw PreconditionError("dt_max must lie in (0, horizon]");
    if (!(zero_threshold > 0.0 && zero_threshold < 1.0 && explosion_threshold > 1.0))
      throw PreconditionError("thresholds must satisfy 0 < zero < 1 < explosion");
    if (record_stride == 0) throw PreconditionError("record_stride must be positive");
    if (!(c_tame > 0.0) || !(max_log_step > 0.0)) throw PreconditionError("step controls must be positive");
  }
};

enum class PathStatus { Completed, Exploded, HitZero };

inline const char* to_string(PathStatus s) {
  switch (s) {
    case PathStatus::Completed: return "completed";
    case PathStatus::Exploded: return "exploded";
    default: return "hit_zero";
  }
}

struct Termination {
  PathStatus status = PathStatus::Completed;
  double time = 0.0;
  std::size_t component = 0;  // meaningful for HitZero
};

struct JumpRecord {
  double time = 0.0;
  std::size_t mark = 0;
  Vec pre;
  Vec post;
};

struct Path {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<JumpRecord> jumps;
  Termination end;
  std::size_t steps = 0;
};

struct JumpDraw {
  double wait = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> mark;
};

/// Waiting time ~ Exp(Λ) and mark k with probability λ_k / Λ.
inline JumpDraw next_jump(RngStream& stream, const JumpKernel& kernel) {
  const double total = kernel.total_rate();
  if (!(total > 0.0)) return {};
  JumpDraw d;
  d.wait = stream.exponential(total);
  const double u = stream.uniform() * total;
  double acc = 0.0;
  std::size_t k = 0;
  for (; k + 1 < kernel.size(); ++k) {
    acc += kernel.rate(k);
    if (u < acc) break;
  }
  d.mark = k;
  return d;
}

namespace detail {

/// Log-drift of each component (including the jump compensator) and the
/// diffusion loading s = σx, evaluated at x.
inline void log_coefficients(const Model& model, std::span<const double> x, std::span<double> drift,
                             std::span<double> loading, std::span<double> scratch) {
  const std::size_t n = model.n;
  model.A.apply(x, drift);
  model.sigma.apply(x, loading);
  for (std::size_t i = 0; i < n; ++i) drift[i] += model.b[i] - 0.5 * loading[i] * loading[i];
  for (std::size_t k = 0; k < model.kernel.size(); ++k) {
    model.kernel.eval(x, k, scratch);
    const double lam = model.kernel.rate(k);
    for (std::size_t i = 0; i < n; ++i) drift[i] -= lam * scratch[i];
  }
}

}  // namespace detail

/// One frozen-coefficient log-Euler step. Returns false if the result is
/// not finite (the caller treats that as explosion).
inline bool step_diffusion_log(const Model& model, std::span<const double> x, double dt, double dW,
                               std::span<double> out) {
  const std::size_t n = model.n;
  Vec drift(n), loading(n), scratch(n);
  detail::log_coefficients(model, x, drift, loading, scratch);
  bool finite = true;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[i] * std::exp(drift[i] * dt + loading[i] * dW);
    if (!std::isfinite(out[i])) finite = false;
  }
  return finite;
}

inline Vec step_diffusion_log(const Model& model, std::span<const double> x, double dt, double dW) {
  if (!all_positive(x)) throw DomainError("diffusion step needs a positive state");
  Vec out(model.n);
  if (!step_diffusion_log(model, x, dt, dW, out))
    throw std::overflow_error("log step overflowed");
  return out;
}

/// x_i' = x_i (1 + H_i(x, u_mark)).
inline Vec apply_jump(const Model& model, std::span<const double> x, std::size_t mark) {
  Vec h(model.n);
  model.kernel.eval_checked(x, mark, h);
  Vec out(model.n);
  for (std::size_t i = 0; i < model.n; ++i) out[i] = x[i] * (1.0 + h[i]);
  return out;
}

/// Observer hooks for integrate(). All are optional; see NullObserver.
struct NullObserver {
  void on_step(double /*t0*/, double /*dt*/, double /*dW*/, std::span<const double> /*x0*/,
               std::span<const double> /*x1*/) {}
  void on_jump(double /*t*/, std::size_t /*mark*/, std::span<const double> /*pre*/,
               std::span<const double> /*post*/) {}
  void on_landmark(std::size_t /*index*/, double /*t*/, std::span<const double> /*x*/) {}
  void on_end(const Termination& /*end*/, std::span<const double> /*x*/) {}
};

/// Event loop shared by every simulation entry point. `landmarks` are
/// increasing times in [0, horizon] at which the stepper lands exactly and
/// reports the (post-jump) state.
template <class Observer>
Termination integrate(const Model& model, std::span<const double> x_init, const PathConfig& cfg,
                      RngStream& stream, Observer& obs, std::span<const double> landmarks = {}) {
  cfg.validate();
  if (!all_positive(x_init)) throw DomainError("initial state must be strictly positive");
  const std::size_t n = model.n;
  const double T = cfg.horizon;

  Vec x(x_init.begin(), x_init.end()), x_next(n), drift(n), loading(n), scratch(n);
  double t = 0.0;
  std::size_t next_mark = 0;
  while (next_mark < landmarks.size() && landmarks[next_mark] <= 0.0) {
    obs.on_landmark(next_mark, landmarks[next_mark], x);
    ++next_mark;
  }

  JumpDraw jump = next_jump(stream, model.kernel);
  double jump_time = jump.wait;

  auto finish = [&](PathStatus status, double when, std::size_t comp = 0) {
    Termination end{status, when, comp};
    obs.on_end(end, x);
    return end;
  };

  while (t < T) {
    const double landmark = next_mark < landmarks.size() ? landmarks[next_mark] : T;
    const double target = std::min({T, jump_time, landmark});

    while (t < target) {
      detail::log_coefficients(model, x, drift, loading, scratch);
      double max_drift = 0.0, max_load2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        max_drift = std::max(max_drift, std::abs(drift[i]));
        max_load2 = std::max(max_load2, loading[i] * loading[i]);
      }
      double dt = std::min(cfg.dt_max, cfg.c_tame / (1.0 + norm(x)));
      if (max_drift > 0.0) dt = std::min(dt, cfg.max_log_step / max_drift);
      if (max_load2 > 0.0) dt = std::min(dt, cfg.max_log_step * cfg.max_log_step / max_load2);
      double t_new = t + dt;
      if (t_new >= target || target - t_new <= 1e-14 * std::max(1.0, target)) {
        t_new = target;
        dt = target - t;
      }
      const double dW = stream.normal() * std::sqrt(dt);
      bool finite = true;
      for (std::size_t i = 0; i < n; ++i) {
        x_next[i] = x[i] * std::exp(drift[i] * dt + loading[i] * dW);
        if (!std::isfinite(x_next[i])) finite = false;
      }
      obs.on_step(t, dt, dW, x, x_next);
      t = t_new;
      if (!finite || norm(x_next) > cfg.explosion_threshold) {
        x.swap(x_next);
        return finish(PathStatus::Exploded, t);
      }
      x.swap(x_next);
      for (std::size_t i = 0; i < n; ++i)
        if (x[i] < cfg.zero_threshold) return finish(PathStatus::HitZero, t, i);
    }

    if (t == jump_time && jump.mark) {
      const std::size_t k = *jump.mark;
      model.kernel.eval_checked(x, k, scratch);
      for (std::size_t i = 0; i < n; ++i) x_next[i] = x[i] * (1.0 + scratch[i]);
      obs.on_jump(t, k, x, x_next);
      x.swap(x_next);
      if (!std::isfinite(norm(x)) || norm(x) > cfg.explosion_threshold)
        return finish(PathStatus::Exploded, t);
      for (std::size_t i = 0; i < n; ++i)
        if (x[i] < cfg.zero_threshold) return finish(PathStatus::HitZero, t, i);
      jump = next_jump(stream, model.kernel);
      jump_time = t + jump.wait;
    }
    while (next_mark < landmarks.size() && landmarks[next_mark] <= t) {
      obs.on_landmark(next_mark, landmarks[next_mark], x);
      ++next_mark;
    }
  }
  return finish(PathStatus::Completed, T);
}

namespace detail {

class PathRecorder {
 public:
  PathRecorder(Path& path, std::size_t stride) : path_(path), stride_(stride) {}

  void on_step(double t0, double dt, double, std::span<const double>, std::span<const double> x1) {
    ++path_.steps;
    if (++since_record_ >= stride_) {
      record(t0 + dt, x1);
      since_record_ = 0;
    }
  }
  void on_jump(double t, std::size_t k, std::span<const double> pre, std::span<const double> post) {
    path_.jumps.push_back({t, k, Vec(pre.begin(), pre.end()), Vec(post.begin(), post.end())});
    record(t, post);
  }
  void on_landmark(std::size_t, double, std::span<const double>) {}
  void on_end(const Termination& end, std::span<const double> x) {
    path_.end = end;
    record(end.time, x);
  }

  void record(double t, std::span<const double> x) {
    if (!path_.times.empty() && path_.times.back() == t) {
      path_.states.back().assign(x.begin(), x.end());
      return;
    }
    path_.times.push_back(t);
    path_.states.emplace_back(x.begin(), x.end());
  }

 private:
  Path& path_;
  std::size_t stride_;
  std::size_t since_record_ = 0;
};

}  // namespace detail

/// Simulates one path from model.x0. Every jump and the terminal state are
/// always recorded; ordinary steps every `record_stride`.
inline Path simulate_path(const Model& model, const PathConfig& cfg, RngStream& stream) {
  Path path;
  detail::PathRecorder rec(path, cfg.record_stride);
  rec.record(0.0, model.x0);
  integrate(model, model.x0, cfg, stream, rec);
  return path;
}

inline Path simulate_path(const Model& model, const PathConfig& cfg, std::uint64_t path_index = 0) {
  RngStream stream(cfg.seed, path_index);
  return simulate_path(model, cfg, stream);
}

enum class Side { Left, Right };

/// State at time t from recorded samples. Right gives X(t) (càdlàg: post-jump
/// at a jump time); Left gives X(t-) (pre-jump at a jump time).
inline Vec state_at(const Path& path, double t, Side side = Side::Right) {
  if (path.times.empty()) throw PreconditionError("empty path");
  if (side == Side::Left) {
    for (const auto& j : path.jumps)
      if (j.time == t) return j.pre;
  }
  auto it = std::upper_bound(path.times.begin(), path.times.end(), t);
  if (it == path.times.begin()) return path.states.front();
  return path.states[static_cast<std::size_t>(it - path.times.begin()) - 1];
}

struct TerminalStats {
  double norm = 0.0;         // |X(T)| (last positive state for HitZero, inf for Exploded)
  double growth_exp = 0.0;   // ln|X(T)| / ln T
  double lyap_exp = 0.0;     // ln|X(T)| / T
  bool flagged = false;      // HitZero: statistics use the last positive state
};

/// Per-path grid states and statuses of an ensemble run.
struct EnsembleSummary {
  std::vector<double> time_grid;
  std::size_t n_paths = 0;
  std::size_t dim = 0;
  double horizon = 0.0;
  std::vector<double> states;  // [path][grid][component]; NaN after explosion
  std::vector<Termination> ends;
  std::vector<TerminalStats> terminal;

  std::span<const double> state(std::size_t path, std::size_t grid) const {
    return {states.data() + (path * time_grid.size() + grid) * dim, dim};
  }
  std::span<double> state(std::size_t path, std::size_t grid) {
    return {states.data() + (path * time_grid.size() + grid) * dim, dim};
  }
};

inline TerminalStats terminal_stats(double norm_T, double T, PathStatus status) {
  TerminalStats s;
  s.norm = status == PathStatus::Exploded ? std::numeric_limits<double>::infinity() : norm_T;
  s.flagged = status == PathStatus::HitZero;
  const double l = std::log(s.norm);
  s.growth_exp = T > 1.0 ? l / std::log(T) : std::numeric_limits<double>::quiet_NaN();
  s.lyap_exp = l / T;
  return s;
}

namespace detail {

class GridSampler {
 public:
  GridSampler(EnsembleSummary& sum, std::size_t path) : sum_(sum), path_(path) {}
  void on_step(double, double, double, std::span<const double>, std::span<const double>) {}
  void on_jump(double, std::size_t, std::span<const double>, std::span<const double>) {}
  void on_landmark(std::size_t idx, double, std::span<const double> x) {
    std::copy(x.begin(), x.end(), sum_.state(path_, idx).begin());
    filled_ = idx + 1;
  }
  void on_end(const Termination& end, std::span<const double> x) {
    const double fill = end.status == PathStatus::Exploded ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    for (std::size_t g = filled_; g < sum_.time_grid.size(); ++g) {
      auto dst = sum_.state(path_, g);
      if (end.status == PathStatus::Exploded)
        std::fill(dst.begin(), dst.end(), fill);
      else
        std::copy(x.begin(), x.end(), dst.begin());
    }
    final_norm_ = norm(x);
  }
  double final_norm() const { return final_norm_; }

 private:
  EnsembleSummary& sum_;
  std::size_t path_;
  std::size_t filled_ = 0;
  double final_norm_ = 0.0;
};

/// Runs body(i) for i in [0, count) on `threads` workers. Each index is
/// processed exactly once; output placement is the body's job.
template <class Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Runs n_paths independent paths (stream i for path i) and samples each on
/// the grid. Output is independent of the thread count.
inline EnsembleSummary simulate_ensemble(const Model& model, const PathConfig& cfg, std::size_t n_paths,
                                         std::span<const double> time_grid, std::size_t threads = 1) {
  cfg.validate();
  for (std::size_t g = 0; g < time_grid.size(); ++g) {
    if (time_grid[g] < 0.0 || time_grid[g] > cfg.horizon)
      throw PreconditionError("time grid must lie within [0, horizon]");
    if (g > 0 && !(time_grid[g] > time_grid[g - 1]))
      throw PreconditionError("time grid must be strictly increasing");
  }
  EnsembleSummary sum;
  sum.time_grid.assign(time_grid.begin(), time_grid.end());
  sum.n_paths = n_paths;
  sum.dim = model.n;
  sum.horizon = cfg.horizon;
  sum.states.assign(n_paths * time_grid.size() * model.n, 0.0);
  sum.ends.resize(n_paths);
  sum.terminal.resize(n_paths);

  detail::parallel_for(n_paths, threads, [&](std::size_t i) {
    RngStream stream(cfg.seed, i);
    detail::GridSampler sampler(sum, i);
    const auto end = integrate(model, model.x0, cfg, stream, sampler, time_grid);
    sum.ends[i] = end;
    sum.terminal[i] = terminal_stats(sampler.final_norm(), cfg.horizon, end.status);
  });
  return sum;
}

/// Uniform grid of `points` times from 0 to horizon inclusive.
inline std::vector<double> uniform_grid(double horizon, std::size_t points) {
  if (points < 2) throw PreconditionError("grid needs at least two points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = horizon * static_cast<double>(i) / static_cast<double>(points - 1);
  g.back() = horizon;
  return g;
}

}  // namespace lvj
