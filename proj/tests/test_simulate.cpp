#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "lvj/scenarios.hpp"
#include "lvj/simulate.hpp"
#include "lvj/stats.hpp"

namespace {

using namespace lvj;

Model linear_jump(double c, double rate, double x0 = 1.0) {
  return make_model({0.0}, Matrix(1, 1), Matrix(1, 1), JumpKernel({{rate, ConstantJump{{c}}}}), {x0});
}

TEST(NextJump, ZeroRate) {
  RngStream s(1, 0);
  const auto d = next_jump(s, JumpKernel());
  EXPECT_TRUE(std::isinf(d.wait));
  EXPECT_FALSE(d.mark.has_value());
}

TEST(NextJump, MarkFrequencyAndMeanWait) {
  JumpKernel k({{1.0, ConstantJump{{0.1}}}, {3.0, ConstantJump{{0.2}}}});
  RngStream s(2, 0);
  const int n = 100000;
  int second = 0;
  double wait = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto d = next_jump(s, k);
    ASSERT_TRUE(d.mark.has_value());
    if (*d.mark == 1) ++second;
    wait += d.wait;
  }
  const double freq = double(second) / n;
  EXPECT_NEAR(freq, 0.75, 3 * std::sqrt(0.75 * 0.25 / n));
  // Λ = 4 here; rescale to the Λ = 2 case below
  EXPECT_NEAR(wait / n, 0.25, 3 * 0.25 / std::sqrt(double(n)));

  JumpKernel k2({{2.0, ConstantJump{{0.1}}}});
  double w2 = 0.0;
  for (int i = 0; i < n; ++i) w2 += next_jump(s, k2).wait;
  EXPECT_NEAR(w2 / n, 0.5, 3 * 0.5 / std::sqrt(double(n)));
}

TEST(Step, ZeroModelIsIdentity) {
  const auto m = make_model({0, 0}, Matrix(2, 2), Matrix(2, 2), JumpKernel(), {1, 1});
  const Vec x{0.3, 7.0};
  EXPECT_EQ(step_diffusion_log(m, x, 0.5, 1.3), x);
}

TEST(Step, CompensatorBetweenJumpsIsExact) {
  const auto m = linear_jump(0.5, 2.0, 3.0);
  Vec x{3.0};
  for (int i = 0; i < 10; ++i) x = step_diffusion_log(m, x, 0.01, 0.0);
  EXPECT_NEAR(x[0], 3.0 * std::exp(-0.5 * 2.0 * 0.1), 1e-14);
}

TEST(Step, OverflowSignalsExplosion) {
  const auto m = make_model({1e6}, Matrix(1, 1), Matrix(1, 1), JumpKernel(), {1});
  EXPECT_THROW(step_diffusion_log(m, Vec{1.0}, 1.0, 0.0), std::overflow_error);
}

TEST(ApplyJump, Examples) {
  const auto m = make_model({0, 0}, Matrix(2, 2), Matrix(2, 2), JumpKernel({{1.0, ConstantJump{{-0.5, 1.0}}}}),
                            {1, 1});
  EXPECT_EQ(apply_jump(m, Vec{2.0, 3.0}, 0), (Vec{1.0, 6.0}));
  const auto zero = make_model({0}, Matrix(1, 1), Matrix(1, 1), JumpKernel({{1.0, ConstantJump{{0.0}}}}), {1});
  EXPECT_EQ(apply_jump(zero, Vec{2.5}, 0), Vec{2.5});
  EXPECT_EQ(apply_jump(scenario("jump_suppressed"), Vec{1.0}, 0), Vec{2.0});
  const auto bad = make_model({0}, Matrix(1, 1), Matrix(1, 1), JumpKernel({{1.0, ConstantJump{{-1.0}}}}), {1});
  EXPECT_THROW(apply_jump(bad, Vec{2.0}, 0), KernelAdmissibilityError);
}

TEST(Path, LogisticMatchesClosedForm) {
  PathConfig cfg;
  cfg.horizon = 10;
  cfg.dt_max = 1e-3;
  const auto path = simulate_path(scenario("logistic1d"), cfg);
  EXPECT_EQ(path.end.status, PathStatus::Completed);
  EXPECT_EQ(path.times.back(), 10.0);
  const double exact = 1.0 / (1.0 + std::exp(-10.0));
  EXPECT_NEAR(path.states.back()[0] / exact, 1.0, 1e-3);
  EXPECT_NEAR(exact, 0.9999546021312976, 1e-15);
}

TEST(Path, CooperativeBlowupNearLn2) {
  PathConfig cfg;
  cfg.horizon = 1;
  const auto path = simulate_path(scenario("cooperative_blowup"), cfg);
  EXPECT_EQ(path.end.status, PathStatus::Exploded);
  EXPECT_NEAR(path.end.time / std::log(2.0), 1.0, 0.05);
}

TEST(Path, LinearJumpClosedForm) {
  const auto m = linear_jump(0.5, 1.0, 1.0);
  PathConfig cfg;
  cfg.horizon = 1;
  cfg.dt_max = 1e-2;
  int with_jumps = 0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto path = simulate_path(m, cfg, i);
    ASSERT_EQ(path.end.status, PathStatus::Completed);
    const double nj = static_cast<double>(path.jumps.size());
    with_jumps += nj > 0;
    const double exact = std::exp(-0.5) * std::pow(1.5, nj);
    EXPECT_NEAR(path.states.back()[0] / exact, 1.0, 1e-10);
    for (const auto& j : path.jumps) {
      const double before = std::exp(-0.5 * j.time) * std::pow(1.5, &j - path.jumps.data());
      EXPECT_NEAR(j.pre[0] / before, 1.0, 1e-10);
      EXPECT_EQ(j.post, apply_jump(m, j.pre, j.mark));
    }
  }
  EXPECT_GT(with_jumps, 10);
}

TEST(Path, PositiveAndIncreasingTimes) {
  PathConfig cfg;
  cfg.horizon = 2;
  cfg.dt_max = 1e-2;
  cfg.seed = 4;
  const auto path = simulate_path(scenario("brownian_suppressed"), cfg, 3);
  for (std::size_t r = 0; r < path.times.size(); ++r) {
    if (r > 0) {
      EXPECT_GT(path.times[r], path.times[r - 1]);
    }
    for (double v : path.states[r]) EXPECT_GT(v, 0.0);
  }
}

TEST(Path, CadlagQueries) {
  const auto m = linear_jump(0.5, 3.0, 1.0);
  PathConfig cfg;
  cfg.horizon = 2;
  cfg.dt_max = 0.05;
  const auto path = simulate_path(m, cfg, 1);
  ASSERT_FALSE(path.jumps.empty());
  for (const auto& j : path.jumps) {
    EXPECT_EQ(state_at(path, j.time, Side::Left), j.pre);
    EXPECT_EQ(state_at(path, j.time, Side::Right), j.post);
  }
}

TEST(Path, DeterministicPerSeedAndIndex) {
  PathConfig cfg;
  cfg.horizon = 1;
  cfg.seed = 99;
  const auto m = scenario("product_lyapunov");
  const auto a = simulate_path(m, cfg, 5), b = simulate_path(m, cfg, 5), c = simulate_path(m, cfg, 6);
  EXPECT_EQ(a.times, b.times);
  EXPECT_EQ(a.states, b.states);
  EXPECT_NE(a.states.back(), c.states.back());
}

TEST(Path, RecordStrideKeepsJumpsAndEnd) {
  const auto m = linear_jump(0.5, 3.0, 1.0);
  PathConfig cfg;
  cfg.horizon = 1;
  cfg.dt_max = 1e-3;
  cfg.record_stride = 100;
  const auto full = simulate_path(m, PathConfig{1, 1e-3}, 2);
  const auto thin = simulate_path(m, cfg, 2);
  EXPECT_LT(thin.times.size(), full.times.size() / 10);
  EXPECT_EQ(thin.jumps.size(), full.jumps.size());
  EXPECT_EQ(thin.states.back(), full.states.back());
}

TEST(Config, Validation) {
  PathConfig cfg;
  cfg.dt_max = 2;
  EXPECT_THROW(cfg.validate(), PreconditionError);
  cfg = {};
  cfg.zero_threshold = 2;
  EXPECT_THROW(cfg.validate(), PreconditionError);
  cfg = {};
  cfg.record_stride = 0;
  EXPECT_THROW(cfg.validate(), PreconditionError);
}

TEST(Ensemble, ConstantModelStaysAtX0) {
  const auto m = make_model({0, 0}, Matrix(2, 2), Matrix(2, 2), JumpKernel(), {2.0, 3.0});
  PathConfig cfg;
  cfg.horizon = 1;
  cfg.dt_max = 0.1;
  const auto s = simulate_ensemble(m, cfg, 100, uniform_grid(1, 11));
  for (std::size_t i = 0; i < 100; ++i)
    for (std::size_t g = 0; g < 11; ++g) {
      EXPECT_EQ(s.state(i, g)[0], 2.0);
      EXPECT_EQ(s.state(i, g)[1], 3.0);
    }
}

TEST(Ensemble, BitIdenticalAcrossRunsAndThreads) {
  PathConfig cfg;
  cfg.horizon = 2;
  cfg.dt_max = 1e-2;
  cfg.seed = 17;
  const auto m = scenario("brownian_suppressed");
  const auto grid = uniform_grid(2, 21);
  const auto a = simulate_ensemble(m, cfg, 64, grid, 1);
  const auto b = simulate_ensemble(m, cfg, 64, grid, 1);
  const auto c = simulate_ensemble(m, cfg, 64, grid, 4);
  ASSERT_EQ(a.states.size(), c.states.size());
  EXPECT_EQ(std::memcmp(a.states.data(), b.states.data(), a.states.size() * sizeof(double)), 0);
  EXPECT_EQ(std::memcmp(a.states.data(), c.states.data(), a.states.size() * sizeof(double)), 0);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(a.ends[i].time, c.ends[i].time);
}

TEST(Ensemble, GridOutsideHorizonRejected) {
  PathConfig cfg;
  EXPECT_THROW(simulate_ensemble(scenario("logistic1d"), cfg, 1, Vec{0.0, 2.0}), PreconditionError);
  EXPECT_THROW(simulate_ensemble(scenario("logistic1d"), cfg, 1, Vec{0.5, 0.5}), PreconditionError);
}

TEST(Ensemble, ExplodedPathsAreNaNAfterExplosion) {
  PathConfig cfg;
  cfg.horizon = 1;
  const auto s = simulate_ensemble(scenario("cooperative_blowup"), cfg, 3, uniform_grid(1, 11));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(s.ends[i].status, PathStatus::Exploded);
    EXPECT_FALSE(std::isnan(s.state(i, 6)[0]));  // t = 0.6 < ln 2
    EXPECT_TRUE(std::isnan(s.state(i, 7)[0]));
    EXPECT_TRUE(std::isinf(s.terminal[i].norm));
  }
}

TEST(Ensemble, JumpSuppressedDoesNotExplode) {
  PathConfig cfg;
  cfg.horizon = 5;
  cfg.dt_max = 1e-2;
  cfg.seed = 2024;
  const auto s = simulate_ensemble(scenario("jump_suppressed"), cfg, 1000, uniform_grid(5, 51), 4);
  const auto pos = positivity_report(s);
  EXPECT_EQ(pos.exploded, 0u);
  EXPECT_EQ(pos.hit_zero, 0u);
  EXPECT_EQ(pos.nonpositive_states, 0u);
}

TEST(Ensemble, WeakOrderSanity) {
  // smooth test model: logistic drift with mild noise and bounded jumps
  const auto m = make_model({1.0}, Matrix{{-1.0}}, Matrix{{0.3}}, JumpKernel({{1.0, ConstantJump{{0.2}}}}), {0.5});
  PathConfig coarse;
  coarse.horizon = 1;
  coarse.dt_max = 1e-2;
  coarse.seed = 31;
  PathConfig fine = coarse;
  fine.dt_max = 5e-3;
  const Vec grid{0.0, 0.5, 1.0};
  const auto a = estimate_moment(simulate_ensemble(m, coarse, 10000, grid, 4), 1.0);
  const auto b = estimate_moment(simulate_ensemble(m, fine, 10000, grid, 4), 1.0);
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double se = std::hypot(a.stderrs[g], b.stderrs[g]);
    EXPECT_LE(std::abs(a.estimates[g] - b.estimates[g]), 3 * se) << "t=" << grid[g];
  }
}

}  // namespace
