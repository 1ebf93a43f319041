#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "lvj/model.hpp"
#include "lvj/scenarios.hpp"

namespace {

using namespace lvj;

Model two_species(Matrix sigma, std::vector<Mark> marks = {}) {
  return make_model({1.0, 1.0}, Matrix{{-1.0, 0.0}, {0.0, -1.0}}, std::move(sigma), JumpKernel(std::move(marks)),
                    {1.0, 1.0});
}

TEST(Validate, IdentitySigmaSatisfiesH2) {
  EXPECT_TRUE(validate_model(two_species(Matrix::identity(2))).h2_holds);
}

TEST(Validate, NegativeOffDiagonalBreaksH2) {
  EXPECT_FALSE(validate_model(two_species(Matrix{{1.0, -0.1}, {0.0, 1.0}})).h2_holds);
}

TEST(Validate, ZeroDiagonalBreaksH2) {
  EXPECT_FALSE(validate_model(two_species(Matrix{{0.0, 0.0}, {0.0, 1.0}})).h2_holds);
}

TEST(Validate, ConstantBelowMinusOneViolatesH1) {
  const auto m = make_model({1.0}, Matrix{{-1.0}}, Matrix(1, 1), JumpKernel({{1.0, ConstantJump{{-1.5}}}}), {1.0});
  const auto rep = validate_model(m);
  EXPECT_FALSE(rep.h1_pointwise_ok);
  // every probed point has |x| >= 1e-3 > eps0, so every probe is a violation
  EXPECT_EQ(rep.h1_violations.size(), rep.points_probed);
  for (const auto& v : rep.h1_violations) EXPECT_DOUBLE_EQ(v.value, -1.5);
}

TEST(Validate, NonPositiveX0IsReportedNotThrown) {
  const auto m = make_model({1.0}, Matrix{{-1.0}}, Matrix(1, 1), JumpKernel(), {0.0});
  const auto rep = validate_model(m);
  EXPECT_FALSE(rep.x0_positive);
}

TEST(Validate, DimensionMismatchThrows) {
  EXPECT_THROW(make_model({1.0, 1.0}, Matrix{{-1.0}}, Matrix(2, 2), JumpKernel(), {1.0, 1.0}), ModelError);
  EXPECT_THROW(make_model({1.0}, Matrix{{-1.0}}, Matrix(1, 1), JumpKernel({{1.0, ConstantJump{{0.1, 0.2}}}}),
                          {1.0}),
               ModelError);
  EXPECT_THROW(make_model({1.0}, Matrix{{-1.0}}, Matrix(1, 1), JumpKernel(), {1.0, 2.0}), ModelError);
}

TEST(Validate, NonPositiveRateThrows) {
  EXPECT_THROW(JumpKernel({{0.0, ConstantJump{{0.1}}}}), ModelError);
  EXPECT_THROW(JumpKernel({{-1.0, ConstantJump{{0.1}}}}), ModelError);
}

TEST(Validate, PolyWithConstantTermIsNotZeroAtOrigin) {
  const auto m = make_model({1.0}, Matrix{{-1.0}}, Matrix(1, 1),
                            JumpKernel({{1.0, PolyJump{{1.0}, {0.5, 0.0, 0.0, 1.0}}}}), {1.0});
  const auto rep = validate_model(m);
  EXPECT_FALSE(rep.zero_at_origin);
  EXPECT_FALSE(rep.h1_pointwise_ok);
}

TEST(Validate, LipschitzProbeGrowsWithBallForCubicKernel) {
  const auto rep = validate_model(scenario("jump_suppressed"));
  ASSERT_EQ(rep.lipschitz_probe.size(), 4u);
  for (std::size_t i = 1; i < rep.lipschitz_probe.size(); ++i)
    EXPECT_GE(rep.lipschitz_probe[i].constant, rep.lipschitz_probe[i - 1].constant);
  // squared ratio grows like 9 r^4 for a cubic map
  EXPECT_GT(rep.lipschitz_probe[3].constant, 1e6 * rep.lipschitz_probe[1].constant);
}

TEST(Kernel, ConstantRampIsZeroAtOriginAndFlatOutside) {
  JumpKernel k({{1.0, ConstantJump{{0.5, -0.3}}}});
  const Vec zero{0.0, 0.0};
  EXPECT_EQ(k.eval(zero, 0), (Vec{0.0, 0.0}));
  const Vec half_ramp{0.5 * kConstantRampWidth, 0.0};
  EXPECT_DOUBLE_EQ(k.eval(half_ramp, 0)[0], 0.25);
  const Vec far{1e-3, 2.0};
  EXPECT_EQ(k.eval(far, 0), (Vec{0.5, -0.3}));
}

TEST(Kernel, PolyExampleIsPositiveAwayFromOrigin) {
  JumpKernel k({{2.0, PolyJump{{1.0, 0.25}, {0.0, 0.0, 0.0, 1.0}}}});
  RngStream rng(11, 0);
  for (int i = 0; i < 1000; ++i) {
    const Vec x{std::exp(6 * rng.uniform() - 3), std::exp(6 * rng.uniform() - 3)};
    for (double h : k.eval(x, 0)) EXPECT_GT(h, 0.0);
  }
}

TEST(Kernel, EvaluationIsBitwisePure) {
  const auto m = scenario("product_lyapunov");
  const Vec x{0.37, 12.5};
  const auto a = m.kernel.eval(x, 0);
  const auto b = m.kernel.eval(x, 0);
  EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)), 0);
}

TEST(Kernel, CheckedEvalRejectsInadmissibleValues) {
  JumpKernel k({{1.0, ConstantJump{{-1.0}}}});
  Vec out(1);
  const Vec x{1.0};
  EXPECT_THROW(k.eval_checked(x, 0, out), KernelAdmissibilityError);
}

TEST(Scenario, Logistic) {
  const auto m = scenario("logistic1d");
  EXPECT_EQ(m.n, 1u);
  EXPECT_EQ(m.b, Vec{1.0});
  EXPECT_EQ(m.A(0, 0), -1.0);
  EXPECT_TRUE(m.sigma.is_zero());
  EXPECT_TRUE(m.kernel.empty());
  EXPECT_EQ(m.x0, Vec{0.5});
}

TEST(Scenario, CooperativeBlowup) {
  const auto m = scenario("cooperative_blowup");
  EXPECT_EQ(m.A(0, 0), 1.0);
  EXPECT_TRUE(m.kernel.empty());
}

TEST(Scenario, JumpSuppressedUsesCubicKernel) {
  const auto m = scenario("jump_suppressed");
  ASSERT_EQ(m.kernel.size(), 1u);
  EXPECT_EQ(m.kernel.rate(0), 1.0);
  const auto& poly = std::get<PolyJump>(m.kernel.mark(0).map);
  EXPECT_EQ(poly.degree(), 3u);
  EXPECT_EQ(poly.gamma, Vec{1.0});
  EXPECT_EQ(m.A(0, 0), 1.0);
}

TEST(Scenario, DocumentedVerdicts) {
  struct Expect {
    const char* name;
    bool h1, h2;
  };
  for (const auto& e : {Expect{"logistic1d", true, false}, Expect{"cooperative_blowup", true, false},
                        Expect{"jump_suppressed", true, false}, Expect{"brownian_suppressed", true, true},
                        Expect{"product_lyapunov", true, true}}) {
    const auto rep = validate_model(scenario(e.name));
    EXPECT_EQ(rep.h1_pointwise_ok, e.h1) << e.name;
    EXPECT_EQ(rep.h2_holds, e.h2) << e.name;
    EXPECT_TRUE(rep.x0_positive) << e.name;
  }
}

TEST(Scenario, UnknownNameListsAvailable) {
  try {
    scenario("nope");
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("jump_suppressed"), std::string::npos);
  }
}

TEST(Scenario, Overrides) {
  const auto m = scenario("brownian_suppressed", {{"x0", {2.0, 3.0}}, {"rates", {4.0}}});
  EXPECT_EQ(m.x0, (Vec{2.0, 3.0}));
  EXPECT_EQ(m.kernel.total_rate(), 4.0);
  EXPECT_THROW(scenario("logistic1d", {{"bogus", {1.0}}}), ModelError);
  EXPECT_THROW(scenario("logistic1d", {{"A", {1.0, 2.0}}}), ModelError);
}

}  // namespace
