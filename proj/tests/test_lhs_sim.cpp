#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

#include "test_util.hpp"

namespace steer {
namespace {

SphereMeasure uniform(int count) { return fibonacci_grid(count); }

TEST(LhsSim, HemisphereResponseAtThreshold) {
  const auto map = epr_map(werner_state(0.5));
  ResponseModel model{uniform(4096), Vec3::UnitZ(), {}};
  for (const auto& a : model.measure.atoms) model.beta.push_back(a.n.z() < 0.0 ? 1.0 : 0.0);
  EXPECT_LE(verify_response(model, map, Vec3::UnitZ()).max(), 1e-3);
}

TEST(LhsSim, ResponseResidualAndSwap) {
  const auto map = epr_map(werner_state(0.45));
  const auto m = uniform(1024);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 10; ++k) {
    const Vec3 x = random_unit(rng);
    const auto plus = build_response(m, map, x);
    const auto minus = build_response(m, map, -x);
    EXPECT_LE(verify_response(plus, map, x).max(), 1e-9);
    ASSERT_EQ(plus.beta.size(), minus.beta.size());
    for (std::size_t j = 0; j < plus.beta.size(); ++j) {
      EXPECT_GE(plus.beta[j], 0.0);
      EXPECT_LE(plus.beta[j], 1.0);
      EXPECT_NEAR(plus.beta[j], 1.0 - minus.beta[j], 1e-12);
    }
  }
}

TEST(LhsSim, CompletenessAndProbabilities) {
  const auto map = epr_map(werner_state(0.4));
  const Vec3 x = Vec3(1, 1, 1).normalized();
  const auto model = build_response(uniform(1024), map, x);
  Vec4 row1 = Vec4::Zero(), row2 = Vec4::Zero();
  for (std::size_t j = 0; j < model.measure.size(); ++j) {
    const Vec4 g = lift(model.measure.atoms[j].weight, model.measure.atoms[j].n);
    row1 += model.beta[j] * g;
    row2 += (1.0 - model.beta[j]) * g;
  }
  EXPECT_LE((row1 + row2 - map.reduced_state()).norm(), 1e-9);
  EXPECT_NEAR(row1[0] + row2[0], 1.0, 1e-12);
  EXPECT_NEAR(row1[0], steering_outcome(map, x)[0], 1e-9);
}

TEST(LhsSim, SteerableOutcomeEscapes) {
  const auto map = epr_map(werner_state(0.8));
  try {
    build_response(uniform(1024), map, Vec3::UnitZ());
    FAIL();
  } catch (const OutcomeOutsideBox& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutcomeOutsideBox);
    EXPECT_GT(e.residual(), 1e-3);
    EXPECT_GT(e.gap(), 1e-3);
    ASSERT_TRUE(e.separator().has_value());
  }
}

TEST(LhsSim, PerturbedBetaResidualIsLinear) {
  const auto map = epr_map(werner_state(0.4));
  const Vec3 x = Vec3::UnitY();
  auto model = build_response(uniform(256), map, x);
  const std::size_t j = 17;
  const double base = verify_response(model, map, x).outcome1;
  ASSERT_LE(base, 1e-9);
  model.beta[j] += 0.1;
  const double expected = 0.1 * model.measure.atoms[j].weight * std::sqrt(2.0);
  const auto res = verify_response(model, map, x);
  EXPECT_NEAR(res.outcome1, expected, 1e-9);
  EXPECT_NEAR(res.outcome2, expected, 1e-9);
}

TEST(LhsSim, ZeroShots) {
  const auto map = epr_map(werner_state(0.4));
  const auto model = build_response(uniform(64), map, Vec3::UnitX());
  const auto rep = simulate({model}, map, 0, 1);
  EXPECT_EQ(rep.shots, 0);
  EXPECT_TRUE(rep.measurements.empty());
  EXPECT_EQ(rep.max_abs_z, 0.0);
}

TEST(LhsSim, DeterministicResponseStatistics) {
  // Hemisphere responses, beta in {0, 1}: only sampling noise remains.
  const auto map = epr_map(werner_state(0.5));
  std::mt19937_64 rng(2);
  std::vector<ResponseModel> models;
  for (int k = 0; k < 5; ++k) {
    const Vec3 x = random_unit(rng);
    ResponseModel model{uniform(4096), x, {}};
    for (const auto& a : model.measure.atoms) model.beta.push_back(a.n.dot(x) < 0.0 ? 1.0 : 0.0);
    models.push_back(model);
  }
  const auto rep = simulate(models, map, 100000, 5);
  EXPECT_LE(rep.max_abs_z, 5.0);
}

TEST(LhsSim, SimulationMatchesPrediction) {
  const auto map = epr_map(werner_state(0.45));
  const auto m = jevtic_measure(canonicalize_tstate(map), 1024);
  std::mt19937_64 rng(3);
  std::vector<ResponseModel> models;
  for (int k = 0; k < 5; ++k) models.push_back(build_response(m, map, random_unit(rng)));
  const auto rep = simulate(models, map, 200000, 9);
  EXPECT_LE(rep.max_abs_z, 5.0);
  EXPECT_EQ(rep.measurements.size(), 5u);
  for (const auto& ms : rep.measurements)
    EXPECT_EQ(ms.outcome[0].count + ms.outcome[1].count, 200000);
}

TEST(LhsSim, ThreadCountDoesNotChangeResults) {
  const auto map = epr_map(werner_state(0.4));
  const auto model = build_response(uniform(256), map, Vec3::UnitZ());
  setenv("STEER_THREADS", "1", 1);
  const auto a = simulate({model}, map, 50000, 4);
  setenv("STEER_THREADS", "3", 1);
  const auto b = simulate({model}, map, 50000, 4);
  unsetenv("STEER_THREADS");
  EXPECT_EQ(a.measurements[0].outcome[0].count, b.measurements[0].outcome[0].count);
  EXPECT_EQ(a.measurements[0].outcome[0].simulated_bloch, b.measurements[0].outcome[0].simulated_bloch);
  EXPECT_EQ(a.max_abs_z, b.max_abs_z);
}

TEST(LhsSim, UnsteerableWernerAlwaysDecomposes) {
  std::mt19937_64 rng(4);
  std::vector<Vec3> axes;
  for (int k = 0; k < 100; ++k) axes.push_back(random_unit(rng));
  for (double p : {0.3, 0.45}) {
    const auto map = epr_map(werner_state(p));
    for (int count : {1024, 4096}) {
      const auto m = uniform(count);
      for (const auto& x : axes) {
        const auto model = build_response(m, map, x);
        EXPECT_LE(verify_response(model, map, x).max(), 1e-9);
      }
    }
  }
}

TEST(LhsSim, ThresholdFailuresShrinkWithGrid) {
  const auto map = epr_map(werner_state(0.5));
  std::vector<int> failures;
  for (int count : {1024, 4096}) {
    const auto m = uniform(count);
    std::mt19937_64 axes(6);
    int f = 0;
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      try {
        build_response(m, map, random_unit(axes));
      } catch (const OutcomeOutsideBox& e) {
        ++f;
        worst = std::max(worst, e.gap());
      }
    }
    EXPECT_LE(worst, 1e-2);
    failures.push_back(f);
  }
  EXPECT_LE(failures[1], failures[0]);
}

}  // namespace
}  // namespace steer
