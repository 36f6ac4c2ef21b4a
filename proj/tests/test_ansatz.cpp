#include <gtest/gtest.h>

#include <array>
#include <random>

#include "test_util.hpp"

namespace steer {
namespace {

// Independent reference: adaptive two-dimensional quadrature of
// |t1 t2 t3| / (n^T T^-2 n)^2 over the sphere in double precision.
constexpr double kRadius_090_080_070 = 0.6230515123209431;
constexpr double kRadius_025_060_030 = 1.247427378783882;
constexpr double kRadius_020_050_030 = 1.4413458924659028;

double radius_from(const JevticDensity& d) {
  return 2.0 * kPi * d.n_t * std::abs(d.t_diag.prod());
}

TEST(Ansatz, IsotropicNormalization) {
  for (double p : {0.3, 0.5, 0.8, 1.0}) {
    const auto d = normalize_jevtic(Vec3(-p, -p, -p));
    // The integrand is the constant p^4, so N_T = 1 / (4 pi p^4).
    EXPECT_NEAR(d.n_t, 1.0 / (4 * kPi * std::pow(p, 4)), 1e-14 * d.n_t);
  }
  EXPECT_NEAR(normalize_jevtic(Vec3(-0.5, -0.5, -0.5)).n_t, 1.2732395447351628, 1e-14);
  EXPECT_NEAR(normalize_jevtic(Vec3(1, 1, 1)).n_t, 1 / (4 * kPi), 1e-15);
}

TEST(Ansatz, AnisotropicNormalization) {
  const std::array<std::pair<Vec3, double>, 3> cases = {{
      {Vec3(0.9, 0.8, 0.7), kRadius_090_080_070},
      {Vec3(0.25, 0.6, -0.3), kRadius_025_060_030},
      {Vec3(0.2, 0.5, 0.3), kRadius_020_050_030},
  }};
  for (const auto& [t, r] : cases) {
    const auto d = normalize_jevtic(t);
    EXPECT_NEAR(radius_from(d), r, 1e-8 * r);
    EXPECT_LE(d.rel_error, 1e-8);
  }
  EXPECT_NEAR(normalize_jevtic(Vec3(0.9, 0.8, 0.7)).n_t, kRadius_090_080_070 / (2 * kPi * 0.504),
              1e-9);
}

TEST(Ansatz, NormalizedDensityIntegratesToOne) {
  const auto d = normalize_jevtic(Vec3(0.3, -0.7, 0.5));
  const double total = integrate_sphere([&](const Vec3& n) { return evaluate_jevtic(d, n); }, 512);
  EXPECT_NEAR(total, 1.0, 1e-8);
}

TEST(Ansatz, DegenerateT) {
  try {
    normalize_jevtic(Vec3(0.5, 0.0, 0.3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateT);
  }
}

TEST(Ansatz, EvaluateIsotropicAndAxis) {
  std::mt19937_64 rng(1);
  const auto iso = normalize_jevtic(Vec3(-0.6, -0.6, -0.6));
  for (int k = 0; k < 20; ++k) EXPECT_NEAR(evaluate_jevtic(iso, random_unit(rng)), 1 / (4 * kPi), 1e-15);
  const Vec3 t(0.9, -0.5, 0.3);
  const auto d = normalize_jevtic(t);
  EXPECT_NEAR(evaluate_jevtic(d, Vec3::UnitX()), d.n_t * std::pow(0.9, 4), 1e-15);
  EXPECT_THROW(evaluate_jevtic(d, Vec3(1, 1, 0)), Error);
}

TEST(Ansatz, DensityIsEven) {
  std::mt19937_64 rng(2);
  const auto d = normalize_jevtic(Vec3(0.8, -0.4, 0.6));
  for (int k = 0; k < 100; ++k) {
    const Vec3 n = random_unit(rng);
    EXPECT_EQ(evaluate_jevtic(d, n), evaluate_jevtic(d, -n));
  }
}

TEST(Ansatz, PermutationAndSignInvariance) {
  const Vec3 t(0.9, 0.5, 0.3);
  const double base = normalize_jevtic(t).n_t;
  const std::array<std::array<int, 3>, 6> perms = {
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  std::mt19937_64 rng(3);
  for (const auto& p : perms) {
    const Vec3 tp(t[p[0]], t[p[1]], t[p[2]]);
    const auto d = normalize_jevtic(tp);
    EXPECT_NEAR(d.n_t, base, 1e-10 * base);
    const auto d0 = normalize_jevtic(t);
    for (int k = 0; k < 10; ++k) {
      const Vec3 n = random_unit(rng);
      // Coordinates of n permuted the same way as t.
      Vec3 np;
      np << n[p[0]], n[p[1]], n[p[2]];
      EXPECT_NEAR(d.unnormalized(np), d0.unnormalized(n), 1e-12 * d0.unnormalized(n));
    }
  }
  for (int mask = 0; mask < 8; ++mask) {
    Vec3 ts = t;
    for (int i = 0; i < 3; ++i)
      if (mask & (1 << i)) ts[i] = -ts[i];
    EXPECT_EQ(normalize_jevtic(ts).n_t, base);
  }
}

TEST(Ansatz, GridCounts) {
  const auto pair = fibonacci_grid(2);
  ASSERT_EQ(pair.size(), 2u);
  EXPECT_EQ(pair.atoms[0].weight, 0.5);
  EXPECT_EQ(pair.atoms[1].weight, 0.5);
  EXPECT_EQ(pair.atoms[0].n, -pair.atoms[1].n);
  EXPECT_THROW(fibonacci_grid(0), Error);
  EXPECT_THROW(fibonacci_grid(7), Error);
  EXPECT_NO_THROW(fibonacci_grid(7, std::nullopt, false));
}

TEST(Ansatz, UniformGridBarycenter) {
  const auto m = fibonacci_grid(4096);
  EXPECT_LE(m.barycenter().norm(), 1e-3);
  EXPECT_TRUE(m.has_antipodal_pairs());
  EXPECT_NO_THROW(m.validate());
}

TEST(Ansatz, WernerDensityGivesEqualWeights) {
  const auto m = jevtic_measure(canonicalize_tstate(epr_map(werner_state(0.4))), 4096);
  for (const auto& a : m.atoms) EXPECT_NEAR(a.weight * 4096, 1.0, 1e-12);
}

TEST(Ansatz, JevticMeasureIsSymmetricAndNormalized) {
  const auto m = jevtic_measure(TStateForm::diagonal(Vec3(0.9, -0.5, 0.3)), 1024);
  EXPECT_TRUE(m.has_antipodal_pairs());
  EXPECT_NEAR(m.total_weight(), 1.0, 1e-12);
  EXPECT_LE(m.barycenter().norm(), 1e-15);
}

TEST(Ansatz, ProjectionRestoresConstraints) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 10; ++k) {
    SphereMeasure m = fibonacci_grid(512);
    m.barycenter_target = 0.3 * random_unit(rng);
    const auto p = projected(m);
    EXPECT_NEAR(p.total_weight(), 1.0, 1e-12);
    EXPECT_LE(p.barycenter_error(), 1e-12);
    for (const auto& a : p.atoms) EXPECT_GE(a.weight, 0.0);
  }
}

TEST(Ansatz, GridRefinementConverges) {
  const auto map = epr_map(tstate(Vec3(-0.9, -0.8, -0.7)));
  const auto form = canonicalize_tstate(map);
  const double exact = tstate_critical_radius(form).value;
  std::array<double, 3> r{};
  const std::array<int, 3> counts = {1024, 4096, 16384};
  for (std::size_t k = 0; k < 3; ++k)
    r[k] = principal_radius(jevtic_measure(form, counts[k]), map).value;
  EXPECT_LE(r[0], r[1]);
  EXPECT_LE(r[1], r[2]);
  EXPECT_LE(r[2], exact);
  EXPECT_LE(2.0 * std::abs(r[2] - r[1]), std::abs(r[1] - r[0]));
}

}  // namespace
}  // namespace steer
