#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bearing_obs/excitation.hpp"
#include "oracles.hpp"

using namespace bearing_obs;

namespace {

DirectionSignal circle_signal(double h, double duration) {
  std::vector<Vector> ys;
  const auto n = static_cast<std::size_t>(std::llround(duration / h)) + 1;
  for (std::size_t i = 0; i < n; ++i) ys.push_back(oracle::circle_bearing(i * h));
  return DirectionSignal(0.0, h, std::move(ys));
}

DirectionSignal constant_signal(const Vector& y, double h, std::size_t n) {
  return DirectionSignal(0.0, h, std::vector<Vector>(n, y));
}

}  // namespace

TEST(DirectionSignal, RejectsNonUniformTimes) {
  const std::vector<double> t{0.0, 0.1, 0.25};
  std::vector<Vector> ys(3, Vector{{0.0, 0.0, 1.0}});
  EXPECT_THROW(DirectionSignal::from_samples(t, ys), std::invalid_argument);
  const std::vector<double> ok{1.0, 1.1, 1.2};
  const DirectionSignal s = DirectionSignal::from_samples(ok, ys);
  EXPECT_DOUBLE_EQ(s.t0(), 1.0);
  EXPECT_NEAR(s.h(), 0.1, 1e-15);
}

TEST(DirectionSignal, WindowTooShort) {
  const DirectionSignal s = constant_signal(Vector{{0.0, 0.0, 1.0}}, 0.1, 10);
  EXPECT_THROW(s.window_steps(5.0), WindowTooShort);
  EXPECT_THROW(pe_integral(s, 5.0), WindowTooShort);
  EXPECT_NO_THROW(s.window_steps(0.5));
}

TEST(PeIntegral, ConstantBearingHasZeroLambda) {
  const DirectionSignal s = constant_signal(Vector{{0.0, 0.6, 0.8}}, 0.01, 2001);
  for (double l : pe_integral(s, 10.0)) ASSERT_NEAR(l, 0.0, 1e-12);
  const PEReport r = pe_report(s, 10.0, 0.05, 0.5);
  EXPECT_FALSE(r.passes_integral);
  EXPECT_FALSE(r.passes_derivative);
  EXPECT_EQ(r.gamma, 0.0);
}

TEST(PeIntegral, CircleMatchesQuadratureOracle) {
  const double delta = 4.0 * M_PI;
  const DirectionSignal s = circle_signal(0.01, 40.0);
  const std::vector<double> lam = pe_integral(s, delta);
  for (std::size_t i = 0; i < lam.size(); i += 97) {
    const double ref = oracle::simpson_lambda_min(oracle::circle_bearing, s.time(i),
                                                  s.window_steps(delta) * s.h(), 20000);
    ASSERT_NEAR(lam[i], ref, 1e-4 * delta) << "window " << i;
  }
  // over a full turn the Gramian is diag(0.95, 0.95, 0.1) delta
  EXPECT_NEAR(lam.front(), 0.1 * delta, 1e-3);
}

TEST(PeScalar, LowerBoundedByLambdaMin) {
  // brute force over random unit b: every scalar integral is at least lambda_min,
  // and the minimum over many b comes close to it
  const double delta = 2.0;
  const DirectionSignal s = circle_signal(0.01, 6.0);
  const double lam = pe_integral(s, delta).front();
  std::mt19937_64 rng(9);
  double best = 1e300;
  for (int i = 0; i < 10000; ++i) {
    const DirectionVector b(oracle::random_unit(rng, 3));
    const double v = pe_scalar(s, b, delta).front();
    ASSERT_GE(v, lam - 1e-12);
    best = std::min(best, v);
  }
  EXPECT_LT(best - lam, 0.02 * delta);
}

TEST(PeDerivative, CircleRate) {
  // |dy/dt| for the circle is 0.5 / sqrt(10) everywhere
  const DirectionSignal s = circle_signal(0.01, 30.0);
  for (double d : ydot_norms(s)) ASSERT_NEAR(d, 0.5 / std::sqrt(10.0), 1e-4);
  for (bool ok : pe_derivative(s, 4.0 * M_PI, 0.05)) ASSERT_TRUE(ok);
  for (bool ok : pe_derivative(s, 4.0 * M_PI, 0.2)) ASSERT_FALSE(ok);
}

TEST(WindowMax, MatchesBruteForce) {
  std::mt19937_64 rng(2);
  std::vector<Vector> ys;
  for (int i = 0; i < 400; ++i) ys.push_back(oracle::random_unit(rng, 3));
  const DirectionSignal s(0.0, 0.1, ys);
  const std::vector<double> d = ydot_norms(s);
  const std::size_t w = 37;
  const std::vector<double> m = window_max_ydot(s, w);
  for (std::size_t i = 0; i < m.size(); ++i) {
    double ref = 0.0;
    for (std::size_t j = i; j <= i + w && j < d.size(); ++j) ref = std::max(ref, d[j]);
    ASSERT_EQ(m[i], ref) << i;
  }
}

TEST(PeReport, CircleCertifiesAndGammaFormula) {
  const double delta = 4.0 * M_PI;
  const DirectionSignal s = circle_signal(0.01, 100.0);
  const PEReport r = pe_report(s, delta, 0.05, 0.5);
  EXPECT_TRUE(r.passes());
  EXPECT_GT(r.mu, 0.0);
  const double k = 0.5;
  EXPECT_NEAR(r.gamma, r.mu * k / (delta * std::pow(1 + k * k * delta, 2)), 1e-15);
}

TEST(EquivalenceAudit, AgreesOnMixedSignal) {
  // 10 s stretches of a turning bearing alternating with a frozen one,
  // audited on 5 s windows that sit inside each stretch
  const double h = 0.01;
  std::vector<Vector> ys;
  for (int seg = 0; seg < 6; ++seg) {
    for (int i = 0; i < 1000; ++i) {
      const double t = (seg * 1000 + i) * h;
      ys.push_back(seg % 2 == 0 ? oracle::circle_bearing(t) : Vector(ys.back()));
    }
  }
  const DirectionSignal s(0.0, h, ys);
  const EquivalenceAudit a = pe_equivalence_audit(s, 5.0, 1000);
  EXPECT_TRUE(a.consistent());
  ASSERT_EQ(a.windows.size(), 6u);
  for (std::size_t i = 0; i < a.windows.size(); ++i) {
    EXPECT_EQ(a.windows[i].integral_pass, i % 2 == 0) << i;
  }
}

TEST(IndistinguishablePair, SameRayBothWays) {
  const Vector v{{-0.23, -0.46, -0.69}};
  const Vector a{{0.33, 0.66, 0.99}};
  const auto [x1, x2] = indistinguishable_pair(v, a, 1.0, 3.0);
  EXPECT_LT((x1.normalized() - x2.normalized()).norm(), 1e-15);
  EXPECT_THROW(indistinguishable_pair(v, a, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(indistinguishable_pair(-a, a, 1.0, 2.0), DegenerateDirection);
}

TEST(DistinguishingInput, Shape) {
  const auto f = distinguishing_input(3);
  EXPECT_NEAR(f(0.0)[0], 1.0, 1e-15);
  EXPECT_NEAR(f(M_PI / 2)[1], 1.0, 1e-15);
  EXPECT_EQ(f(1.0)[2], 0.0);
  EXPECT_THROW(distinguishing_input(1), std::invalid_argument);
}
