#include <gtest/gtest.h>

#include <random>

#include "routesignal/dynamics.hpp"
#include "routesignal/model.hpp"
#include "routesignal/rng.hpp"
#include "routesignal/simplex.hpp"
#include "test_support.hpp"

using namespace routesignal;
using routesignal::testing::random_affine_config;
using routesignal::testing::random_simplex_point;
using routesignal::testing::two_link_affine;

TEST(EvalLatency, ReferenceModelByHand) {
  const auto m = two_link_affine();
  const Vector f1{0.5, 0.5};
  const auto l1 = eval_latency(m, 0, f1);
  EXPECT_DOUBLE_EQ(l1[0], 7.0);
  EXPECT_DOUBLE_EQ(l1[1], 26.0);
  const Vector f2{1.0, 0.0};
  const auto l2 = eval_latency(m, 1, f2);
  EXPECT_DOUBLE_EQ(l2[0], 21.0);
  EXPECT_DOUBLE_EQ(l2[1], 15.0);
}

TEST(EvalLatency, ZeroFlowGivesFreeFlowTerms) {
  const auto m = LatencyModel::from_tensor({"a", "b"}, {{{1, 2, 3}, {4, 5, 6}},
                                                        {{1, 1, 1}, {1, 1, 1}},
                                                        {{7, 7, 7}, {0, 0, 0}}});
  const Vector zero(3, 0.0);
  for (std::size_t w = 0; w < 2; ++w) {
    const auto l = eval_latency(m, w, zero);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(l[i], m.coeff(0, w, i));
  }
}

TEST(EvalLatency, DimensionMismatchThrows) {
  const auto m = two_link_affine();
  const Vector f{0.1, 0.2, 0.3};
  EXPECT_THROW(eval_latency(m, 0, f), ConfigError);
  const Vector g{0.1, 0.2};
  EXPECT_THROW(eval_latency(m, 2, g), ConfigError);
}

TEST(EvalLatency, MonotoneInFlowByFiniteDifferences) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> c(0.0, 4.0), f(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<Vector>> t(4, std::vector<Vector>(2, Vector(3)));
    for (auto& d : t)
      for (auto& w : d)
        for (auto& v : w) v = c(gen);
    const auto m = LatencyModel::from_tensor({"a", "b"}, t);
    Vector x{f(gen), f(gen), f(gen)};
    for (std::size_t w = 0; w < 2; ++w)
      for (std::size_t i = 0; i < 3; ++i) {
        Vector xp = x;
        xp[i] += 1e-6;
        EXPECT_GE(eval_latency(m, w, xp)[i], eval_latency(m, w, x)[i]);
      }
  }
}

TEST(MMaxDefault, ReferenceModelIs51) { EXPECT_DOUBLE_EQ(m_max_default(two_link_affine()), 51.0); }

TEST(MMaxDefault, SingleStateLinks) {
  // 3 + 2f on both links: each link contributes 5
  const auto m = LatencyModel::from_tensor({"w"}, {{{3, 3}}, {{2, 2}}});
  EXPECT_DOUBLE_EQ(m_max_default(m), 10.0);
  const auto zero = LatencyModel::from_tensor({"w"}, {{{0, 0}}, {{0, 0}}});
  EXPECT_DOUBLE_EQ(m_max_default(zero), 0.0);
}

TEST(MMaxDefault, BoundsInstantaneousRegret) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> c(0.0, 5.0), mass(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 3;
    std::vector<std::vector<Vector>> t(3, std::vector<Vector>(2, Vector(n)));
    for (auto& d : t)
      for (auto& w : d)
        for (auto& v : w) v = c(gen);
    const auto m = LatencyModel::from_tensor({"a", "b"}, t);
    const double bound = m_max_default(m);
    const double nu = mass(gen);
    Signal sig{Matrix(2, n), nu};
    for (std::size_t w = 0; w < 2; ++w) {
      const auto row = random_simplex_point(gen, n, nu);
      for (std::size_t i = 0; i < n; ++i) sig.pi(w, i) = row[i];
    }
    const auto P = routesignal::testing::random_disobedience(gen, n);
    for (std::size_t w = 0; w < 2; ++w) {
      const auto f = random_simplex_point(gen, n, mass(gen));
      const auto ell = eval_latency(m, w, f);
      EXPECT_LE(std::abs(instantaneous_regret(sig, P, ell, w)), bound);
    }
  }
}

TEST(PFlows, ZeroThetaIsRecommendation) {
  const Signal sig{Matrix::from_rows({{0.3, 0.2}}), 0.5};
  const auto P = DisobedienceMatrix::uniform(2);
  const auto x = p_flows(sig, P, 0.0, 0);
  EXPECT_EQ(x[0], 0.3);
  EXPECT_EQ(x[1], 0.2);
}

TEST(PFlows, SwapByHand) {
  const Signal sig{Matrix::from_rows({{0.3, 0.2}}), 0.5};
  const auto P = DisobedienceMatrix::uniform(2);
  const auto full = p_flows(sig, P, 1.0, 0);
  EXPECT_NEAR(full[0], 0.2, 1e-15);
  EXPECT_NEAR(full[1], 0.3, 1e-15);
  const auto half = p_flows(sig, P, 0.5, 0);
  EXPECT_NEAR(half[0], 0.25, 1e-15);
  EXPECT_NEAR(half[1], 0.25, 1e-15);
}

TEST(ForecastFlows, ByHandAndAgreesWithPFlows) {
  const Signal sig{Matrix::from_rows({{0.5, 0.0}, {0.1, 0.4}}), 0.5};
  const auto P = DisobedienceMatrix::uniform(2);
  const auto xh = forecast_flows(sig, P, 0.25, 0);
  EXPECT_NEAR(xh[0], 0.375, 1e-15);
  EXPECT_NEAR(xh[1], 0.125, 1e-15);
  for (double th : {0.0, 0.3, 0.77, 1.0})
    for (std::size_t w = 0; w < 2; ++w) EXPECT_EQ(forecast_flows(sig, P, th, w), p_flows(sig, P, th, w));
  EXPECT_EQ(forecast_flows(sig, P, 0.0, 1), (Vector{0.1, 0.4}));
}

TEST(PFlows, RandomInputsStayOnSimplexAndAreAffine) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + trial % 4;
    const double nu = u(gen);
    Signal sig{Matrix(1, n), nu};
    const auto row = random_simplex_point(gen, n, nu);
    for (std::size_t i = 0; i < n; ++i) sig.pi(0, i) = row[i];
    const auto P = routesignal::testing::random_disobedience(gen, n);
    const double th = u(gen);
    const auto x = p_flows(sig, P, th, 0);
    const auto x0 = p_flows(sig, P, 0.0, 0);
    const auto x1 = p_flows(sig, P, 1.0, 0);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_GE(x[i], 0.0);
      s += x[i];
      EXPECT_NEAR(x[i], (1 - th) * x0[i] + th * x1[i], 1e-12);
    }
    EXPECT_NEAR(s, nu, kOutputSimplexTol);
  }
}

TEST(Validation, RejectsNegativeLowOrderCoefficients) {
  auto m = LatencyModel::from_tensor({"w"}, {{{-1, 2}}, {{1, 1}}});
  EXPECT_THROW(m.validate(), ConfigError);
  m = LatencyModel::from_tensor({"w"}, {{{1, 2}}, {{-1, 1}}});
  EXPECT_THROW(m.validate(), ConfigError);
  // higher-degree coefficients may be negative
  m = LatencyModel::from_tensor({"w"}, {{{1, 2}}, {{1, 1}}, {{-0.1, 0}}});
  EXPECT_NO_THROW(m.validate());
}

TEST(Validation, StrictIncreaseFlag) {
  const auto flat = LatencyModel::from_tensor({"w"}, {{{1, 2}}});
  EXPECT_NO_THROW(flat.validate(false));
  EXPECT_THROW(flat.validate(true), ConfigError);
  EXPECT_TRUE(two_link_affine().strictly_increasing());
}

TEST(Validation, PriorMustBeInterior) {
  EXPECT_THROW((Prior{{1.0, 0.0}}.validate(2)), ConfigError);
  EXPECT_THROW((Prior{{0.5, 0.6}}.validate(2)), ConfigError);
  EXPECT_NO_THROW((Prior{{0.6, 0.4}}.validate(2)));
}

TEST(Validation, SignalRowMassMessageNamesState) {
  const auto m = two_link_affine();
  const Signal bad{Matrix::from_rows({{0.3, 0.18}, {0.25, 0.25}}), 0.5};
  try {
    bad.validate(m);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("signal row w1 sums to 0.48, expected nu=0.5"),
              std::string::npos)
        << e.what();
  }
}

TEST(Validation, DegenerateParticipationIsLegal) {
  const auto m = two_link_affine();
  EXPECT_NO_THROW((Signal{Matrix(2, 2), 0.0}.validate(m)));
  EXPECT_NO_THROW(routesignal::testing::revealing_signal(1.0).validate(m));
}

TEST(Disobedience, DefaultsAndValidation) {
  const auto two = DisobedienceMatrix::uniform(2);
  EXPECT_EQ(two.p, Matrix::from_rows({{0, 1}, {1, 0}}));
  const auto four = DisobedienceMatrix::uniform(4);
  EXPECT_NO_THROW(four.validate(4));
  EXPECT_DOUBLE_EQ(four.p(2, 0), 1.0 / 3.0);
  DisobedienceMatrix diag{Matrix::from_rows({{0.5, 0.5}, {1, 0}})};
  EXPECT_THROW(diag.validate(2), ConfigError);
  DisobedienceMatrix short_row{Matrix::from_rows({{0, 0.9}, {1, 0}})};
  EXPECT_THROW(short_row.validate(2), ConfigError);
}

TEST(SimplexProjection, FeasibleAndIdempotent) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> g(0.0, 2.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 6;
    Vector v(n);
    for (auto& x : v) x = g(gen);
    const double mass = u(gen);
    const auto p = project_to_simplex(v, mass);
    EXPECT_NEAR(routesignal::testing::sum(p), mass, 1e-12);
    for (double x : p) EXPECT_GE(x, 0.0);
    const auto pp = project_to_simplex(p, mass);
    EXPECT_LT(routesignal::testing::linf(p, pp), 1e-12);
    // optimality: (v - p) . (q - p) <= 0 for any feasible q
    const auto q = random_simplex_point(gen, n, mass);
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += (v[i] - p[i]) * (q[i] - p[i]);
    EXPECT_LE(dot, 1e-10);
  }
  EXPECT_EQ(project_to_simplex(Vector{3.0, -1.0}, 0.0), (Vector{0.0, 0.0}));
}

TEST(Rng, SplitMixIsReproducibleAndSamplesThePrior) {
  SplitMix64 a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
  // reference output of SplitMix64 seeded with 0
  SplitMix64 z(0);
  EXPECT_EQ(z.next(), 0xe220a8397b1dcdafULL);

  SplitMix64 r(9);
  const Vector mu{0.6, 0.4};
  int hits = 0;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) hits += sample_index(r, mu) == 0;
  EXPECT_NEAR(static_cast<double>(hits) / draws, 0.6, 0.005);
}
