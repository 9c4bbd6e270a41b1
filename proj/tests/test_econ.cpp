#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sievesmm/econ.hpp"
#include "sievesmm/random.hpp"

using namespace sievesmm;

namespace {

PreferenceParams prefs(double gamma) {
  PreferenceParams p;
  p.gamma = gamma;
  return p;
}

} // namespace

TEST(RiskFree, LognormalClosedForm) {
  const SvLinearParams th{0.2, 0.3, 0.4, 0.7, 0.0};
  RiskFreeOptions o;
  o.units.data_scale = 0.01;
  for (double g : {0.5, 2.0, 4.0, 10.0}) {
    const auto r = risk_free_rate(th, standard_normal_mixture(), prefs(g), 0.25, 0.9, o);
    const double s2 = (0.4 + 0.7 * 0.9) * 1e-4;
    const double expect = prefs(g).a + g * 0.2 * 0.01 + g * 0.3 * 0.25 * 0.01 - 0.5 * g * g * s2;
    EXPECT_NEAR(r.rate, expect, 1e-10);
    EXPECT_EQ(r.floored, 0u);
  }
}

TEST(RiskFree, GaussianMixtureClosedForm) {
  const SvLinearParams th{0.0, 0.0, 0.5, 0.5, 0.0};
  const auto p = make_gaussian_mixture({0.7, 0.3}, {-0.3, 0.7}, {0.8, 1.2});
  const double g = 3.0, s2 = 0.5 + 0.5 * 1.2, s = std::sqrt(s2);
  double sum = 0.0;
  for (std::size_t j = 0; j < 2; ++j)
    sum += p.weights[j] * std::exp(-g * p.locations[j] * s + 0.5 * g * g * p.scales[j] * p.scales[j] * s2);
  EXPECT_NEAR(risk_free_rate(th, p, prefs(g), 0.0, 1.2).uncertainty, -std::log(sum), 1e-10);
}

TEST(RiskFree, ZeroRiskAversionAndMonotonicity) {
  const SvLinearParams th{0.2, 0.3, 0.4, 0.7, 0.1};
  const auto r0 = risk_free_rate(th, standard_normal_mixture(), prefs(0.0), 1.0, 1.0);
  EXPECT_DOUBLE_EQ(r0.rate, prefs(0.0).a);
  UncertaintyOptions o;
  o.draws = 2000;
  double prev = 0.0;
  for (double g : {1.0, 2.0, 4.0, 6.0, 10.0}) {
    const double e = uncertainty_component(th, standard_normal_mixture(), g, o).effect;
    EXPECT_LT(e, prev);
    prev = e;
  }
}

TEST(RiskFree, TailComponentsUnsupported) {
  auto p = standard_normal_mixture();
  p.weights[0] = 0.9;
  p.weights[1] = 0.1;
  const SvLinearParams th{0.0, 0.0, 0.5, 0.5, 0.0};
  EXPECT_THROW((void)risk_free_rate(th, p, prefs(2.0), 0.0, 1.0), unsupported_error);
  EXPECT_THROW((void)uncertainty_component(th, p, 2.0), unsupported_error);
}

TEST(RiskFree, QuadratureConvergesAndMatchesSimulation) {
  const SvLinearParams th{0.0, 0.0, 0.3, 0.5, 0.1};
  const auto p = make_gaussian_mixture({0.6, 0.4}, {-0.2, 0.3}, {0.9, 1.1});
  const double g = 2.0, sigma2 = 0.8;
  RiskFreeOptions a, b;
  a.quad_nodes = 32;
  b.quad_nodes = 64;
  const double ua = risk_free_rate(th, p, prefs(g), 0.0, sigma2, a).uncertainty;
  const double ub = risk_free_rate(th, p, prefs(g), 0.0, sigma2, b).uncertainty;
  EXPECT_LT(std::abs(ua - ub), 1e-6);

  RngStream r(21, 0);
  const std::size_t n = 1000000;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = r.normal();
    const double s2 = 0.3 + 0.5 * sigma2 + 0.1 * (z * z - 1.0), s = std::sqrt(s2);
    for (std::size_t j = 0; j < 2; ++j)
      acc += p.weights[j] * std::exp(-g * p.locations[j] * s + 0.5 * g * g * p.scales[j] * p.scales[j] * s2);
  }
  EXPECT_NEAR(std::exp(-ub) / (acc / static_cast<double>(n)), 1.0, 1e-3);
}

TEST(RiskFree, InvalidInputs) {
  const SvLinearParams th{0.0, 0.0, 0.3, 0.5, 0.1};
  RiskFreeOptions o;
  o.quad_nodes = 4;
  EXPECT_THROW((void)risk_free_rate(th, standard_normal_mixture(), prefs(2.0), 0.0, 1.0, o), validation_error);
  EXPECT_THROW((void)risk_free_rate(th, standard_normal_mixture(), prefs(-1.0), 0.0, 1.0), validation_error);
  EXPECT_THROW((void)uncertainty_component(th, standard_normal_mixture(), -1.0), validation_error);
}

TEST(Welfare, NoRiskNoCost) {
  PreferenceParams pr = prefs(4.0);
  pr.horizon = 100;
  pr.reps = 50;
  WelfareOptions o;
  o.model = WelfareModel::trend_stationary;
  o.trend = 0.002;
  o.sigma = 0.0;
  EXPECT_NEAR(welfare_cost({}, standard_normal_mixture(), pr, o).lambda, 0.0, 1e-12);
}

TEST(Welfare, TrendStationaryMatchesClosedForm) {
  PreferenceParams pr;
  pr.horizon = 1000;
  pr.reps = 1000;
  WelfareOptions o;
  o.model = WelfareModel::trend_stationary;
  o.trend = 0.0021;
  o.sigma = 0.0075;
  for (double g : {2.0, 4.0, 10.0}) {
    pr.gamma = g;
    const double lam = welfare_cost({}, standard_normal_mixture(), pr, o).lambda;
    EXPECT_NEAR(lam / lucas_welfare_cost(g, 0.0075), 1.0, 0.05) << g;
  }
}

TEST(Welfare, StochasticVolatilityCostPositiveAndDeterministic) {
  const SvLinearParams th{0.21 * 0.67, 0.33, 0.39, 0.65, 0.15};
  PreferenceParams pr = prefs(4.0);
  pr.horizon = 300;
  pr.reps = 200;
  WelfareOptions o;
  o.units = {0.01, true};
  const auto a = welfare_cost(th, standard_normal_mixture(), pr, o);
  o.threads = 3;
  const auto b = welfare_cost(th, standard_normal_mixture(), pr, o);
  EXPECT_GT(a.lambda, 0.0);
  EXPECT_EQ(a.lambda, b.lambda);
  pr.gamma = 1.0;
  EXPECT_THROW((void)welfare_cost(th, standard_normal_mixture(), pr, o), validation_error);
}
