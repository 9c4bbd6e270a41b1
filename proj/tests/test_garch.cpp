#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sievesmm/garch.hpp"
#include "sievesmm/random.hpp"

using namespace sievesmm;

namespace {

std::vector<double> simulate_garch(const GarchParams& g, std::size_t n, std::uint64_t seed) {
  RngStream r(seed, 0);
  std::vector<double> y(n);
  double v = g.mu / (1.0 - g.alpha1 - g.alpha2), prev = 0.0;
  for (std::size_t t = 0; t < n + 500; ++t) {
    if (t > 0) v = g.mu + g.alpha1 * prev * prev + g.alpha2 * v;
    prev = std::sqrt(v) * r.normal();
    if (t >= 500) y[t - 500] = prev;
  }
  return y;
}

double sample_variance(const std::vector<double>& y) {
  double m = 0.0, s = 0.0;
  for (double v : y) m += v;
  m /= static_cast<double>(y.size());
  for (double v : y) s += (v - m) * (v - m);
  return s / static_cast<double>(y.size());
}

} // namespace

TEST(Garch, RecoversSimulatedParameters) {
  GarchParams truth{0.05, 0.1, 0.85};
  const auto y = simulate_garch(truth, 8000, 1);
  const auto g = fit_garch11(y);
  EXPECT_TRUE(g.converged);
  EXPECT_NEAR(g.alpha1, 0.1, 0.04);
  EXPECT_NEAR(g.alpha2, 0.85, 0.06);
  EXPECT_NEAR(g.mu / (1.0 - g.alpha1 - g.alpha2), 1.0, 0.25);
}

TEST(Garch, IidDataMatchesUnconditionalVariance) {
  RngStream r(2, 0);
  std::vector<double> y(4000);
  for (auto& v : y) v = 1.7 * r.normal();
  const auto g = fit_garch11(y);
  EXPECT_LT(g.alpha1, 0.05);
  EXPECT_NEAR(g.mu / (1.0 - g.alpha1 - g.alpha2) / sample_variance(y), 1.0, 0.1);
}

TEST(Garch, AvgarchFitsAndFilters) {
  const auto y = simulate_garch({0.05, 0.1, 0.85}, 3000, 3);
  const auto g = fit_garch11(y, GarchVariant::avgarch);
  EXPECT_EQ(g.variant, GarchVariant::avgarch);
  EXPECT_GT(g.alpha1, 0.0);
  for (double s : filter_garch11(y, g)) EXPECT_GT(s, 0.0);
}

TEST(Garch, InvalidInputs) {
  EXPECT_THROW((void)fit_garch11(std::vector<double>(10, 1.0)), validation_error);
  EXPECT_THROW((void)fit_garch11(std::vector<double>(100, 0.0)), degenerate_error);
  EXPECT_THROW(validate(GarchParams{0.1, 0.5, 0.5}), validation_error);
  EXPECT_THROW(validate(GarchParams{0.0, 0.1, 0.5}), validation_error);
  EXPECT_THROW((void)garch_variant_from_string("egarch"), validation_error);
}

TEST(Garch, FilterFixedPoints) {
  const std::vector<double> y = {1.0, -2.0, 0.5, 3.0};
  for (double s : filter_garch11(y, GarchParams{0.4, 0.0, 0.0})) EXPECT_DOUBLE_EQ(s, std::sqrt(0.4));

  const GarchParams g{0.2, 0.1, 0.7};
  const auto z = filter_garch11(std::vector<double>(400, 0.0), g);
  EXPECT_NEAR(z.back() * z.back(), 0.2 / (1.0 - 0.7), 1e-12);
}

TEST(Garch, FilterPositiveDeterministicAndLipschitz) {
  const auto y = simulate_garch({0.05, 0.1, 0.85}, 2000, 4);
  const GarchParams g{0.05, 0.1, 0.85};
  const auto a = filter_garch11(y, g), b = filter_garch11(y, g);
  EXPECT_EQ(a, b);
  for (double s : a) EXPECT_GT(s, 0.0);

  auto y2 = y;
  y2[1000] += 1e-6;
  const auto c = filter_garch11(y2, g);
  double d = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) d = std::max(d, std::abs(c[t] - a[t]));
  EXPECT_GT(d, 0.0);
  EXPECT_LT(d, 1e-5);
}

TEST(Garch, FitIsDeterministicAndJsonRoundTrips) {
  const auto y = simulate_garch({0.05, 0.1, 0.85}, 1000, 5);
  const auto a = fit_garch11(y), b = fit_garch11(y);
  EXPECT_EQ(a.mu, b.mu);
  EXPECT_EQ(a.alpha1, b.alpha1);
  const auto c = garch_from_json(to_json(a));
  EXPECT_EQ(c.alpha2, a.alpha2);
}
