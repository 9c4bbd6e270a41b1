#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "sievesmm/optimize.hpp"

using namespace sievesmm;

TEST(NelderMead, Quadratic) {
  const auto f = [](std::span<const double> x) {
    return (x[0] - 1.0) * (x[0] - 1.0) + 3.0 * (x[1] + 2.0) * (x[1] + 2.0) + 0.5 * x[2] * x[2];
  };
  NelderMeadOptions o;
  o.tol = 1e-14;
  o.max_evals = 5000;
  const auto r = nelder_mead(f, {0.0, 0.0, 1.0}, o);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], 1.0, 1e-5);
  EXPECT_NEAR(r.x[1], -2.0, 1e-5);
  EXPECT_NEAR(r.x[2], 0.0, 1e-5);
}

TEST(NelderMead, RosenbrockWithRestarts) {
  const auto f = [](std::span<const double> x) {
    return 100.0 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]) + (1.0 - x[0]) * (1.0 - x[0]);
  };
  NelderMeadOptions o;
  o.tol = 1e-16;
  o.max_evals = 20000;
  o.restarts = 3;
  const auto r = nelder_mead(f, {-1.2, 1.0}, o);
  EXPECT_NEAR(r.x[0], 1.0, 1e-4);
  EXPECT_NEAR(r.x[1], 1.0, 1e-4);
}

TEST(NelderMead, TraceIsMonotoneAndBudgetRespected) {
  const auto f = [](std::span<const double> x) { return std::abs(x[0]) + std::abs(x[1] - 0.3); };
  NelderMeadOptions o;
  o.max_evals = 150;
  o.restarts = 2;
  const auto r = nelder_mead(f, {2.0, -1.0}, o);
  EXPECT_LE(r.evals, 150u);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
  EXPECT_EQ(r.f, f(r.x));
}

TEST(NelderMead, Errors) {
  const auto inf = [](std::span<const double>) { return std::numeric_limits<double>::infinity(); };
  EXPECT_THROW((void)nelder_mead(inf, {0.0}), validation_error);
  const auto q = [](std::span<const double> x) { return x[0] * x[0]; };
  EXPECT_THROW((void)nelder_mead(q, {}), validation_error);
  EXPECT_THROW((void)nelder_mead(q, {std::nan("")}), validation_error);
}

TEST(NelderMead, InfeasibleRegionsAreAvoided) {
  const auto f = [](std::span<const double> x) {
    return x[0] < 0.0 ? std::numeric_limits<double>::infinity() : (x[0] - 0.5) * (x[0] - 0.5);
  };
  NelderMeadOptions o;
  o.tol = 1e-14;
  const auto r = nelder_mead(f, {3.0}, o);
  EXPECT_NEAR(r.x[0], 0.5, 1e-5);
}

TEST(NelderMead, Deterministic) {
  const auto f = [](std::span<const double> x) { return std::cos(3.0 * x[0]) + x[0] * x[0] + x[1] * x[1]; };
  const auto a = nelder_mead(f, {1.0, 1.0}), b = nelder_mead(f, {1.0, 1.0});
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.trace, b.trace);
}

TEST(DirectSearch, BudgetOneReturnsCentre) {
  const auto f = [](std::span<const double> x) { return x[0]; };
  const std::vector<double> lo{-1.0, 2.0}, hi{3.0, 4.0};
  double v = 0.0;
  const auto x = direct_search(f, lo, hi, 1, &v);
  EXPECT_EQ(x, (std::vector<double>{1.0, 3.0}));
  EXPECT_EQ(v, 1.0);
}

TEST(DirectSearch, ScreensPersistence) {
  const auto f = [](std::span<const double> x) { return (x[0] - 0.93) * (x[0] - 0.93); };
  const std::vector<double> lo{-0.99}, hi{0.99};
  const auto x = direct_search(f, lo, hi, 50);
  EXPECT_NEAR(x[0], 0.93, 0.1);
  EXPECT_EQ(x, direct_search(f, lo, hi, 50));
}

TEST(DirectSearch, InvalidBox) {
  const auto f = [](std::span<const double> x) { return x[0]; };
  const std::vector<double> lo{1.0}, hi{1.0};
  EXPECT_THROW((void)direct_search(f, lo, hi, 5), validation_error);
  EXPECT_THROW((void)direct_search(f, std::vector<double>{0.0}, std::vector<double>{1.0}, 0), validation_error);
}
