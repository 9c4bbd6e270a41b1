#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sievesmm/dgp.hpp"
#include "sievesmm/distributions.hpp"
#include "sievesmm/montecarlo.hpp"
#include "sievesmm/quadrature.hpp"

using namespace sievesmm;

namespace {

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

double lag1_autocorrelation(std::span<const double> y) {
  double m = 0.0;
  for (double v : y) m += v;
  m /= static_cast<double>(y.size());
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    den += (y[t] - m) * (y[t] - m);
    if (t > 0) num += (y[t] - m) * (y[t - 1] - m);
  }
  return num / den;
}

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  RngStream g(seed, 0);
  std::vector<double> e(n);
  for (auto& v : e) v = g.normal();
  return e;
}

} // namespace

TEST(BaseDraws, DeterministicAndStreamsSeparated) {
  auto m = make_model(ModelKind::sv_linear, 10000, 2);
  const auto a = draw_base(m, 2, 42), b = draw_base(m, 2, 42);
  EXPECT_EQ(a.z, b.z);
  EXPECT_EQ(a.nu, b.nu);
  EXPECT_EQ(a.e2, b.e2);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t t = 0; t < m.n; ++t) {
    const double x = a.z[a.at(0, t) * 2], y = a.z[a.at(1, t) * 2];
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
  }
  EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 0.05);

  m.n = 100000;
  m.S = 1;
  const auto c = draw_base(m, 1, 3);
  double s = 0.0;
  for (double v : c.e2) s += v;
  const double n = static_cast<double>(c.e2.size());
  EXPECT_LT(std::abs(s / n - 1.0), 3.0 * std::sqrt(2.0 / n));
}

TEST(BaseDraws, SampleStreamIndependentOfS) {
  const auto m2 = make_model(ModelKind::ar1, 300, 2), m1 = make_model(ModelKind::ar1, 300, 1);
  const auto p = make_gaussian_mixture({0.4, 0.6}, {-0.5, 0.33}, {0.8, 1.1});
  const auto a = simulate_for_estimation(m2, m2.values(), p, draw_base(m2, 2, 9));
  const auto b = simulate_for_estimation(m1, m1.values(), p, draw_base(m1, 2, 9));
  EXPECT_EQ(a.samples[0].y, b.samples[0].y);
}

TEST(Ar1, ZeroPersistenceReturnsShocks) {
  const auto e = normals(100, 1);
  EXPECT_EQ(simulate_ar1(0.0, 0.0, e), e);
}

TEST(Ar1, AutocorrelationAndMovingAverageExpansion) {
  const auto e = normals(1000, 2);
  // Long stationary run for the autocorrelation check.
  const auto y = simulate_ar1(0.0, 0.95, normals(20000, 12));
  EXPECT_NEAR(lag1_autocorrelation(y), 0.95, 0.05);
  const double rho = 0.8, y0 = 1.7, mu = 0.3;
  const auto r = simulate_ar1(mu, rho, std::span<const double>(e.data(), 100), y0);
  for (std::size_t t = 0; t < 100; ++t) {
    double v = std::pow(rho, static_cast<double>(t + 1)) * y0;
    for (std::size_t j = 0; j <= t; ++j) v += std::pow(rho, static_cast<double>(j)) * (mu + e[t - j]);
    EXPECT_NEAR(r[t], v, 1e-10);
  }
  EXPECT_THROW((void)simulate_ar1(0.0, 1.0, e), validation_error);
}

TEST(SvLognormal, FixedPointAndStationaryMean) {
  const auto e1 = normals(1000, 3), e2 = normals(1000, 4);
  const auto flat = simulate_sv_lognormal({0.0, 0.0, -0.736, 0.9, 0.0}, e1, e2);
  for (std::size_t t = 0; t < flat.vol.size(); ++t) {
    EXPECT_NEAR(flat.vol[t], std::exp(-7.36), 1e-15);
    EXPECT_EQ(flat.y[t], flat.vol[t] * e1[t]);
  }
  const std::size_t n = 100000;
  const auto path = simulate_sv_lognormal({0.0, 0.0, -0.736, 0.9, 0.363}, normals(n, 5), normals(n, 6));
  double m = 0.0;
  for (double s : path.vol) m += std::log(s);
  m /= static_cast<double>(n);
  // Long-run variance of an AR(1) mean: kappa^2 / (1 - rho)^2 / n.
  const double se = 0.363 / (1.0 - 0.9) / std::sqrt(static_cast<double>(n));
  EXPECT_LT(std::abs(m - (-7.36)), 3.0 * se);
}

TEST(SvLinear, FixedPointAndStationaryMean) {
  std::vector<double> e2(500, 1.0);
  const auto flat = simulate_sv_linear({0.0, 0.0, 0.43, 0.75, 0.0}, normals(500, 1), e2);
  for (double v : flat.vol) EXPECT_NEAR(v, 0.43 / 0.25, 1e-12);

  const std::size_t n = 200000;
  auto chi = normals(n, 7);
  for (auto& v : chi) v *= v;
  const auto path = simulate_sv_linear({0.0, 0.32, 0.43, 0.75, 0.13}, normals(n, 8), chi);
  double m = 0.0;
  for (double v : path.vol) m += v;
  m /= static_cast<double>(n);
  const double se = 0.13 * std::sqrt(2.0) / (1.0 - 0.75) / std::sqrt(static_cast<double>(n));
  EXPECT_LT(std::abs(m - 0.43 / 0.25), 3.0 * se);
}

TEST(SvLinear, FittedValuesSimulateWithoutFloorHits) {
  const std::size_t n = 10000;
  auto chi = normals(n, 9);
  for (auto& v : chi) v *= v;
  const auto path = simulate_sv_linear({0.0, 0.32, 0.43, 0.75, 0.13}, normals(n, 10), chi);
  EXPECT_EQ(path.flagged, 0u);
}

TEST(Tobit, CensoringExtremes) {
  const std::size_t units = 50, T = 5, m = 10;
  const auto x = normals(units * T, 11);
  const auto e = normals(units * (m + T), 12);
  const auto high = simulate_tobit_panel({1e6, 1.0, 0.8}, x, e, units, T, m);
  const auto low = simulate_tobit_panel({-1e6, 1.0, 0.8}, x, e, units, T, m);
  for (std::size_t j = 0; j < units; ++j) {
    double u = 0.0;
    for (std::size_t t = 0; t < m + T; ++t) {
      u = 0.8 * u + e[j * (m + T) + t];
      if (t >= m) {
        EXPECT_NEAR(high[j * T + t - m], 1e6 + x[j * T + t - m] + u, 1e-6);
      }
    }
  }
  for (double v : low) EXPECT_EQ(v, 0.0);
}

TEST(Tobit, BurnInDecay) {
  const std::size_t units = 20000, T = 1;
  const std::vector<double> x(units, 0.0);
  const auto first = [&](std::size_t m) {
    const auto e = normals(units * (m + T), 100 + m);
    return simulate_tobit_panel({0.0, 0.0, 0.8}, x, e, units, T, m);
  };
  EXPECT_GT(ks_two_sample(first(0), first(50)), 0.01);
  // Same shocks for m = 50 and m = 100 share the last 50 + T draws per unit.
  RngStream g(77, 0);
  std::vector<double> e100(units * (100 + T)), e50(units * (50 + T));
  for (auto& v : e100) v = g.normal();
  for (std::size_t j = 0; j < units; ++j)
    std::copy_n(e100.begin() + static_cast<std::ptrdiff_t>(j * (100 + T) + 50), 50 + T,
                e50.begin() + static_cast<std::ptrdiff_t>(j * (50 + T)));
  const auto a = simulate_tobit_panel({0.0, 0.0, 0.8}, x, e50, units, T, 50);
  const auto b = simulate_tobit_panel({0.0, 0.0, 0.8}, x, e100, units, T, 100);
  EXPECT_LT(ks_two_sample(a, b), 0.01);
}

TEST(SimulateForEstimation, PointMassGivesDeterministicPath) {
  auto m = make_model(ModelKind::sv_lognormal, 200, 2);
  m.theta[2].value = -0.736;
  m.theta[3].value = 0.9;
  m.theta[4].value = 0.0;
  const auto p = make_gaussian_mixture({1.0}, {0.0}, {0.0});
  const auto a = simulate_for_estimation(m, m.values(), p, draw_base(m, 1, 1));
  const auto b = simulate_for_estimation(m, m.values(), p, draw_base(m, 1, 2));
  EXPECT_EQ(a.samples[0].y, b.samples[0].y);
  EXPECT_EQ(a.samples[1].vol, b.samples[0].vol);
}

TEST(SimulateForEstimation, ContinuousInWeights) {
  auto m = make_model(ModelKind::sv_lognormal, 1000, 1);
  m.theta[2].value = -0.736;
  m.theta[3].value = 0.9;
  m.theta[4].value = 0.363;
  const auto d = draw_base(m, 2, 5);
  const auto p = make_gaussian_mixture({0.5, 0.5}, {-0.5, 0.5}, {0.8, 0.8});
  auto q = p;
  q.weights[0] += 1e-8;
  q.weights[1] -= 1e-8;
  const auto a = simulate_for_estimation(m, m.values(), p, d), b = simulate_for_estimation(m, m.values(), q, d);
  double mx = 0.0;
  for (std::size_t t = 0; t < a.samples[0].y.size(); ++t) mx = std::max(mx, std::abs(a.samples[0].y[t] - b.samples[0].y[t]));
  EXPECT_LT(mx, 1.0);
}

TEST(ModelSpec, StationarityEnforced) {
  auto m = make_model(ModelKind::ar1, 100, 1);
  m.theta[1].value = 1.0;
  EXPECT_THROW(validate(m), validation_error);
  m.theta[1].value = 0.5;
  m.theta[1].upper = 1.0;
  EXPECT_THROW(validate(m), validation_error);
  EXPECT_EQ(default_burn_in(1000), 14u);
}

TEST(Gev, SolvedShapeHasTargetMoments) {
  const double xi = solve_gev_shape(-0.9);
  EXPECT_NEAR(gev_skewness(xi), -0.9, 1e-12);
  const StandardizedGev g(xi);
  const double upper = g.quantile(1.0 - 1e-16);
  double m[5];
  for (int p = 0; p <= 4; ++p)
    m[p] = integrate([&](double e) { return std::pow(e, p) * g.density(e); }, -std::numeric_limits<double>::infinity(),
                     upper, 1e-12);
  EXPECT_NEAR(m[0], 1.0, 1e-8);
  EXPECT_NEAR(m[1], 0.0, 1e-8);
  EXPECT_NEAR(m[2], 1.0, 1e-8);
  EXPECT_NEAR(m[3], -0.9, 1e-6);
  // Raw kurtosis of the skew -0.9 GEV.
  EXPECT_NEAR(m[4], 3.0 + gev_excess_kurtosis(xi), 1e-6);
  EXPECT_NEAR(m[4], 3.87, 0.01);
}

TEST(StudentT, StandardizedVarianceAndDraws) {
  const StandardizedStudentT t(5.0);
  const double v = integrate([&](double e) { return e * e * t.density(e); }, -std::numeric_limits<double>::infinity(),
                             std::numeric_limits<double>::infinity(), 1e-12);
  EXPECT_NEAR(v, 1.0, 1e-8);
  RngStream g(1, 2);
  double s = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = t.draw(g);
    s += x * x;
  }
  EXPECT_NEAR(s / n, 1.0, 0.03);
}

TEST(MonteCarlo, TobitTruthCensoringAndRegressor) {
  auto m = make_panel_model(10000, 5, 1, 10);
  m.theta[0].value = -1.25;
  m.theta[1].value = 1.0;
  m.theta[2].value = 0.8;
  const auto s = simulate_truth(m, m.values(), gev_truth(), 4, 0, RegressorProcess{});
  // Independent simulation of the same design gives 35.4%.
  EXPECT_NEAR(s.censored_fraction, 0.354, 0.01);
  double mx = 0.0, vx = 0.0;
  for (double v : s.data.x) mx += v;
  mx /= static_cast<double>(s.data.x.size());
  for (double v : s.data.x) vx += (v - mx) * (v - mx);
  vx /= static_cast<double>(s.data.x.size());
  EXPECT_NEAR(mx, 2.0, 0.05);
  EXPECT_NEAR(vx, 2.0, 0.08);
}

namespace {

MonteCarloConfig small_design() {
  MonteCarloConfig c;
  c.estimation.model = make_model(ModelKind::ar1, 200, 2);
  c.estimation.model.burn_in = default_burn_in(200);
  c.estimation.model.theta[1].value = 0.6;
  c.estimation.mixture.k = 1;
  c.estimation.grid.m = 48;
  c.estimation.optimizer.max_evals = 300;
  c.estimation.optimizer.restarts = 0;
  c.estimation.optimizer.tol = 1e-7;
  c.shocks = gev_truth();
  c.replications = 4;
  c.master_seed = 5;
  c.density_points = 21;
  return c;
}

} // namespace

TEST(MonteCarlo, KeyedReplicationsReproduceAlone) {
  const auto c = small_design();
  const auto all = monte_carlo(c, 0, 4, 1);
  const auto third = monte_carlo(c, 3, 1, 1);
  ASSERT_EQ(all.runs.size(), 4u);
  ASSERT_TRUE(all.runs[3].estimate && third.runs[0].estimate);
  EXPECT_EQ(all.runs[3].estimate->raw, third.runs[0].estimate->raw);
  EXPECT_EQ(all.n_fail, 0u);
  const auto threaded = monte_carlo(c, 0, 4, 3);
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(all.runs[r].estimate->raw, threaded.runs[r].estimate->raw);
}

TEST(MonteCarlo, SingleReplicationSummary) {
  const auto c = small_design();
  const auto s = monte_carlo(c, 2, 1, 1);
  ASSERT_EQ(s.parameters.size(), 2u);
  EXPECT_EQ(s.parameters[1].mean, s.runs[0].estimate->theta[1]);
  EXPECT_TRUE(std::isnan(s.parameters[1].sd));
  ASSERT_EQ(s.density.e.size(), 21u);
  EXPECT_DOUBLE_EQ(s.density.e.front(), -5.0);
  EXPECT_DOUBLE_EQ(s.density.e.back(), 5.0);
  EXPECT_EQ(s.density.q025, s.density.mean);
}

TEST(MonteCarlo, FailuresAreCountedAndExcluded) {
  auto c = small_design();
  c.truth = {0.0, 1.5}; // nonstationary truth: every data draw fails
  const auto s = monte_carlo(c, 0, 2, 1);
  EXPECT_EQ(s.n_fail, 2u);
  EXPECT_TRUE(s.runs[0].failed);
  EXPECT_FALSE(s.runs[0].error.empty());
  EXPECT_EQ(s.parameters[0].n_fail, 2u);
}
