#include <gtest/gtest.h>

#include <complex>
#include <vector>

#include "sievesmm/cf.hpp"
#include "sievesmm/random.hpp"

using namespace sievesmm;

namespace {

GridScale unit_scale(std::size_t d) { return {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)}; }

std::complex<double> brute_cf(const EmbeddedSeries& e, const CFGrid& g, std::size_t l) {
  std::complex<double> s{0.0, 0.0};
  for (std::size_t t = 0; t < e.rows; ++t) {
    double ph = 0.0;
    for (std::size_t c = 0; c < e.dim; ++c) ph += g.tau(l, c) * e.at(t, c);
    s += std::exp(std::complex<double>(0.0, ph));
  }
  return s / static_cast<double>(e.rows);
}

EmbeddedSeries random_embedding(std::size_t n, std::size_t L, std::uint64_t seed) {
  RngStream g(seed, 1);
  std::vector<double> y(n), x(n);
  for (auto& v : y) v = 2.0 * g.normal();
  for (auto& v : x) v = g.uniform();
  return lag_embed(std::vector<std::vector<double>>{y, x}, L);
}

} // namespace

TEST(CfGrid, MomentsOfUnitScaleGrid) {
  const auto g = build_cf_grid(10000, 3, QmcGenerator::sobol, 0, unit_scale(3));
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0.0, ss = 0.0;
    for (std::size_t l = 0; l < g.m; ++l) {
      s += g.tau(l, c);
      ss += g.tau(l, c) * g.tau(l, c);
    }
    const double mean = s / g.m, var = ss / g.m - mean * mean;
    EXPECT_NEAR(mean, 0.0, 0.02);
    EXPECT_NEAR(var, 1.0, 0.02);
  }
}

TEST(CfGrid, DeterministicAndDescriptorRoundTrip) {
  const GridScale sc{{0.1, -0.3, 0.0, 2.0}, {1.5, 0.2, 3.0, 1.0}};
  for (auto gen : {QmcGenerator::sobol, QmcGenerator::halton}) {
    const auto a = build_cf_grid(1000, 4, gen, 17, sc);
    const auto b = build_cf_grid(1000, 4, gen, 17, sc);
    EXPECT_EQ(a.points, b.points);
    const auto c = grid_from_descriptor(grid_descriptor(a));
    EXPECT_EQ(a.points, c.points);
    EXPECT_EQ(a.weights, c.weights);
  }
}

TEST(CfGrid, InvalidArguments) {
  EXPECT_THROW((void)build_cf_grid(0, 1, QmcGenerator::sobol, 0, unit_scale(1)), validation_error);
  EXPECT_THROW((void)build_cf_grid(10, 2, QmcGenerator::sobol, 0, unit_scale(1)), validation_error);
  EXPECT_THROW((void)build_cf_grid(10, 1, QmcGenerator::sobol, 0, GridScale{{0.0}, {0.0}}), validation_error);
}

TEST(LagEmbed, Layouts) {
  const auto e = lag_embed(std::vector<std::vector<double>>{{1.0, 2.0, 3.0}}, 1);
  ASSERT_EQ(e.rows, 2u);
  ASSERT_EQ(e.dim, 2u);
  EXPECT_EQ(e.row(0), (std::vector<double>{2.0, 1.0}));
  EXPECT_EQ(e.row(1), (std::vector<double>{3.0, 2.0}));

  const auto id = lag_embed(std::vector<std::vector<double>>{{4.0, 5.0, 6.0}}, 0);
  ASSERT_EQ(id.rows, 3u);
  EXPECT_EQ(id.row(2), (std::vector<double>{6.0}));

  const auto two = lag_embed(std::vector<std::vector<double>>{{1.0, 2.0, 3.0}, {10.0, 20.0, 30.0}}, 1);
  ASSERT_EQ(two.dim, 4u);
  EXPECT_EQ(two.row(1), (std::vector<double>{3.0, 2.0, 30.0, 20.0}));
  EXPECT_THROW((void)lag_embed(std::vector<std::vector<double>>{{1.0, 2.0}}, 2), validation_error);
}

TEST(EmpiricalCf, MatchesBruteForceSum) {
  const auto e = random_embedding(1537, 1, 3);
  const auto g = build_cf_grid(97, e.dim, QmcGenerator::sobol, 0, unit_scale(e.dim));
  const auto psi = empirical_cf(e, g);
  for (std::size_t l = 0; l < g.m; ++l) {
    const auto ref = brute_cf(e, g, l);
    EXPECT_NEAR(psi[l].real(), ref.real(), 1e-12);
    EXPECT_NEAR(psi[l].imag(), ref.imag(), 1e-12);
  }
}

TEST(EmpiricalCf, ZeroAndConstantRows) {
  EmbeddedSeries zero;
  zero.rows = 50;
  zero.dim = 2;
  zero.data.assign(100, 0.0);
  const auto g = build_cf_grid(64, 2, QmcGenerator::sobol, 0, unit_scale(2));
  for (const auto& v : empirical_cf(zero, g)) EXPECT_EQ(v, std::complex<double>(1.0, 0.0));

  EmbeddedSeries c = zero;
  std::fill(c.data.begin(), c.data.begin() + 50, 0.7);
  std::fill(c.data.begin() + 50, c.data.end(), -1.3);
  const auto psi = empirical_cf(c, g);
  for (std::size_t l = 0; l < g.m; ++l) {
    const auto ref = std::exp(std::complex<double>(0.0, 0.7 * g.tau(l, 0) - 1.3 * g.tau(l, 1)));
    EXPECT_NEAR(std::abs(psi[l] - ref), 0.0, 1e-12);
  }
}

TEST(EmpiricalCf, OriginModulusAndConjugateSymmetry) {
  const auto e = random_embedding(2000, 2, 9);
  auto g = build_cf_grid(200, e.dim, QmcGenerator::halton, 0, unit_scale(e.dim));
  // Append tau = 0 and the mirrored grid.
  const std::size_t m = g.m;
  std::vector<double> pts = g.points;
  pts.resize(pts.size() + e.dim, 0.0);
  for (std::size_t i = 0; i < m * e.dim; ++i) pts.push_back(-g.points[i]);
  g.points = pts;
  g.m = 2 * m + 1;
  g.weights.assign(g.m, 1.0 / static_cast<double>(g.m));
  const auto psi = empirical_cf(e, g);
  EXPECT_EQ(psi[m], std::complex<double>(1.0, 0.0));
  for (std::size_t l = 0; l < m; ++l) {
    EXPECT_LE(std::abs(psi[l]), 1.0 + 1e-12);
    EXPECT_NEAR(psi[l].real(), psi[m + 1 + l].real(), 1e-12);
    EXPECT_NEAR(psi[l].imag(), -psi[m + 1 + l].imag(), 1e-12);
  }
}

TEST(EmpiricalCf, ThreadCountInvariant) {
  const auto e = random_embedding(3000, 1, 5);
  const auto g = build_cf_grid(300, e.dim, QmcGenerator::sobol, 0, unit_scale(e.dim));
  const auto a = empirical_cf(e, g, 1);
  const auto b = empirical_cf(e, g, 3);
  EXPECT_EQ(a, b);
}

TEST(CfDistance, BasicProperties) {
  const cvector one{{1.0, 0.0}}, minus{{-1.0, 0.0}};
  const std::vector<double> w1{1.0};
  EXPECT_DOUBLE_EQ(cf_distance(one, minus, w1), 4.0);
  EXPECT_EQ(cf_distance(one, one, w1), 0.0);

  const auto a = empirical_cf(random_embedding(500, 1, 1), build_cf_grid(100, 4, QmcGenerator::sobol, 0, unit_scale(4)));
  const auto b = empirical_cf(random_embedding(500, 1, 2), build_cf_grid(100, 4, QmcGenerator::sobol, 0, unit_scale(4)));
  const std::vector<double> w(100, 0.01);
  const double ab = cf_distance(a, b, w);
  EXPECT_EQ(ab, cf_distance(b, a, w));
  EXPECT_GE(ab, 0.0);
  EXPECT_LE(ab, 4.0);
  EXPECT_THROW((void)cf_distance(a, one, w), validation_error);
}

TEST(GridScale, InverseModeUsesReciprocalSd) {
  const auto e = random_embedding(4000, 1, 4);
  const auto mom = embedding_moments(e);
  const auto inv = grid_scale_for(e, GridScaleMode::inverse);
  const auto mat = grid_scale_for(e, GridScaleMode::matched);
  for (std::size_t c = 0; c < e.dim; ++c) {
    EXPECT_DOUBLE_EQ(mat.sd[c], mom.sd[c]);
    EXPECT_NEAR(inv.sd[c] * mom.sd[c], 1.0, 1e-12);
  }
}
