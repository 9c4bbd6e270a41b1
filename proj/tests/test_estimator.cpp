#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sievesmm/estimator.hpp"
#include "sievesmm/montecarlo.hpp"

using namespace sievesmm;

namespace {

EstimationConfig ar1_config(std::size_t n, std::size_t S, std::size_t m) {
  EstimationConfig c;
  c.model = make_model(ModelKind::ar1, n, S);
  c.model.theta[1].value = 0.9;
  c.mixture.k = 2;
  c.grid.m = m;
  c.grid.seed = 3;
  c.sim_seed = 7;
  return c;
}

Dataset ar1_data(const EstimationConfig& c, std::uint64_t seed) {
  return simulate_truth(c.model, std::vector<double>{0.0, 0.9}, TruthDistribution{}, seed).data;
}

} // namespace

TEST(Objective, ZeroWhenDataIsTheSimulatedSample) {
  auto c = ar1_config(400, 1, 64);
  const auto ctx = make_context(c, ar1_data(c, 1));
  const auto raw = start_vector(ctx);
  const auto set = simulate_for_estimation(c.model, decode(raw, ctx).theta, decode(raw, ctx).mixture, ctx.draws);
  Dataset copy;
  copy.y = set.samples[0].y;
  const auto ctx2 = make_context(c, copy);
  EXPECT_EQ(objective(raw, ctx2), 0.0);
}

TEST(Objective, DeterministicBoundedAndDiscriminating) {
  auto c = ar1_config(1000, 5, 128);
  const auto ctx = make_context(c, ar1_data(c, 2));
  double wsum = 0.0;
  for (double w : ctx.grid.weights) wsum += w;
  EXPECT_NEAR(wsum, 1.0, 1e-12);

  auto th = c.model.values();
  const auto mix = pack_raw(default_mixture_start(c.mixture), c.mixture);
  const auto at = [&](double rho) {
    th[1] = rho;
    auto x = raw_from_theta(th, c.model, ctx.layout);
    x.insert(x.end(), mix.begin(), mix.end());
    return x;
  };
  const double q_true = objective(at(0.9), ctx), q_far = objective(at(0.2), ctx);
  EXPECT_EQ(q_true, objective(at(0.9), ctx));
  EXPECT_GE(q_true, 0.0);
  EXPECT_LE(q_far, 4.0);
  EXPECT_LT(q_true, q_far);
}

TEST(Objective, WrongLengthRejected) {
  auto c = ar1_config(300, 1, 32);
  const auto ctx = make_context(c, ar1_data(c, 3));
  EXPECT_THROW((void)decode(std::vector<double>{0.1}, ctx), validation_error);
}

TEST(Layout, BoundedRoundTrip) {
  auto c = ar1_config(300, 1, 32);
  const auto L = make_layout(c.model, c.mixture);
  const std::vector<double> th{0.3, -0.95};
  const auto raw = raw_from_theta(th, c.model, L);
  std::vector<double> full = raw;
  full.resize(L.size, 0.0);
  const auto back = theta_from_raw(full, c.model, L);
  EXPECT_NEAR(back[0], 0.3, 1e-12);
  EXPECT_NEAR(back[1], -0.95, 1e-12);
  EXPECT_EQ(L.names.size(), L.size);

  c.model.theta[0].fixed = true;
  EXPECT_EQ(make_layout(c.model, c.mixture).size, L.size - 1);
}

TEST(Estimate, RecoversPersistenceAndIsPure) {
  auto c = ar1_config(1000, 5, 100);
  c.model.theta[1].value = 0.5;
  c.optimizer.max_evals = 800;
  c.optimizer.restarts = 1;
  auto data = simulate_truth(c.model, std::vector<double>{0.0, 0.9}, TruthDistribution{}, 4).data;
  const auto ctx = make_context(c, data);
  const auto a = estimate(ctx), b = estimate(ctx);
  EXPECT_NEAR(a.theta[1], 0.9, 0.1);
  EXPECT_EQ(a.raw, b.raw);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.objective, objective(a.raw, ctx));
  for (std::size_t i = 1; i < a.trace.size(); ++i) EXPECT_LE(a.trace[i], a.trace[i - 1]);
  const auto j = to_json(a);
  EXPECT_EQ(j["seeds"]["simulation"].get<std::uint64_t>(), 7u);
  EXPECT_TRUE(j["theta"].contains("rho_y"));
}

TEST(Context, AuxiliaryFilterAddsColumns) {
  EstimationConfig c;
  c.model = make_model(ModelKind::sv_lognormal, 600, 1);
  c.model.theta[2].value = -0.736;
  c.model.theta[3].value = 0.9;
  c.model.theta[4].value = 0.363;
  c.mixture.k = 2;
  c.grid.m = 32;
  const auto data = simulate_truth(c.model, c.model.values(), TruthDistribution{}, 5).data;
  const auto plain = make_context(c, data);
  c.aux.enabled = true;
  const auto aux = make_context(c, data);
  ASSERT_TRUE(aux.aux.has_value());
  EXPECT_GT(aux.columns.size(), plain.columns.size());
  EXPECT_TRUE(std::isfinite(objective(start_vector(aux), aux)));
}

TEST(Context, PanelDesign) {
  EstimationConfig c;
  c.model = make_panel_model(100, 5, 2, 10);
  c.mixture.k = 2;
  c.grid.m = 32;
  c.aux.enabled = false;
  const auto data = simulate_truth(c.model, std::vector<double>{-1.25, 1.0, 0.8}, TruthDistribution{}, 6).data;
  const auto ctx = make_context(c, data);
  EXPECT_EQ(ctx.rows_per_group, 4u);
  EXPECT_EQ(ctx.data_embedding.rows, 400u);
  EXPECT_TRUE(std::isfinite(objective(start_vector(ctx), ctx)));
  c.aux.enabled = true;
  EXPECT_THROW((void)make_context(c, data), validation_error);
}
