#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sievesmm/inference.hpp"
#include "sievesmm/montecarlo.hpp"

using namespace sievesmm;

namespace {

const ObjectiveContext& ar1_context() {
  static const ObjectiveContext ctx = [] {
    EstimationConfig c;
    c.model = make_model(ModelKind::ar1, 800, 2);
    c.model.theta[1].value = 0.8;
    c.mixture.k = 2;
    c.grid.m = 64;
    c.grid.seed = 2;
    c.sim_seed = 5;
    return make_context(c, simulate_truth(c.model, std::vector<double>{0.0, 0.8}, TruthDistribution{}, 9).data);
  }();
  return ctx;
}

} // namespace

TEST(IllPosedness, IdentityGram) {
  const std::size_t m = 8;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2 * m, m);
  G.topRows(m).setIdentity();
  const std::vector<double> w(m, 1.0 / m);
  const auto r = illposedness_diagnostic(G, w, 0.5);
  EXPECT_NEAR(r.lambda_min, 1.0 / m, 1e-14);
  EXPECT_FALSE(r.ill_posed);
  EXPECT_NEAR(r.tv_bound, std::sqrt(static_cast<double>(m)) / 0.5, 1e-12);
  EXPECT_NEAR(r.sup_bound, r.tv_bound / 0.5, 1e-12);
}

TEST(IllPosedness, DuplicatedColumnIsFlagged) {
  Eigen::MatrixXd G = Eigen::MatrixXd::Random(20, 3);
  G.col(2) = G.col(0);
  const std::vector<double> w(10, 0.1);
  const auto r = illposedness_diagnostic(G, w, 1.0);
  EXPECT_TRUE(r.ill_posed);
  EXPECT_EQ(r.lambda_min, 0.0);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_FALSE(std::isfinite(r.tv_bound));
}

TEST(IllPosedness, RestrictedColumnsIgnoreDegeneratePadding) {
  Eigen::MatrixXd G = Eigen::MatrixXd::Random(20, 3);
  G.col(0).setZero();
  const std::vector<double> w(10, 0.1);
  const std::vector<std::size_t> cols{1, 2};
  const auto r = illposedness_diagnostic(G, w, 1.0, cols);
  EXPECT_FALSE(r.ill_posed);
  EXPECT_GT(r.lambda_min, 0.0);
  EXPECT_EQ(r.lambda_min_full, 0.0);
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(IllPosedness, PermutationInvariantAndValidated) {
  Eigen::MatrixXd G = Eigen::MatrixXd::Random(30, 4);
  Eigen::MatrixXd P = G;
  P.col(0) = G.col(3);
  P.col(3) = G.col(0);
  const std::vector<double> w(15, 1.0 / 15.0);
  EXPECT_NEAR(illposedness_diagnostic(G, w, 1.0).lambda_min, illposedness_diagnostic(P, w, 1.0).lambda_min, 1e-12);
  EXPECT_THROW((void)illposedness_diagnostic(G, w, 0.0), validation_error);
  EXPECT_THROW((void)illposedness_diagnostic(G, std::vector<double>(3, 1.0), 1.0), validation_error);
}

TEST(MomentJacobian, DeterministicThreadInvariantAndStable) {
  const auto& ctx = ar1_context();
  const auto raw = start_vector(ctx);
  const auto a = moment_jacobian(raw, ctx);
  const auto b = moment_jacobian(raw, ctx, {.threads = 3});
  EXPECT_EQ(a.G, b.G);
  EXPECT_EQ(a.G.rows(), 128);
  EXPECT_EQ(static_cast<std::size_t>(a.G.cols()), ctx.layout.size);

  JacobianOptions fine;
  fine.scale = 0.1;
  const auto c = moment_jacobian(raw, ctx, fine);
  const auto mask = detail::weight_mask(ctx);
  for (std::size_t j = 0; j < a.p; ++j) {
    if (mask[j]) continue;
    const auto col = static_cast<Eigen::Index>(j);
    const double scale = std::max(1e-3, a.G.col(col).norm());
    EXPECT_LT((a.G.col(col) - c.G.col(col)).norm() / scale, 0.05) << a.names[j];
  }

  const auto A = detail::weighted_gram(a.G, ctx.grid.weights);
  EXPECT_TRUE(A.isApprox(A.transpose()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
}

TEST(Bootstrap, IidMeanMatchesAnalyticStandardError) {
  RngStream g(4, 0);
  std::vector<double> x(2000);
  for (auto& v : x) v = 3.0 + 2.0 * g.normal();
  double m = 0.0, s = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  for (double v : x) s += (v - m) * (v - m);
  const double analytic = std::sqrt(s / static_cast<double>(x.size() - 1)) / std::sqrt(static_cast<double>(x.size()));
  const auto mean = [](std::span<const double> v) {
    double a = 0.0;
    for (double u : v) a += u;
    return a / static_cast<double>(v.size());
  };
  const double se = block_bootstrap_statistic_se(x, mean, 500, 1, 11);
  EXPECT_NEAR(se / analytic, 1.0, 0.15);
}

TEST(Bootstrap, BlockIndicesCoverRange) {
  RngStream g(1, 0);
  const auto idx = block_bootstrap_indices(100, 7, g);
  ASSERT_EQ(idx.size(), 100u);
  for (std::size_t v : idx) EXPECT_LT(v, 100u);
  EXPECT_THROW((void)block_bootstrap_indices(10, 11, g), validation_error);
}

TEST(Bootstrap, ReportShapesAndFunctionals) {
  const auto& ctx = ar1_context();
  const auto raw = start_vector(ctx);
  const auto J = moment_jacobian(raw, ctx);
  EXPECT_THROW((void)block_bootstrap_se(raw, ctx, J, {.B = 0}), validation_error);
  EXPECT_THROW((void)block_bootstrap_se(raw, ctx, J, {.B = 1}), validation_error);

  BootstrapOptions o;
  o.B = 40;
  o.seed = 3;
  const auto rep = block_bootstrap_se(raw, ctx, J, o);
  const auto rep2 = block_bootstrap_se(raw, ctx, J, o);
  EXPECT_EQ(rep.raw_se, rep2.raw_se);
  EXPECT_EQ(rep.block_len, default_block_length(ctx.data_embedding.rows));
  EXPECT_TRUE(rep.V.isApprox(rep.V.transpose()));
  for (std::size_t j = 0; j < rep.raw_se.size(); ++j) {
    std::vector<double> e(rep.raw_se.size(), 0.0);
    e[j] = 1.0;
    EXPECT_NEAR(functional_se(rep, e), rep.raw_se[j], 1e-12);
  }
  EXPECT_EQ(functional_se(rep, std::vector<double>(rep.raw_se.size(), 0.0)), 0.0);
  EXPECT_THROW((void)functional_se(rep, std::vector<double>{1.0}), validation_error);

  const auto grad = functional_gradient([](const DecodedParams& d) { return d.theta[1]; }, raw, ctx);
  const auto& ps = ctx.config.model.theta[1];
  EXPECT_NEAR(grad[1], detail::bounded_slope(raw[1], ps.lower, ps.upper), 1e-6);
  EXPECT_NEAR(functional_se(rep, grad), rep.theta_se[1], 1e-6 * (1.0 + rep.theta_se[1]));
  EXPECT_EQ(grad[0], 0.0);

  const auto j = to_json(rep, illposedness_diagnostic(J.G, ctx.grid.weights, 0.5, mixture_columns(ctx.layout)));
  EXPECT_EQ(j["B"].get<std::size_t>(), 40u);
  EXPECT_TRUE(j["se"].contains("rho_y"));
}
