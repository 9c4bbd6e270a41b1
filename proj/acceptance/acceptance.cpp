// Acceptance suite: one [PASS]/[FAIL] line per criterion. Usage: sievesmm_acceptance [criterion ...]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "sievesmm/sievesmm.hpp"

using namespace sievesmm;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [miss]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

bool inside(double v, double lo, double hi) { return v >= lo && v <= hi; }

const ParameterSummary& parameter(const MonteCarloSummary& s, const std::string& name) {
  for (const auto& p : s.parameters)
    if (p.name == name) return p;
  throw validation_error("no parameter " + name);
}

// Design shared by the AR(1) checks (criteria 1, 7, 9, 10).
EstimationConfig ar1_design() {
  EstimationConfig e;
  e.model = make_model(ModelKind::ar1, 1000, 25);
  e.model.theta[1].value = 0.95;
  e.mixture.k = 2;
  e.grid.m = 200;
  return e;
}

const ObjectiveContext& ar1_context() {
  static const ObjectiveContext ctx = [] {
    const auto e = ar1_design();
    return make_context(e, simulate_truth(e.model, e.model.values(), gev_truth(), 101).data);
  }();
  return ctx;
}

// Criterion 1: AR(1) Monte Carlo, n = 1000, S = 25, k = 2, GEV shocks, rho = 0.95, R = 100.
Outcome ar1_montecarlo() {
  MonteCarloConfig c;
  c.estimation = ar1_design();
  c.shocks = gev_truth();
  c.replications = 100;
  c.master_seed = 11;
  const auto s = monte_carlo(c);
  const auto& rho = parameter(s, "rho_y");
  Outcome o;
  o.check(inside(rho.mean, 0.93, 0.965), fmt("mean rho %.4f in [0.93, 0.965]", rho.mean));
  o.check(inside(rho.sqrt_n_sd, 0.25, 0.55), fmt("sqrt(n) SD %.3f in [0.25, 0.55]", rho.sqrt_n_sd));
  o.check(s.n_fail == 0, fmt("failed replications %.0f", static_cast<double>(s.n_fail)));
  return o;
}

// Criterion 2: stochastic volatility, n = 1000, S = 2, k = 4, GEV shocks, GARCH-augmented CF, R = 50.
Outcome sv_montecarlo() {
  MonteCarloConfig c;
  auto& e = c.estimation;
  e.model = make_model(ModelKind::sv_lognormal, 1000, 2);
  e.model.theta[2].value = -0.736;
  e.model.theta[3].value = 0.90;
  e.model.theta[4].value = 0.363;
  e.mixture.k = 4;
  e.aux.enabled = true;
  e.grid.m = 200;
  e.optimizer.max_evals = 6000;
  c.shocks = gev_truth();
  c.replications = 50;
  c.master_seed = 11;
  const auto s = monte_carlo(c);
  const auto& rho = parameter(s, "rho_sigma");
  const auto& kappa = parameter(s, "kappa_sigma");
  Outcome o;
  o.check(inside(rho.mean, 0.85, 0.95), fmt("mean rho_sigma %.4f (sd %.4f) in [0.85, 0.95]", rho.mean, rho.sd));
  o.check(inside(kappa.mean, 0.32, 0.48), fmt("mean kappa_sigma %.4f (sd %.4f) in [0.32, 0.48]", kappa.mean, kappa.sd));
  return o;
}

// Criterion 3: dynamic Tobit, 200 units, T = 5, burn-in 10, S = 5, R = 100.
Outcome tobit_montecarlo() {
  MonteCarloConfig c;
  auto& e = c.estimation;
  e.model = make_panel_model(200, 5, 5, 10);
  e.model.theta[0].value = -1.25;
  e.model.theta[1].value = 1.0;
  e.model.theta[2].value = 0.8;
  e.mixture.k = 2;
  e.grid.m = 200;
  c.shocks = gev_truth();
  c.replications = 100;
  c.master_seed = 11;
  const auto s = monte_carlo(c);
  const auto& rho = parameter(s, "rho");
  const auto& slope = parameter(s, "theta_slope");

  // Censoring share of the true model on a large panel.
  auto big = e.model;
  big.panel.units = 100000;
  const double censored =
      simulate_truth(big, std::vector<double>{-1.25, 1.0, 0.8}, gev_truth(), 12345, 500, c.regressor).censored_fraction;

  Outcome o;
  o.check(inside(rho.mean, 0.77, 0.83), fmt("mean rho %.4f in [0.77, 0.83]", rho.mean));
  o.check(inside(slope.mean, 0.96, 1.04), fmt("mean theta_slope %.4f in [0.96, 1.04]", slope.mean));
  o.check(std::abs(censored - 0.40) <= 0.03, fmt("censored share of the truth %.3f within 0.40 +/- 0.03", censored));
  return o;
}

// Shock mixture and estimates used for the consumption counterfactuals.
MixtureParams three_component_shock() {
  return make_gaussian_mixture({0.8437947344813388, 0.11419519938459323, 0.04201006613406802},
                               {0.02145015645097188, 0.2687463194155016, -1.161366145936493},
                               {0.8148560906789439, 1.0899872013017171, 2.383979790900396});
}

SvLinearParams sieve_estimates() { return {0.21 * (1.0 - 0.32), 0.32, 0.43, 0.75, 0.13}; }

ConsumptionUnits percent_units() { return {0.01, true}; }

// Criterion 4: risk-free closed form and the uncertainty effect at gamma = 4.
Outcome risk_free() {
  Outcome o;
  double worst = 0.0;
  for (double g : {0.0, 1.0, 2.0, 4.0, 10.0})
    for (double dc : {-1.0, 0.0, 0.7}) {
      const SvLinearParams th{0.15, 0.3, 0.2, 0.6, 0.0};
      const double sigma2 = 0.5, v = 0.2 + 0.6 * sigma2;
      PreferenceParams pr;
      pr.gamma = g;
      const double r = risk_free_rate(th, standard_normal_mixture(), pr, dc, sigma2).rate;
      const double closed = pr.a + g * 0.15 + g * 0.3 * dc - 0.5 * g * g * v;
      worst = std::max(worst, std::abs(r - closed));
    }
  o.check(worst <= 1e-10, fmt("lognormal closed form max error %.2e <= 1e-10", worst));

  UncertaintyOptions u;
  u.units = percent_units();
  const double effect = uncertainty_component(sieve_estimates(), three_component_shock(), 4.0, u).effect;
  o.check(std::abs(effect - (-1.02)) <= 0.15, fmt("uncertainty effect at gamma 4: %.3f within -1.02 +/- 0.15", effect));
  return o;
}

// Criterion 5: welfare cost.
Outcome welfare() {
  Outcome o;
  PreferenceParams pr;
  WelfareOptions iid;
  iid.model = WelfareModel::trend_stationary;
  iid.trend = 0.0021;
  iid.sigma = 0.0075;
  for (double g : {2.0, 4.0, 10.0}) {
    pr.gamma = g;
    const double lam = welfare_cost({}, standard_normal_mixture(), pr, iid).lambda;
    const double closed = lucas_welfare_cost(g, iid.sigma);
    o.check(std::abs(lam / closed - 1.0) <= 0.05, fmt("gamma %.0f: lambda / closed form = %.4f", g, lam / closed));
  }
  pr.gamma = 4.0;
  WelfareOptions sv;
  sv.units = percent_units();
  const double lam = 100.0 * welfare_cost(sieve_estimates(), three_component_shock(), pr, sv).lambda;
  o.check(inside(lam, 1.5, 2.1), fmt("stochastic-volatility lambda at gamma 4: %.3f%% in [1.5, 2.1]", lam));
  return o;
}

// Random valid mixture with tails; points outside the sieve box are redrawn.
MixtureParams random_mixture(RngStream& g) {
  while (true) {
    MixtureConfig cfg;
    cfg.k = 1 + g.below(5);
    cfg.flags.tails = true;
    auto raw = neutral_raw(cfg);
    for (std::size_t j = 0; j < cfg.k + 2; ++j) {
      raw.w[j] = 1.5 * g.normal();
      raw.mu[j] = g.normal();
      raw.sigma[j] = 0.5 * g.normal();
    }
    raw.xi_left = g.normal();
    raw.xi_right = g.normal();
    try {
      return transform_params(raw, cfg);
    } catch (const degenerate_error&) {
    }
  }
}

// Integral of the density over [a, b], split at component locations.
double integral(const MixtureParams& p, double a, double b, double tol) {
  const auto f = [&](double e) { return density(p, e); };
  std::vector<double> cuts{a, b};
  for (std::size_t j = 0; j < p.size(); ++j)
    if (p.weights[j] > 0.0 && p.locations[j] > a && p.locations[j] < b) cuts.push_back(p.locations[j]);
  std::sort(cuts.begin(), cuts.end());
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) s += integrate(f, cuts[i], cuts[i + 1], tol);
  return s;
}

// Criterion 6: mixture density, sampler and tail inversion.
Outcome mixture_properties() {
  Outcome o;
  constexpr double inf = std::numeric_limits<double>::infinity();
  RngStream g(2024, 1);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) worst = std::max(worst, std::abs(integral(random_mixture(g), -inf, inf, 1e-12) - 1.0));
  o.check(worst <= 1e-6, fmt("50 mixtures with tails integrate to 1, max error %.2e", worst));

  double ks_worst = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    const auto p = random_mixture(g);
    RngStream d(77, static_cast<std::uint32_t>(rep));
    const int n = 100000;
    std::vector<double> x(n), z(p.k);
    for (auto& v : x) {
      const double nu = d.uniform();
      for (auto& zz : z) zz = d.normal();
      v = sample(p, nu, z, d.uniform(), d.uniform());
    }
    std::sort(x.begin(), x.end());
    const int cells = 4000;
    const double a = x.front(), h = (x.back() - a) / cells;
    double F = integral(p, -inf, a, 1e-10), ks = 0.0;
    for (int c = 0; c <= cells; ++c) {
      const double e = a + h * c;
      if (c > 0) F += integral(p, e - h, e, 1e-10);
      const double emp = static_cast<double>(std::upper_bound(x.begin(), x.end(), e) - x.begin()) / n;
      ks = std::max(ks, std::abs(F - emp));
    }
    ks_worst = std::max(ks_worst, ks);
  }
  o.check(ks_worst < 0.01, fmt("KS distance at 1e5 draws, worst of 5 mixtures %.4f < 0.01", ks_worst));

  double inv = 0.0;
  for (double xi : {1.0, 2.5, 7.0, 20.0})
    for (int i = 1; i < 1000; ++i) {
      const double nu = i / 1000.0;
      inv = std::max(inv, std::abs(tail_cdf(tail_quantile(nu, xi, TailSide::left), xi, TailSide::left) - nu));
      inv = std::max(inv, std::abs(tail_cdf(tail_quantile(nu, xi, TailSide::right), xi, TailSide::right) - nu));
      const double q = tail_quantile(nu, xi, TailSide::right);
      inv = std::max(inv, std::abs(integrate([&](double e) { return tail_density(e, xi, TailSide::right); }, 0.0, q, 1e-12) - nu));
    }
  o.check(inv < 1e-6, fmt("tail quantile / CDF inversion error %.2e < 1e-6", inv));
  return o;
}

// Criterion 7: CF invariants and objective bounds.
Outcome cf_properties() {
  Outcome o;
  const auto& ctx = ar1_context();
  auto grid = ctx.grid;
  const std::size_t m = grid.m, d = grid.d;
  grid.points.resize((m + 1) * d, 0.0);
  for (std::size_t i = 0; i < m * d; ++i) grid.points.push_back(-ctx.grid.points[i]);
  grid.m = 2 * m + 1;
  grid.weights.assign(grid.m, 1.0 / static_cast<double>(grid.m));
  const auto psi = empirical_cf(ctx.data_embedding, grid);
  double modulus = 0.0, conj = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    modulus = std::max(modulus, std::abs(psi[l]));
    conj = std::max(conj, std::abs(psi[l] - std::conj(psi[m + 1 + l])));
  }
  o.check(psi[m] == std::complex<double>(1.0, 0.0), "psi(0) == 1 exactly");
  o.check(modulus <= 1.0 + 1e-15, fmt("max |psi| %.15f <= 1", modulus));
  o.check(conj <= 1e-12, fmt("conjugate symmetry error %.2e <= 1e-12", conj));

  // Data equal to the simulated sample: matched CFs.
  auto e = ar1_design();
  e.model.S = 1;
  const auto small = make_context(e, simulate_truth(e.model, e.model.values(), gev_truth(), 5).data);
  const auto raw = start_vector(small);
  const auto dec = decode(raw, small);
  Dataset copy;
  copy.y = simulate_for_estimation(e.model, dec.theta, dec.mixture, small.draws).samples[0].y;
  const auto matched = make_context(e, copy);
  const double q0 = objective(raw, matched);
  o.check(q0 == 0.0, fmt("objective on matched CFs %.3g == 0", q0));

  RngStream g(31, 0);
  double qmax = 0.0;
  std::size_t finite = 0;
  for (int i = 0; i < 200; ++i) {
    auto x = start_vector(ctx);
    for (auto& v : x) v += 1.5 * g.normal();
    const double q = objective(x, ctx);
    if (std::isfinite(q)) {
      ++finite;
      qmax = std::max(qmax, q);
    }
  }
  o.check(qmax <= 4.0 && finite > 0, fmt("max objective over %.0f random valid points %.4f <= 4", static_cast<double>(finite), qmax));
  return o;
}

// Criterion 8: bit-reproducibility across runs and thread counts.
Outcome determinism() {
  Outcome o;
  EstimationConfig e;
  e.model = make_model(ModelKind::ar1, 500, 4);
  e.model.theta[1].value = 0.7;
  e.mixture.k = 2;
  e.grid.m = 100;
  e.optimizer.max_evals = 500;
  const auto data = simulate_truth(e.model, std::vector<double>{0.0, 0.9}, gev_truth(), 8).data;

  set_default_threads(1);
  const auto ctx1 = make_context(e, data);
  const auto a = estimate(ctx1), b = estimate(ctx1);
  set_default_threads(3);
  const auto ctx3 = make_context(e, data);
  const auto c = estimate(ctx3);
  set_default_threads(1);
  o.check(a.raw == b.raw && a.objective == b.objective && a.raw == c.raw && a.trace == c.trace,
          "estimate() identical across runs and 1 vs 3 threads");

  const auto j1 = moment_jacobian(a.raw, ctx1, {.threads = 1});
  const auto j2 = moment_jacobian(a.raw, ctx1, {.threads = 1});
  const auto j3 = moment_jacobian(a.raw, ctx1, {.threads = 3});
  o.check(j1.G == j2.G && j1.G == j3.G, "moment_jacobian() identical across runs and thread counts");

  BootstrapOptions bo;
  bo.B = 50;
  bo.seed = 17;
  bo.threads = 1;
  const auto b1 = block_bootstrap_se(a.raw, ctx1, j1, bo);
  const auto b2 = block_bootstrap_se(a.raw, ctx1, j1, bo);
  bo.threads = 3;
  const auto b3 = block_bootstrap_se(a.raw, ctx1, j1, bo);
  o.check(b1.raw_se == b2.raw_se && b1.raw_se == b3.raw_se && b1.V == b3.V,
          "bootstrap identical across runs and thread counts");
  return o;
}

// Criterion 9: Richardson check of the moment Jacobian on the AR(1) design.
Outcome richardson() {
  Outcome o;
  const auto& ctx = ar1_context();
  const auto raw = start_vector(ctx);
  const auto a = moment_jacobian(raw, ctx);
  JacobianOptions fine;
  fine.scale = 0.1;
  const auto b = moment_jacobian(raw, ctx, fine);
  const auto weights = raw_weight_coordinates(ctx.config.mixture);
  std::set<std::size_t> skip;
  for (std::size_t j : weights) skip.insert(ctx.layout.mixture_offset + j);
  double worst = 0.0;
  std::string where;
  for (std::size_t j = 0; j < a.p; ++j) {
    if (skip.count(j)) continue;
    const auto col = static_cast<Eigen::Index>(j);
    const double rel = (a.G.col(col) - b.G.col(col)).norm() / std::max(a.G.col(col).norm(), 1e-300);
    if (rel > worst) {
      worst = rel;
      where = a.names[j];
    }
  }
  o.check(worst <= 1e-4, fmt("max relative difference h vs h/10 %.2e <= 1e-4", worst) + " (" + where + ", " +
                             std::to_string(a.p - skip.size()) + " smooth columns)");
  return o;
}

// Criterion 10: ill-posedness diagnostic.
Outcome illposedness() {
  Outcome o;
  const auto& ctx = ar1_context();
  const auto J = moment_jacobian(start_vector(ctx), ctx);
  const double floor = ctx.config.mixture.floor();
  const auto r = illposedness_diagnostic(J.G, ctx.grid.weights, floor, mixture_columns(ctx.layout));
  o.check(r.lambda_min > 0.0 && !r.ill_posed, fmt("AR(1) design, k = 2: lambda_min %.3e > 0", r.lambda_min));
  o.check(r.sup_bound == r.tv_bound / floor, "bound_sup == bound_TV / floor exactly");

  Eigen::MatrixXd G = Eigen::MatrixXd::Random(40, 4);
  G.col(3) = 2.0 * G.col(1) - G.col(0);
  const std::vector<double> w(20, 0.05);
  const auto s = illposedness_diagnostic(G, w, 0.5);
  o.check(s.lambda_min == 0.0 && s.ill_posed && !s.warnings.empty(), "rank-deficient Gram: lambda_min 0 with warning");
  return o;
}

} // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AR(1) Monte Carlo", ar1_montecarlo},
      {"stochastic volatility Monte Carlo", sv_montecarlo},
      {"dynamic Tobit Monte Carlo", tobit_montecarlo},
      {"risk-free rate", risk_free},
      {"welfare cost", welfare},
      {"mixture density and sampler", mixture_properties},
      {"CF invariants", cf_properties},
      {"determinism", determinism},
      {"Jacobian Richardson check", richardson},
      {"ill-posedness diagnostic", illposedness},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
