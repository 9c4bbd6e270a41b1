#pragma once

#include <boost/math/tools/roots.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "sievesmm/dgp.hpp"
#include "sievesmm/errors.hpp"
#include "sievesmm/mixture.hpp"
#include "sievesmm/parallel.hpp"
#include "sievesmm/quadrature.hpp"
#include "sievesmm/random.hpp"

namespace sievesmm {

// Power-utility preferences on a monthly model; delta = exp(-a).
struct PreferenceParams {
  double gamma = 4.0;
  double a = -std::log(0.99) / 3.0; // quarterly discount factor 0.99
  std::size_t horizon = 5000;
  std::size_t reps = 1000;
};

inline void validate(const PreferenceParams& p) {
  detail::require(p.gamma >= 0.0 && std::isfinite(p.gamma), "preferences: gamma must be >= 0");
  detail::require(p.a > 0.0 && std::isfinite(p.a), "preferences: need 0 < delta < 1");
}

// Unit handling for the consumption-growth model.
//  data_scale: multiplies growth rates and volatilities before they enter utility
//    (0.01 for growth measured in percent).
//  long_run_mean: read mu_sigma as the long-run mean of sigma^2, so the variance intercept
//    is mu_sigma (1 - rho_sigma).
struct ConsumptionUnits {
  double data_scale = 1.0;
  bool long_run_mean = false;
};

struct RiskFreeOptions {
  std::size_t quad_nodes = 64;
  ConsumptionUnits units;
};

struct RiskFreeResult {
  double rate = 0.0;        // per period
  double predictable = 0.0; // gamma mu_c + gamma rho_c dc
  double uncertainty = 0.0; // -log E[(C'/C)^-gamma]-type term
  std::size_t floored = 0;  // quadrature nodes with negative variance set to 0
};

namespace detail {

inline void require_gaussian(const MixtureParams& p) {
  if (p.weights[p.k] > 0.0 || p.weights[p.k + 1] > 0.0)
    throw unsupported_error("risk-free rate: the mixture MGF needs Gaussian components only (tail weight > 0)");
}

inline double variance_intercept(const SvLinearParams& th, const ConsumptionUnits& u) {
  return u.long_run_mean ? th.mu_sigma * (1.0 - th.rho_sigma) : th.mu_sigma;
}

// log sum_i q_i sum_j w_j exp(-gamma mu_j s_i + gamma^2 sigma_j^2 s_i^2 / 2), s_i^2 = base + kappa (z_i^2 - 1).
inline double log_mgf_term(const SvLinearParams& th, const MixtureParams& p, double gamma, double sigma2,
                           const NormalQuadrature& q, const ConsumptionUnits& u, std::size_t& floored) {
  const double c2 = u.data_scale * u.data_scale;
  const double base = variance_intercept(th, u) + th.rho_sigma * sigma2;
  std::vector<double> logs;
  logs.reserve(q.nodes.size() * p.k);
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    double s2 = base + th.kappa_sigma * (q.nodes[i] * q.nodes[i] - 1.0);
    if (s2 < 0.0) {
      s2 = 0.0;
      ++floored;
    }
    s2 *= c2;
    const double s = std::sqrt(s2);
    for (std::size_t j = 0; j < p.k; ++j) {
      if (p.weights[j] <= 0.0) continue;
      const double sj = p.scales[j];
      logs.push_back(std::log(q.weights[i]) + std::log(p.weights[j]) - gamma * p.locations[j] * s +
                     0.5 * gamma * gamma * sj * sj * s2);
    }
  }
  const double top = *std::max_element(logs.begin(), logs.end());
  double acc = 0.0;
  for (double v : logs) acc += std::exp(v - top);
  return top + std::log(acc);
}

} // namespace detail

// r_t = a + gamma mu_c + gamma rho_c dc_t - log sum_j w_j E_{e2}[exp(-gamma mu_j s + gamma^2 sigma_j^2 s^2 / 2)],
// s^2 = mu_sigma + rho_sigma sigma_t^2 + kappa_sigma (e2 - 1), e2 = z^2 with z on Gauss-Hermite nodes.
[[nodiscard]] inline RiskFreeResult risk_free_rate(const SvLinearParams& th, const MixtureParams& p,
                                                   const PreferenceParams& pref, double dc, double sigma2,
                                                   const RiskFreeOptions& opt = {}) {
  validate(pref);
  detail::require(opt.quad_nodes >= 8, "risk_free_rate: need at least 8 quadrature nodes");
  detail::require(std::isfinite(dc) && std::isfinite(sigma2), "risk_free_rate: state must be finite");
  detail::require_gaussian(p);
  const auto q = gauss_hermite_normal(opt.quad_nodes);
  RiskFreeResult r;
  const double g = pref.gamma, c = opt.units.data_scale;
  r.predictable = g * th.mu_c * c + g * th.rho_c * dc * c;
  r.uncertainty = -detail::log_mgf_term(th, p, g, sigma2, q, opt.units, r.floored);
  if (!std::isfinite(r.uncertainty)) throw numeric_error("risk_free_rate: uncertainty term is not finite");
  r.rate = pref.a + r.predictable + r.uncertainty;
  return r;
}

// Stationary draws of sigma_t^2 from the variance recursion (chi-square(1) shocks).
[[nodiscard]] inline std::vector<double> stationary_variance_draws(const SvLinearParams& th, std::size_t count,
                                                                   std::uint64_t seed, std::size_t burn_in = 1000,
                                                                   const ConsumptionUnits& u = {}, double eps = 1e-12) {
  detail::require(count >= 1, "stationary_variance_draws: count must be >= 1");
  detail::require(th.rho_sigma >= 0.0 && th.rho_sigma < 1.0, "stationary_variance_draws: rho_sigma must lie in [0, 1)");
  const double mu = detail::variance_intercept(th, u);
  detail::require(mu > 0.0, "stationary_variance_draws: variance intercept must be positive");
  RngStream g(seed, 7);
  double v = mu / (1.0 - th.rho_sigma);
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t t = 0; t < burn_in + count; ++t) {
    const double z = g.normal();
    v = std::max(eps, mu + th.rho_sigma * v + th.kappa_sigma * (z * z - 1.0));
    if (t >= burn_in) out.push_back(v);
  }
  return out;
}

struct UncertaintyOptions {
  std::size_t quad_nodes = 64;
  ConsumptionUnits units;
  std::size_t draws = 10000;
  std::size_t burn_in = 1000;
  std::uint64_t seed = 1;
  double periods_per_year = 12.0;
};

struct UncertaintyResult {
  double effect = 0.0;     // annualized percent
  double per_period = 0.0; // average uncertainty term per period
  std::size_t floored = 0;
};

// Annualized percent effect of uncertainty, averaged over stationary sigma_t^2 draws
// (a deterministic state when kappa_sigma = 0).
[[nodiscard]] inline UncertaintyResult uncertainty_component(const SvLinearParams& th, const MixtureParams& p, double gamma,
                                                             const UncertaintyOptions& opt = {}) {
  detail::require(gamma >= 0.0, "uncertainty_component: gamma must be >= 0");
  detail::require(opt.quad_nodes >= 8, "uncertainty_component: need at least 8 quadrature nodes");
  detail::require_gaussian(p);
  const auto q = gauss_hermite_normal(opt.quad_nodes);
  std::vector<double> s2;
  if (th.kappa_sigma == 0.0) s2 = {detail::variance_intercept(th, opt.units) / (1.0 - th.rho_sigma)};
  else s2 = stationary_variance_draws(th, opt.draws, opt.seed, opt.burn_in, opt.units);
  UncertaintyResult r;
  double acc = 0.0;
  for (double v : s2) acc += -detail::log_mgf_term(th, p, gamma, v, q, opt.units, r.floored);
  r.per_period = acc / static_cast<double>(s2.size());
  r.effect = r.per_period * opt.periods_per_year * 100.0;
  return r;
}

// Consumption model for the welfare calculation.
enum class WelfareModel {
  trend_stationary, // log C_t = mu t + sigma e_t, e_t iid from the mixture
  sv_growth         // dc_t = mu_c + rho_c dc_{t-1} + sigma_t e_t with the linear variance recursion
};

struct WelfareOptions {
  WelfareModel model = WelfareModel::sv_growth;
  ConsumptionUnits units;
  std::uint64_t seed = 1;
  double trend = 0.0; // mu for the trend-stationary model (already in utility units)
  double sigma = 0.0; // sigma for the trend-stationary model (already in utility units)
  std::size_t chunks = 16; // fixed partition of replications for deterministic reduction
  unsigned threads = 0;
};

struct WelfareResult {
  double lambda = 0.0; // proportion, multiply by 100 for percent
  double log_lhs = 0.0;
  double log_rhs = 0.0;
};

namespace detail {

inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

} // namespace detail

// Welfare cost lambda solving (1+lambda)^(1-gamma) sum_t delta^t E[C_t^(1-gamma)] = sum_t delta^t C*_t^(1-gamma)
// (the utility constants cancel once lambda scales consumption), with C*_t = E[C_t] the
// certainty-equivalent path. Expectations are replication averages from one set of paths.
[[nodiscard]] inline WelfareResult welfare_cost(const SvLinearParams& th, const MixtureParams& p, const PreferenceParams& pref,
                                                const WelfareOptions& opt = {}) {
  validate(pref);
  detail::require(pref.gamma != 1.0, "welfare_cost: gamma = 1 (log utility) is not supported");
  detail::require(pref.horizon >= 1 && pref.reps >= 1, "welfare_cost: horizon and replications must be >= 1");
  detail::require(opt.chunks >= 1, "welfare_cost: chunks must be >= 1");
  validate(p);
  const double g1 = 1.0 - pref.gamma, c = opt.units.data_scale;
  const std::size_t H = pref.horizon, R = pref.reps;
  const bool sv = opt.model == WelfareModel::sv_growth;
  double drift = opt.trend;
  if (sv) {
    detail::require(std::abs(th.rho_c) < 1.0 && th.rho_sigma >= 0.0 && th.rho_sigma < 1.0,
                    "welfare_cost: persistence parameters must be inside [0, 1)");
    drift = c * th.mu_c / (1.0 - th.rho_c);
  }
  const double mu_v = sv ? detail::variance_intercept(th, opt.units) : 0.0;
  if (sv) detail::require(mu_v > 0.0, "welfare_cost: variance intercept must be positive");

  // Per chunk and period: sums of exp(x - ref_t) and exp(g1 (x - ref_t)), x = log C_t, ref_t = drift t.
  const std::size_t chunks = std::min(opt.chunks, R);
  std::vector<std::vector<double>> s1(chunks, std::vector<double>(H, 0.0)), s2(chunks, std::vector<double>(H, 0.0));
  const KeyedRng rng(opt.seed);
  parallel_for(
      chunks,
      [&](std::size_t ch) {
        const std::size_t r0 = R * ch / chunks, r1 = R * (ch + 1) / chunks;
        std::vector<double> z(p.k);
        for (std::size_t r = r0; r < r1; ++r) {
          const auto rr = static_cast<std::uint32_t>(r);
          double x = 0.0, dc = th.mu_c / (1.0 - th.rho_c), v = sv ? mu_v / (1.0 - th.rho_sigma) : 0.0;
          for (std::size_t t = 0; t < H; ++t) {
            const auto tt = static_cast<std::uint32_t>(t);
            for (std::size_t j = 0; j < p.k; ++j)
              z[j] = rng.normal(tt, rr, detail::channel_normal0 + static_cast<std::uint32_t>(j));
            const double e = sample(p, rng.uniform(tt, rr, detail::channel_select), z, rng.uniform(tt, rr, detail::channel_left),
                                    rng.uniform(tt, rr, detail::channel_right));
            double dev;
            if (sv) {
              const double w = rng.normal(tt, rr, detail::channel_vol);
              v = std::max(1e-12, mu_v + th.rho_sigma * v + th.kappa_sigma * (w * w - 1.0));
              dc = th.mu_c + th.rho_c * dc + std::sqrt(v) * e;
              x += c * dc;
              dev = x - drift * static_cast<double>(t + 1);
            } else {
              dev = opt.sigma * e;
            }
            s1[ch][t] += std::exp(dev);
            s2[ch][t] += std::exp(g1 * dev);
          }
        }
      },
      opt.threads);

  double log_lhs = -std::numeric_limits<double>::infinity(), log_rhs = log_lhs;
  for (std::size_t t = 0; t < H; ++t) {
    double a1 = 0.0, a2 = 0.0;
    for (std::size_t ch = 0; ch < chunks; ++ch) {
      a1 += s1[ch][t];
      a2 += s2[ch][t];
    }
    const double ref = drift * static_cast<double>(sv ? t + 1 : t);
    const double lm1 = ref + std::log(a1 / static_cast<double>(R));
    const double lm2 = g1 * ref + std::log(a2 / static_cast<double>(R));
    const double disc = -pref.a * static_cast<double>(t);
    log_lhs = detail::log_add(log_lhs, disc + lm2);
    log_rhs = detail::log_add(log_rhs, disc + g1 * lm1);
  }
  if (!std::isfinite(log_lhs) || !std::isfinite(log_rhs)) throw numeric_error("welfare_cost: utility sums diverge");

  const auto f = [&](double lam) { return g1 * std::log1p(lam) + log_lhs - log_rhs; };
  double lo = -0.5, hi = 1.0;
  while (f(lo) * f(hi) > 0.0 && hi < 1e6) {
    lo = -1.0 + (1.0 + lo) / 2.0;
    hi *= 4.0;
  }
  if (f(lo) * f(hi) > 0.0) throw numeric_error("welfare_cost: could not bracket lambda");
  boost::uintmax_t iters = 200;
  const auto root = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  WelfareResult out;
  out.lambda = 0.5 * (root.first + root.second);
  out.log_lhs = log_lhs;
  out.log_rhs = log_rhs;
  return out;
}

// Closed form for the trend-stationary Gaussian model: log(1 + lambda) = gamma sigma^2 / 2.
[[nodiscard]] inline double lucas_welfare_cost(double gamma, double sigma) { return std::expm1(0.5 * gamma * sigma * sigma); }

} // namespace sievesmm
