#pragma once

#include <json.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sievesmm/errors.hpp"
#include "sievesmm/optimize.hpp"

namespace sievesmm {

enum class GarchVariant { garch, avgarch };

inline std::string to_string(GarchVariant v) { return v == GarchVariant::garch ? "garch" : "avgarch"; }

inline GarchVariant garch_variant_from_string(const std::string& s) {
  if (s == "garch") return GarchVariant::garch;
  if (s == "avgarch") return GarchVariant::avgarch;
  throw validation_error("unknown GARCH variant '" + s + "'");
}

struct GarchParams {
  double mu = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  GarchVariant variant = GarchVariant::garch;
  bool converged = true;
  double loglik = std::numeric_limits<double>::quiet_NaN();
};

inline void validate(const GarchParams& g) {
  detail::require(g.mu > 0.0 && std::isfinite(g.mu), "garch: intercept must be positive");
  detail::require(g.alpha1 >= 0.0 && g.alpha2 >= 0.0, "garch: coefficients must be nonnegative");
  if (g.variant == GarchVariant::garch)
    detail::require(g.alpha1 + g.alpha2 < 1.0, "garch: alpha1 + alpha2 must be < 1");
  else
    detail::require(g.alpha2 < 1.0, "avgarch: alpha2 must be < 1");
}

namespace detail {

// Starting level of the filter: the unconditional variance (garch) or the
// unconditional scale under Gaussian |y| (avgarch).
inline double garch_start(const GarchParams& g) {
  if (g.variant == GarchVariant::garch) return g.mu / (1.0 - g.alpha1 - g.alpha2);
  const double denom = 1.0 - g.alpha2 - g.alpha1 * std::sqrt(2.0 / std::numbers::pi);
  return denom > 0.0 ? g.mu / denom : g.mu / (1.0 - g.alpha2);
}

// Conditional standard deviations with a given starting level (variance for garch, sd for avgarch).
inline void garch_recursion(std::span<const double> y, const GarchParams& g, double start, std::span<double> sigma) {
  if (g.variant == GarchVariant::garch) {
    double v = start;
    for (std::size_t t = 0; t < y.size(); ++t) {
      if (t > 0) v = g.mu + g.alpha1 * y[t - 1] * y[t - 1] + g.alpha2 * v;
      sigma[t] = std::sqrt(v);
    }
  } else {
    double s = start;
    for (std::size_t t = 0; t < y.size(); ++t) {
      if (t > 0) s = g.mu + g.alpha1 * std::abs(y[t - 1]) + g.alpha2 * s;
      sigma[t] = s;
    }
  }
}

inline GarchParams garch_from_raw(std::span<const double> r, GarchVariant v) {
  GarchParams g;
  g.variant = v;
  g.mu = std::exp(r[0]);
  if (v == GarchVariant::garch) {
    const double m = std::max({0.0, r[1], r[2]});
    const double e0 = std::exp(-m), e1 = std::exp(r[1] - m), e2 = std::exp(r[2] - m);
    g.alpha1 = e1 / (e0 + e1 + e2);
    g.alpha2 = e2 / (e0 + e1 + e2);
  } else {
    g.alpha1 = std::exp(r[1]);
    g.alpha2 = 1.0 / (1.0 + std::exp(-r[2]));
  }
  return g;
}

} // namespace detail

// Filtered volatility sigma_t (standard deviation), sigma_t driven by y_{t-1}.
[[nodiscard]] inline std::vector<double> filter_garch11(std::span<const double> y, const GarchParams& g) {
  validate(g);
  std::vector<double> sigma(y.size());
  detail::garch_recursion(y, g, detail::garch_start(g), sigma);
  return sigma;
}

// Gaussian quasi log-likelihood with the filter started at `start`.
[[nodiscard]] inline double garch_loglik(std::span<const double> y, const GarchParams& g, double start) {
  std::vector<double> sigma(y.size());
  detail::garch_recursion(y, g, start, sigma);
  double ll = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double s = sigma[t];
    if (!(s > 0.0) || !std::isfinite(s)) return -std::numeric_limits<double>::infinity();
    const double z = y[t] / s;
    ll += -0.5 * (std::log(2.0 * std::numbers::pi) + 2.0 * std::log(s) + z * z);
  }
  return ll;
}

struct GarchFitOptions {
  double tol = 1e-8;
  std::size_t max_evals = 4000;
  std::size_t restarts = 3;
};

// Quasi-ML by Nelder-Mead over log/logit-transformed parameters; the filter starts at
// the sample variance (garch) or sample standard deviation (avgarch).
[[nodiscard]] inline GarchParams fit_garch11(std::span<const double> y, GarchVariant variant = GarchVariant::garch,
                                             const GarchFitOptions& opt = {}) {
  if (y.size() < 50) throw validation_error("fit_garch11: need at least 50 observations");
  double m = 0.0;
  for (double v : y) m += v;
  m /= static_cast<double>(y.size());
  double var = 0.0;
  for (double v : y) var += (v - m) * (v - m);
  var /= static_cast<double>(y.size());
  if (!(var > 0.0) || !std::isfinite(var)) throw degenerate_error("fit_garch11: series has no variation");
  const double start = variant == GarchVariant::garch ? var : std::sqrt(var);

  const auto nll = [&](std::span<const double> r) {
    const auto g = detail::garch_from_raw(r, variant);
    if (variant == GarchVariant::garch && !(g.alpha1 + g.alpha2 < 1.0)) return std::numeric_limits<double>::infinity();
    const double ll = garch_loglik(y, g, start);
    return std::isfinite(ll) ? -ll / static_cast<double>(y.size()) : std::numeric_limits<double>::infinity();
  };
  std::vector<double> x0;
  if (variant == GarchVariant::garch) {
    // alpha1 = 0.1, alpha2 = 0.8, intercept at the implied unconditional variance.
    x0 = {std::log(var * 0.1), std::log(0.1 / 0.1), std::log(0.8 / 0.1)};
  } else {
    const double sd = std::sqrt(var);
    x0 = {std::log(sd * 0.1), std::log(0.1), std::log(0.8 / 0.2)};
  }
  NelderMeadOptions nm;
  nm.tol = opt.tol / static_cast<double>(y.size());
  nm.max_evals = opt.max_evals;
  nm.restarts = opt.restarts;
  nm.initial_step = 0.5;
  const auto r = nelder_mead(nll, x0, nm);
  auto g = detail::garch_from_raw(r.x, variant);
  g.converged = r.converged;
  g.loglik = -r.f * static_cast<double>(y.size());
  validate(g);
  return g;
}

inline nlohmann::ordered_json to_json(const GarchParams& g) {
  return {{"variant", to_string(g.variant)}, {"mu", g.mu},
          {"alpha1", g.alpha1},              {"alpha2", g.alpha2},
          {"converged", g.converged},        {"loglik", std::isfinite(g.loglik) ? nlohmann::ordered_json(g.loglik) : nlohmann::ordered_json()}};
}

[[nodiscard]] inline GarchParams garch_from_json(const nlohmann::ordered_json& j) {
  GarchParams g;
  g.variant = garch_variant_from_string(j.value("variant", std::string("garch")));
  g.mu = j.at("mu").get<double>();
  g.alpha1 = j.at("alpha1").get<double>();
  g.alpha2 = j.at("alpha2").get<double>();
  g.converged = j.value("converged", true);
  validate(g);
  return g;
}

} // namespace sievesmm
