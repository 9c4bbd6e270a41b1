#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sievesmm/errors.hpp"
#include "sievesmm/quadrature.hpp"

namespace sievesmm {

enum class TailSide { left, right };

struct MixtureFlags {
  bool mean_zero = true;
  bool unit_variance = true;
  bool tails = false;
  bool operator==(const MixtureFlags&) const = default;
};

// Bandwidth floor c * log(k+1)^(2/b) / k.
[[nodiscard]] inline double bandwidth_floor(std::size_t k, double b = 2.0, double c = 1.0) {
  detail::require(k >= 1, "bandwidth_floor: k must be >= 1");
  detail::require(b > 0.0, "bandwidth_floor: b must be positive");
  detail::require(c > 0.0, "bandwidth_floor: constant c must be positive");
  return c * std::pow(std::log(static_cast<double>(k) + 1.0), 2.0 / b) / static_cast<double>(k);
}

// Sieve configuration: number of Gaussian components, restrictions and box constants.
struct MixtureConfig {
  std::size_t k = 1;
  MixtureFlags flags{};
  double floor_c = 1.0;        // bandwidth floor constant; 0 disables the floor
  double floor_b = 2.0;        // tail-smoothness exponent b
  double location_multiplier = 5.0;
  double xi_max = 20.0;

  [[nodiscard]] double floor() const { return floor_c > 0.0 ? bandwidth_floor(k, floor_b, floor_c) : 0.0; }
  [[nodiscard]] double location_bound() const {
    return location_multiplier * std::max(1.0, std::pow(std::log(static_cast<double>(k) + 1.0), 1.0 / floor_b));
  }
};

// Constrained mixture: k Gaussian components followed by the left and right tails.
struct MixtureParams {
  std::size_t k = 1;
  std::vector<double> weights;   // length k+2
  std::vector<double> locations; // length k+2
  std::vector<double> scales;    // length k+2
  double xi_left = 1.0;
  double xi_right = 1.0;
  MixtureFlags flags{};

  [[nodiscard]] std::size_t size() const { return k + 2; }
  [[nodiscard]] bool has_tails() const { return weights[k] > 0.0 || weights[k + 1] > 0.0; }
};

// Gaussian-only mixture with zero tail weights.
[[nodiscard]] inline MixtureParams make_gaussian_mixture(std::vector<double> w, std::vector<double> mu,
                                                         std::vector<double> sigma, MixtureFlags flags = {}) {
  detail::require(!w.empty() && w.size() == mu.size() && w.size() == sigma.size(),
                  "make_gaussian_mixture: weights, locations and scales must have equal nonzero length");
  MixtureParams p;
  p.k = w.size();
  p.weights = std::move(w);
  p.locations = std::move(mu);
  p.scales = std::move(sigma);
  p.weights.insert(p.weights.end(), {0.0, 0.0});
  p.locations.insert(p.locations.end(), {0.0, 0.0});
  p.scales.insert(p.scales.end(), {1.0, 1.0});
  p.flags = flags;
  p.flags.tails = false;
  return p;
}

[[nodiscard]] inline MixtureParams standard_normal_mixture() { return make_gaussian_mixture({1.0}, {0.0}, {1.0}); }

// Structural checks; with floor/mu_bar/xi_max given also the sieve box constraints.
inline void validate(const MixtureParams& p, double floor = 0.0,
                     double mu_bar = std::numeric_limits<double>::infinity(), double xi_max = 20.0) {
  detail::require(p.k >= 1, "mixture: k must be >= 1");
  const std::size_t n = p.k + 2;
  detail::require(p.weights.size() == n && p.locations.size() == n && p.scales.size() == n,
                  "mixture: weights, locations and scales must have length k+2");
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    detail::require(std::isfinite(p.weights[j]) && std::isfinite(p.locations[j]) && std::isfinite(p.scales[j]),
                    "mixture: non-finite parameter");
    detail::require(p.weights[j] >= 0.0, "mixture: negative weight");
    total += p.weights[j];
  }
  detail::require(std::abs(total - 1.0) <= 1e-12, "mixture: weights must sum to one");
  for (std::size_t j = 0; j < n; ++j) {
    if (p.weights[j] == 0.0) continue;
    if (j < p.k) {
      if (p.scales[j] < floor * (1.0 - 1e-12))
        throw degenerate_error("mixture: scale of component " + std::to_string(j + 1) + " below bandwidth floor");
      if (std::abs(p.locations[j]) > mu_bar)
        throw degenerate_error("mixture: location of component " + std::to_string(j + 1) + " outside bound");
    }
    detail::require(p.scales[j] >= 0.0, "mixture: negative scale");
  }
  if (p.weights[p.k] > 0.0)
    detail::require(p.xi_left >= 1.0 && p.xi_left <= xi_max, "mixture: xi_left outside [1, xi_max]");
  if (p.weights[p.k + 1] > 0.0)
    detail::require(p.xi_right >= 1.0 && p.xi_right <= xi_max, "mixture: xi_right outside [1, xi_max]");
}

// Standardized tail densities: f_L on e <= 0, f_R on e >= 0.
[[nodiscard]] inline double tail_density(double e, double xi, TailSide side) {
  const double x = side == TailSide::left ? -e : e;
  if (x < 0.0) return 0.0;
  const double a = 2.0 + xi;
  const double xa = std::pow(x, a);
  const double d = 1.0 + xa;
  return a * std::pow(x, 1.0 + xi) / (d * d);
}

[[nodiscard]] inline double tail_cdf(double e, double xi, TailSide side) {
  const double a = 2.0 + xi;
  if (side == TailSide::right) {
    if (e <= 0.0) return 0.0;
    const double xa = std::pow(e, a);
    return xa / (1.0 + xa);
  }
  if (e >= 0.0) return 1.0;
  return 1.0 / (1.0 + std::pow(-e, a));
}

// Quantile of the standardized tail distributions.
[[nodiscard]] inline double tail_quantile(double nu, double xi, TailSide side) {
  if (!(nu > 0.0 && nu < 1.0)) throw domain_error("tail_quantile: nu must lie in (0,1)");
  detail::require(xi >= 1.0, "tail_quantile: xi must be >= 1");
  const double a = 2.0 + xi;
  if (side == TailSide::left) return -std::pow(1.0 / nu - 1.0, 1.0 / a);
  return std::pow(1.0 / (1.0 - nu) - 1.0, 1.0 / a);
}

// E[Z^p] for the right tail law (p < 2 + xi), from the Beta-function identity
// integral_0^1 (v/(1-v))^(p/a) dv = (pi p/a) / sin(pi p/a). The left tail has E[Z^p] = (-1)^p times this.
[[nodiscard]] inline double tail_raw_moment(int p, double xi) {
  if (p == 0) return 1.0;
  const double r = static_cast<double>(p) / (2.0 + xi);
  if (r >= 1.0) throw numeric_error("tail moment of order " + std::to_string(p) + " is infinite");
  return std::numbers::pi * r / std::sin(std::numbers::pi * r);
}

// Same moment by adaptive quadrature of the density.
[[nodiscard]] inline double tail_raw_moment_quadrature(int p, double xi, double rel_tol = 1e-10) {
  const auto f = [&](double x) { return std::pow(x, p) * tail_density(x, xi, TailSide::right); };
  return integrate(f, 0.0, 1.0, rel_tol) + integrate(f, 1.0, std::numeric_limits<double>::infinity(), rel_tol);
}

namespace detail {

inline double log_normal_pdf(double z) { return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi); }

// First and second raw moments of component j.
inline std::pair<double, double> component_moments(const MixtureParams& p, std::size_t j, bool use_quadrature) {
  const double mu = p.locations[j], s = p.scales[j];
  if (j < p.k) return {mu, mu * mu + s * s};
  const double xi = j == p.k ? p.xi_left : p.xi_right;
  const double sign = j == p.k ? -1.0 : 1.0;
  const double m1 = sign * (use_quadrature ? tail_raw_moment_quadrature(1, xi) : tail_raw_moment(1, xi));
  const double m2 = use_quadrature ? tail_raw_moment_quadrature(2, xi) : tail_raw_moment(2, xi);
  return {mu + s * m1, mu * mu + 2.0 * mu * s * m1 + s * s * m2};
}

inline std::pair<double, double> moments_impl(const MixtureParams& p, bool use_quadrature) {
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p.weights[j] == 0.0) continue;
    if (j >= p.k) {
      const double xi = j == p.k ? p.xi_left : p.xi_right;
      if (xi < 1.0) throw numeric_error("mixture_moments: tail index below 1 gives infinite variance");
    }
    const auto [a, b] = component_moments(p, j, use_quadrature);
    m1 += p.weights[j] * a;
    m2 += p.weights[j] * b;
  }
  return {m1, m2 - m1 * m1};
}

} // namespace detail

// Mixture density at e.
[[nodiscard]] inline double density(const MixtureParams& p, double e) {
  double f = 0.0;
  for (std::size_t j = 0; j < p.k; ++j) {
    const double w = p.weights[j];
    if (w == 0.0) continue;
    const double z = (e - p.locations[j]) / p.scales[j];
    f += std::exp(std::log(w) - std::log(p.scales[j]) + detail::log_normal_pdf(z));
  }
  if (const double w = p.weights[p.k]; w > 0.0 && e <= p.locations[p.k])
    f += w / p.scales[p.k] * tail_density((e - p.locations[p.k]) / p.scales[p.k], p.xi_left, TailSide::left);
  if (const double w = p.weights[p.k + 1]; w > 0.0 && e >= p.locations[p.k + 1])
    f += w / p.scales[p.k + 1] *
         tail_density((e - p.locations[p.k + 1]) / p.scales[p.k + 1], p.xi_right, TailSide::right);
  return f;
}

// Mixture CDF at e in closed form.
[[nodiscard]] inline double cdf(const MixtureParams& p, double e) {
  double F = 0.0;
  for (std::size_t j = 0; j < p.k; ++j) {
    if (p.weights[j] == 0.0) continue;
    F += p.weights[j] * 0.5 * std::erfc(-(e - p.locations[j]) / (p.scales[j] * std::numbers::sqrt2));
  }
  if (p.weights[p.k] > 0.0)
    F += p.weights[p.k] * tail_cdf((e - p.locations[p.k]) / p.scales[p.k], p.xi_left, TailSide::left);
  if (p.weights[p.k + 1] > 0.0)
    F += p.weights[p.k + 1] *
         tail_cdf((e - p.locations[p.k + 1]) / p.scales[p.k + 1], p.xi_right, TailSide::right);
  return F;
}

// Index of the component selected by uniform nu through cumulative weights.
[[nodiscard]] inline std::size_t select_component(const MixtureParams& p, double nu) noexcept {
  double c = 0.0;
  std::size_t last = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p.weights[j] == 0.0) continue;
    c += p.weights[j];
    last = j;
    if (nu < c) return j;
  }
  return last;
}

// One mixture draw from base randomness: selector nu, k Gaussian draws z, tail uniforms.
[[nodiscard]] inline double sample(const MixtureParams& p, double nu, std::span<const double> z, double nu_left,
                                   double nu_right) {
  const std::size_t j = select_component(p, nu);
  if (j < p.k) return p.locations[j] + p.scales[j] * z[j];
  if (j == p.k) return p.locations[j] + p.scales[j] * tail_quantile(nu_left, p.xi_left, TailSide::left);
  return p.locations[j] + p.scales[j] * tail_quantile(nu_right, p.xi_right, TailSide::right);
}

// (mean, variance); tail components integrated numerically.
[[nodiscard]] inline std::pair<double, double> mixture_moments(const MixtureParams& p) {
  return detail::moments_impl(p, true);
}

// Unconstrained parameterization. Entry j of each vector refers to mixture component j
// (0-based, k Gaussian then left and right tail); entries fixed by the flags are ignored:
// w[0] (reference weight), mu[0] under mean-zero, sigma[0] under unit variance, all tail
// entries without tails.
struct RawMixtureParams {
  std::vector<double> w;     // k+2
  std::vector<double> mu;    // k+2
  std::vector<double> sigma; // k+2
  double xi_left = 0.0;
  double xi_right = 0.0;
};

// Raw vector that maps to k identical Gaussian components (the standard normal after normalization).
[[nodiscard]] inline RawMixtureParams neutral_raw(const MixtureConfig& cfg) {
  RawMixtureParams r;
  r.w.assign(cfg.k + 2, 0.0);
  r.mu.assign(cfg.k + 2, 0.0);
  r.sigma.assign(cfg.k + 2, 0.0);
  if (cfg.flags.tails) {
    r.w[cfg.k] = r.w[cfg.k + 1] = -3.0;
    r.mu[cfg.k] = r.mu[cfg.k + 1] = 0.0;
  }
  return r;
}

// Names of the free raw coordinates, in packing order.
[[nodiscard]] inline std::vector<std::string> raw_coordinate_names(const MixtureConfig& cfg) {
  std::vector<std::string> names;
  const std::size_t n = cfg.flags.tails ? cfg.k + 2 : cfg.k;
  const auto label = [&](std::size_t j) {
    if (j == cfg.k) return std::string("L");
    if (j == cfg.k + 1) return std::string("R");
    return std::to_string(j + 1);
  };
  for (std::size_t j = 1; j < n; ++j) names.push_back("omega_" + label(j));
  for (std::size_t j = cfg.flags.mean_zero ? 1 : 0; j < n; ++j) names.push_back("mu_" + label(j));
  for (std::size_t j = cfg.flags.unit_variance ? 1 : 0; j < n; ++j) names.push_back("sigma_" + label(j));
  if (cfg.flags.tails) {
    names.push_back("xi_L");
    names.push_back("xi_R");
  }
  return names;
}

[[nodiscard]] inline std::size_t raw_free_count(const MixtureConfig& cfg) { return raw_coordinate_names(cfg).size(); }

// Indices (within the packed mixture block) of the weight coordinates.
[[nodiscard]] inline std::vector<std::size_t> raw_weight_coordinates(const MixtureConfig& cfg) {
  const std::size_t n = cfg.flags.tails ? cfg.k + 2 : cfg.k;
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j + 1 < n; ++j) idx.push_back(j);
  return idx;
}

[[nodiscard]] inline std::vector<double> pack_raw(const RawMixtureParams& r, const MixtureConfig& cfg) {
  std::vector<double> x;
  const std::size_t n = cfg.flags.tails ? cfg.k + 2 : cfg.k;
  for (std::size_t j = 1; j < n; ++j) x.push_back(r.w[j]);
  for (std::size_t j = cfg.flags.mean_zero ? 1 : 0; j < n; ++j) x.push_back(r.mu[j]);
  for (std::size_t j = cfg.flags.unit_variance ? 1 : 0; j < n; ++j) x.push_back(r.sigma[j]);
  if (cfg.flags.tails) {
    x.push_back(r.xi_left);
    x.push_back(r.xi_right);
  }
  return x;
}

[[nodiscard]] inline RawMixtureParams unpack_raw(std::span<const double> x, const MixtureConfig& cfg) {
  detail::require(x.size() == raw_free_count(cfg), "unpack_raw: wrong number of mixture coordinates");
  RawMixtureParams r = neutral_raw(cfg);
  const std::size_t n = cfg.flags.tails ? cfg.k + 2 : cfg.k;
  std::size_t i = 0;
  for (std::size_t j = 1; j < n; ++j) r.w[j] = x[i++];
  for (std::size_t j = cfg.flags.mean_zero ? 1 : 0; j < n; ++j) r.mu[j] = x[i++];
  for (std::size_t j = cfg.flags.unit_variance ? 1 : 0; j < n; ++j) r.sigma[j] = x[i++];
  if (cfg.flags.tails) {
    r.xi_left = x[i++];
    r.xi_right = x[i++];
  }
  return r;
}

namespace detail {

// Identity on [-bound/2, bound/2], then a C1 tanh saturation towards +-bound.
inline double soft_clamp(double x, double bound) {
  if (!std::isfinite(bound)) return x;
  const double a = 0.5 * bound;
  const double ax = std::abs(x);
  if (ax <= a) return x;
  const double y = a + (bound - a) * std::tanh((ax - a) / (bound - a));
  return x < 0.0 ? -y : y;
}

inline double soft_clamp_inverse(double y, double bound) {
  if (!std::isfinite(bound)) return y;
  const double a = 0.5 * bound;
  const double ay = std::abs(y);
  if (ay <= a) return y;
  if (ay >= bound) throw validation_error("soft_clamp_inverse: value outside bound");
  const double x = a + (bound - a) * std::atanh((ay - a) / (bound - a));
  return y < 0.0 ? -x : x;
}

} // namespace detail

// Raw -> constrained map: softmax weights, floored scales, clamped locations, then the
// mean-zero and unit-variance restrictions. Throws degenerate_error when the result
// cannot satisfy the invariants (the estimator treats that as an infinite objective).
[[nodiscard]] inline MixtureParams transform_params(const RawMixtureParams& raw, const MixtureConfig& cfg) {
  const std::size_t k = cfg.k;
  detail::require(k >= 1, "transform_params: k must be >= 1");
  const std::size_t n = k + 2;
  detail::require(raw.w.size() == n && raw.mu.size() == n && raw.sigma.size() == n,
                  "transform_params: raw vectors must have length k+2");
  const std::size_t active = cfg.flags.tails ? n : k;
  for (std::size_t j = 0; j < active; ++j)
    detail::require(std::isfinite(raw.w[j]) && std::isfinite(raw.mu[j]) && std::isfinite(raw.sigma[j]),
                    "transform_params: non-finite raw parameter");
  detail::require(std::isfinite(raw.xi_left) && std::isfinite(raw.xi_right),
                  "transform_params: non-finite raw tail index");

  const double floor = cfg.floor();
  const double mu_bar = cfg.location_bound();
  MixtureParams p;
  p.k = k;
  p.flags = cfg.flags;
  p.weights.assign(n, 0.0);
  p.locations.assign(n, 0.0);
  p.scales.assign(n, 1.0);

  // Softmax with component 1 as the reference (raw weight 0).
  double mx = 0.0;
  for (std::size_t j = 1; j < active; ++j) mx = std::max(mx, raw.w[j]);
  double denom = 0.0;
  for (std::size_t j = 0; j < active; ++j) {
    p.weights[j] = std::exp((j == 0 ? 0.0 : raw.w[j]) - mx);
    denom += p.weights[j];
  }
  for (std::size_t j = 0; j < active; ++j) p.weights[j] /= denom;

  for (std::size_t j = 0; j < active; ++j) {
    const double s = (j == 0 && cfg.flags.unit_variance) ? 0.0 : raw.sigma[j];
    p.scales[j] = (j < k ? floor : 0.0) + std::exp(s);
    p.locations[j] = detail::soft_clamp(raw.mu[j], mu_bar);
  }
  if (cfg.flags.tails) {
    const auto xi = [&](double t) { return 1.0 + (cfg.xi_max - 1.0) / (1.0 + std::exp(-t)); };
    p.xi_left = xi(raw.xi_left);
    p.xi_right = xi(raw.xi_right);
  }

  if (cfg.flags.mean_zero) {
    if (p.weights[0] < 1e-12) throw degenerate_error("transform_params: reference weight vanishes under mean-zero");
    p.locations[0] = 0.0;
    double m = 0.0;
    for (std::size_t j = 1; j < active; ++j) m += p.weights[j] * detail::component_moments(p, j, false).first;
    p.locations[0] = -m / p.weights[0];
  }
  if (cfg.flags.unit_variance) {
    // Variance equals the second moment about zero once the mean is pinned at zero.
    const double var = detail::moments_impl(p, false).second;
    if (!(var > 0.0) || !std::isfinite(var)) throw degenerate_error("transform_params: nonpositive variance");
    const double sd = std::sqrt(var);
    for (std::size_t j = 0; j < active; ++j) {
      p.locations[j] /= sd;
      p.scales[j] /= sd;
    }
  }
  // Renormalize weights to sum to one in floating point.
  double total = 0.0;
  for (double w : p.weights) total += w;
  for (double& w : p.weights) w /= total;
  validate(p, floor, mu_bar, cfg.xi_max);
  return p;
}

// Raw vector reproducing a Gaussian-only mixture before normalization, used for starting
// values. Locations and scales are taken as the pre-normalization values.
[[nodiscard]] inline RawMixtureParams raw_from_components(std::span<const double> w, std::span<const double> mu,
                                                          std::span<const double> sigma, const MixtureConfig& cfg) {
  detail::require(w.size() == cfg.k && mu.size() == cfg.k && sigma.size() == cfg.k,
                  "raw_from_components: expected k Gaussian components");
  RawMixtureParams r = neutral_raw(cfg);
  for (std::size_t j = 0; j < cfg.k; ++j) {
    r.w[j] = std::log(w[j] / w[0]);
    r.mu[j] = detail::soft_clamp_inverse(mu[j], cfg.location_bound());
    const double excess = sigma[j] - cfg.floor();
    detail::require(excess > 0.0, "raw_from_components: scale below bandwidth floor");
    r.sigma[j] = std::log(excess);
  }
  return r;
}

inline nlohmann::ordered_json to_json(const MixtureParams& p) {
  nlohmann::ordered_json j;
  j["k"] = p.k;
  j["weights"] = p.weights;
  j["locations"] = p.locations;
  j["scales"] = p.scales;
  j["xi_left"] = p.xi_left;
  j["xi_right"] = p.xi_right;
  j["flags"] = {{"mean_zero", p.flags.mean_zero},
                {"unit_variance", p.flags.unit_variance},
                {"tails", p.flags.tails}};
  return j;
}

[[nodiscard]] inline MixtureParams mixture_from_json(const nlohmann::ordered_json& j) {
  MixtureParams p;
  p.k = j.at("k").get<std::size_t>();
  p.weights = j.at("weights").get<std::vector<double>>();
  p.locations = j.at("locations").get<std::vector<double>>();
  p.scales = j.at("scales").get<std::vector<double>>();
  p.xi_left = j.value("xi_left", 1.0);
  p.xi_right = j.value("xi_right", 1.0);
  if (j.contains("flags")) {
    const auto& f = j.at("flags");
    p.flags.mean_zero = f.value("mean_zero", true);
    p.flags.unit_variance = f.value("unit_variance", true);
    p.flags.tails = f.value("tails", false);
  }
  // Gaussian-only shorthand: k entries instead of k+2.
  if (p.weights.size() == p.k) {
    p.weights.insert(p.weights.end(), {0.0, 0.0});
    p.locations.insert(p.locations.end(), {0.0, 0.0});
    p.scales.insert(p.scales.end(), {1.0, 1.0});
  }
  validate(p);
  return p;
}

} // namespace sievesmm
