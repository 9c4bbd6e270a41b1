#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sievesmm/errors.hpp"
#include "sievesmm/mixture.hpp"
#include "sievesmm/random.hpp"

namespace sievesmm {

enum class ModelKind { ar1, sv_lognormal, sv_linear, tobit_panel };

inline std::string to_string(ModelKind k) {
  switch (k) {
  case ModelKind::ar1: return "ar1";
  case ModelKind::sv_lognormal: return "sv_lognormal";
  case ModelKind::sv_linear: return "sv_linear";
  case ModelKind::tobit_panel: return "tobit_panel";
  }
  return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "ar1") return ModelKind::ar1;
  if (s == "sv_lognormal") return ModelKind::sv_lognormal;
  if (s == "sv_linear") return ModelKind::sv_linear;
  if (s == "tobit_panel") return ModelKind::tobit_panel;
  throw validation_error("unknown model kind '" + s + "'");
}

// One structural parameter: value (start or truth), open box (lower, upper), fixed flag.
struct ParamSpec {
  std::string name;
  double value = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool fixed = false;
};

struct PanelDims {
  std::size_t units = 0;
  std::size_t T = 0;
  std::size_t burn_in = 0;
};

struct ModelSpec {
  ModelKind kind = ModelKind::ar1;
  std::vector<ParamSpec> theta;
  std::size_t n = 0;       // time-series length (ignored for panels)
  std::size_t S = 1;       // simulated samples
  std::size_t lags = 1;    // L
  std::size_t burn_in = 0; // discarded leading simulated periods for time series
  PanelDims panel{};
  bool long_sample = false; // one sample of length n*S instead of S samples of length n
  double sigma2_floor = 1e-12;

  [[nodiscard]] std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < theta.size(); ++i)
      if (theta[i].name == name) return i;
    throw validation_error("model has no parameter named '" + name + "'");
  }
  [[nodiscard]] double value(const std::string& name) const { return theta[index_of(name)].value; }
  [[nodiscard]] std::vector<double> values() const {
    std::vector<double> v;
    for (const auto& p : theta) v.push_back(p.value);
    return v;
  }
  [[nodiscard]] bool is_panel() const { return kind == ModelKind::tobit_panel; }
};

// Default burn-in ceil(2 log n).
[[nodiscard]] inline std::size_t default_burn_in(std::size_t n) {
  return static_cast<std::size_t>(std::ceil(2.0 * std::log(static_cast<double>(std::max<std::size_t>(n, 2)))));
}

inline constexpr double rho_bar = 0.999;

// Parameter names, default values and bounds per model.
[[nodiscard]] inline std::vector<ParamSpec> default_parameters(ModelKind kind) {
  const double inf = std::numeric_limits<double>::infinity();
  switch (kind) {
  case ModelKind::ar1: return {{"mu_y", 0.0, -inf, inf}, {"rho_y", 0.5, -rho_bar, rho_bar}};
  case ModelKind::sv_lognormal:
    return {{"mu_y", 0.0, -inf, inf, true},
            {"rho_y", 0.0, -rho_bar, rho_bar, true},
            {"mu_sigma", -0.5, -20.0, 20.0},
            {"rho_sigma", 0.5, -rho_bar, rho_bar},
            {"kappa_sigma", 0.3, 1e-6, 5.0}};
  case ModelKind::sv_linear:
    return {{"mu_c", 0.0, -inf, inf},
            {"rho_c", 0.3, -rho_bar, rho_bar},
            {"mu_sigma", 0.5, 1e-8, 1e6},
            {"rho_sigma", 0.5, 0.0, rho_bar},
            {"kappa_sigma", 0.1, 0.0, 1e6}};
  case ModelKind::tobit_panel:
    return {{"theta_intercept", 0.0, -50.0, 50.0}, {"theta_slope", 0.5, -50.0, 50.0}, {"rho", 0.5, -rho_bar, rho_bar}};
  }
  return {};
}

// Structural checks; stationarity parameters must sit strictly inside (-1, 1).
inline void validate(const ModelSpec& m) {
  detail::require(m.S >= 1, "model: S must be >= 1");
  if (m.is_panel()) {
    detail::require(m.panel.units >= 1 && m.panel.T >= 2, "model: panel needs units >= 1 and T >= 2");
  } else {
    detail::require(m.n > m.lags, "model: n must exceed the lag count");
  }
  const auto def = default_parameters(m.kind);
  detail::require(m.theta.size() == def.size(), "model: wrong number of structural parameters");
  for (std::size_t i = 0; i < def.size(); ++i) {
    const auto& p = m.theta[i];
    detail::require(p.name == def[i].name, "model: parameter " + std::to_string(i) + " must be named " + def[i].name);
    detail::require(std::isfinite(p.value), "model: parameter " + p.name + " is not finite");
    detail::require(p.lower < p.upper, "model: empty bounds for " + p.name);
    const bool persistence = p.name.rfind("rho", 0) == 0;
    if (persistence) {
      detail::require(p.lower > -1.0 && p.upper < 1.0, "model: bounds of " + p.name + " must lie inside (-1, 1)");
      detail::require(std::abs(p.value) < 1.0, "model: " + p.name + " violates stationarity");
    }
    detail::require(p.value >= p.lower && p.value <= p.upper, "model: " + p.name + " outside its bounds");
  }
}

[[nodiscard]] inline ModelSpec make_model(ModelKind kind, std::size_t n, std::size_t S) {
  ModelSpec m;
  m.kind = kind;
  m.theta = default_parameters(kind);
  m.n = n;
  m.S = S;
  return m;
}

[[nodiscard]] inline ModelSpec make_panel_model(std::size_t units, std::size_t T, std::size_t S,
                                                std::size_t burn_in) {
  ModelSpec m;
  m.kind = ModelKind::tobit_panel;
  m.theta = default_parameters(m.kind);
  m.S = S;
  m.panel = {units, T, burn_in};
  m.n = units * T;
  return m;
}

// Pre-drawn base randomness, indexed [s * periods + t] (normals: times k plus j).
struct BaseDraws {
  std::size_t S = 0;
  std::size_t periods = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  bool chi2_vol = false;
  std::vector<double> nu;
  std::vector<double> z;
  std::vector<double> nu_left;
  std::vector<double> nu_right;
  std::vector<double> e2;

  [[nodiscard]] std::size_t at(std::size_t s, std::size_t t) const { return s * periods + t; }
};

namespace detail {
inline constexpr std::uint32_t channel_select = 0;
inline constexpr std::uint32_t channel_left = 0xFFF0u;
inline constexpr std::uint32_t channel_right = 0xFFF1u;
inline constexpr std::uint32_t channel_vol = 0xFFF2u;
inline constexpr std::uint32_t channel_normal0 = 1;
} // namespace detail

// Samples and periods per sample implied by the spec (long-sample mode folds S into time).
[[nodiscard]] inline std::pair<std::size_t, std::size_t> draw_layout(const ModelSpec& m) {
  if (m.is_panel()) return {m.S, m.panel.units * (m.panel.burn_in + m.panel.T)};
  if (m.long_sample) return {1, m.burn_in + m.n * m.S};
  return {m.S, m.burn_in + m.n};
}

// All base draws keyed by (seed, t, s, channel): the same seed always reproduces the
// same numbers and sample s never depends on how many samples are requested.
[[nodiscard]] inline BaseDraws draw_base(const ModelSpec& m, std::size_t k, std::uint64_t seed) {
  detail::require(k >= 1, "draw_base: k must be >= 1");
  const auto [S, periods] = draw_layout(m);
  BaseDraws d;
  d.S = S;
  d.periods = periods;
  d.k = k;
  d.seed = seed;
  d.chi2_vol = m.kind == ModelKind::sv_linear;
  const bool vol = m.kind == ModelKind::sv_lognormal || m.kind == ModelKind::sv_linear;
  const std::size_t total = S * periods;
  d.nu.resize(total);
  d.z.resize(total * k);
  d.nu_left.resize(total);
  d.nu_right.resize(total);
  if (vol) d.e2.resize(total);
  const KeyedRng rng(seed);
  for (std::size_t s = 0; s < S; ++s) {
    const auto ss = static_cast<std::uint32_t>(s);
    for (std::size_t t = 0; t < periods; ++t) {
      const auto tt = static_cast<std::uint32_t>(t);
      const std::size_t i = d.at(s, t);
      d.nu[i] = rng.uniform(tt, ss, detail::channel_select);
      for (std::size_t j = 0; j < k; ++j)
        d.z[i * k + j] = rng.normal(tt, ss, detail::channel_normal0 + static_cast<std::uint32_t>(j));
      d.nu_left[i] = rng.uniform(tt, ss, detail::channel_left);
      d.nu_right[i] = rng.uniform(tt, ss, detail::channel_right);
      if (vol) {
        const double g = rng.normal(tt, ss, detail::channel_vol);
        d.e2[i] = d.chi2_vol ? g * g : g;
      }
    }
  }
  return d;
}

// Mixture shocks for sample s over all periods.
[[nodiscard]] inline std::vector<double> mixture_shocks(const MixtureParams& p, const BaseDraws& d, std::size_t s) {
  detail::require(d.k == p.k, "mixture_shocks: draws were generated for a different k");
  std::vector<double> e(d.periods);
  for (std::size_t t = 0; t < d.periods; ++t) {
    const std::size_t i = d.at(s, t);
    e[t] = sample(p, d.nu[i], std::span<const double>(d.z.data() + i * d.k, d.k), d.nu_left[i], d.nu_right[i]);
  }
  return e;
}

[[nodiscard]] inline std::vector<double> simulate_ar1(double mu, double rho, std::span<const double> e,
                                                      double y0 = 0.0) {
  detail::require(std::abs(rho) < 1.0, "simulate_ar1: |rho| must be < 1");
  std::vector<double> y(e.size());
  double prev = y0;
  for (std::size_t t = 0; t < e.size(); ++t) {
    prev = mu + rho * prev + e[t];
    y[t] = prev;
  }
  return y;
}

struct SvPath {
  std::vector<double> y;
  std::vector<double> vol; // sigma_t (log-normal model) or sigma_t^2 (linear model)
  std::size_t flagged = 0; // clamped exponents or floored variances
};

struct SvLognormalParams {
  double mu_y = 0.0, rho_y = 0.0, mu_sigma = 0.0, rho_sigma = 0.0, kappa_sigma = 0.0;
};

// y_t = mu_y + rho_y y_{t-1} + sigma_t e1_t,  log sigma_t = mu_s + rho_s log sigma_{t-1} + kappa e2_t,
// started at log sigma_0 = mu_s/(1-rho_s) and y_0 = 0 unless given.
[[nodiscard]] inline SvPath simulate_sv_lognormal(const SvLognormalParams& q, std::span<const double> e1,
                                                  std::span<const double> e2, double y0 = 0.0,
                                                  double log_sigma0 = std::numeric_limits<double>::quiet_NaN()) {
  detail::require(std::abs(q.rho_y) < 1.0 && std::abs(q.rho_sigma) < 1.0,
                  "simulate_sv_lognormal: persistence parameters must be inside (-1, 1)");
  detail::require(e1.size() == e2.size(), "simulate_sv_lognormal: shock lengths differ");
  constexpr double cap = 700.0;
  SvPath out;
  out.y.resize(e1.size());
  out.vol.resize(e1.size());
  double h = std::isnan(log_sigma0) ? q.mu_sigma / (1.0 - q.rho_sigma) : log_sigma0;
  double y = y0;
  for (std::size_t t = 0; t < e1.size(); ++t) {
    h = q.mu_sigma + q.rho_sigma * h + q.kappa_sigma * e2[t];
    if (h > cap || h < -cap) {
      h = std::clamp(h, -cap, cap);
      ++out.flagged;
    }
    const double sig = std::exp(h);
    y = q.mu_y + q.rho_y * y + sig * e1[t];
    out.y[t] = y;
    out.vol[t] = sig;
  }
  return out;
}

struct SvLinearParams {
  double mu_c = 0.0, rho_c = 0.0, mu_sigma = 1.0, rho_sigma = 0.0, kappa_sigma = 0.0;
};

// sigma_t^2 = mu_s + rho_s sigma_{t-1}^2 + kappa (e2_t - 1) with e2 ~ chi2(1), floored at eps;
// y_t = mu_c + rho_c y_{t-1} + sigma_t e1_t.
[[nodiscard]] inline SvPath simulate_sv_linear(const SvLinearParams& q, std::span<const double> e1,
                                               std::span<const double> e2, double eps = 1e-12, double y0 = 0.0,
                                               double sigma2_0 = std::numeric_limits<double>::quiet_NaN()) {
  detail::require(q.mu_sigma > 0.0, "simulate_sv_linear: mu_sigma must be positive");
  detail::require(q.rho_sigma >= 0.0 && q.rho_sigma < 1.0, "simulate_sv_linear: rho_sigma must lie in [0, 1)");
  detail::require(q.kappa_sigma >= 0.0, "simulate_sv_linear: kappa_sigma must be nonnegative");
  detail::require(std::abs(q.rho_c) < 1.0, "simulate_sv_linear: |rho_c| must be < 1");
  detail::require(e1.size() == e2.size(), "simulate_sv_linear: shock lengths differ");
  detail::require(eps > 0.0, "simulate_sv_linear: floor must be positive");
  SvPath out;
  out.y.resize(e1.size());
  out.vol.resize(e1.size());
  double v = std::isnan(sigma2_0) ? q.mu_sigma / (1.0 - q.rho_sigma) : sigma2_0;
  double y = y0;
  for (std::size_t t = 0; t < e1.size(); ++t) {
    v = q.mu_sigma + q.rho_sigma * v + q.kappa_sigma * (e2[t] - 1.0);
    if (v < eps) {
      v = eps;
      ++out.flagged;
    }
    y = q.mu_c + q.rho_c * y + std::sqrt(v) * e1[t];
    out.y[t] = y;
    out.vol[t] = v;
  }
  return out;
}

struct TobitParams {
  double intercept = 0.0, slope = 0.0, rho = 0.0;
};

// Panel outcomes y_{j,t} = max(0, a + b x_{j,t} + u_{j,t}), u_t = rho u_{t-1} + e_t with
// u_{-m} = 0; x is units x T row-major, e is units x (m+T) row-major. Returns units x T.
[[nodiscard]] inline std::vector<double> simulate_tobit_panel(const TobitParams& q, std::span<const double> x,
                                                              std::span<const double> e, std::size_t units,
                                                              std::size_t T, std::size_t m) {
  detail::require(std::abs(q.rho) < 1.0, "simulate_tobit_panel: |rho| must be < 1");
  detail::require(x.size() == units * T, "simulate_tobit_panel: regressors must be units x T");
  detail::require(e.size() == units * (m + T), "simulate_tobit_panel: shocks must be units x (m + T)");
  std::vector<double> y(units * T);
  for (std::size_t j = 0; j < units; ++j) {
    double u = 0.0;
    const double* ej = e.data() + j * (m + T);
    for (std::size_t t = 0; t < m; ++t) u = q.rho * u + ej[t];
    for (std::size_t t = 0; t < T; ++t) {
      u = q.rho * u + ej[m + t];
      const double latent = q.intercept + q.slope * x[j * T + t] + u;
      y[j * T + t] = latent >= 0.0 ? latent : 0.0;
    }
  }
  return y;
}

// Simulated data for one sample: outcome series plus the volatility path where the model has one.
struct SimulatedSample {
  std::vector<double> y;
  std::vector<double> vol;
  std::size_t flagged = 0;
};

struct SimulatedSet {
  std::vector<SimulatedSample> samples;
  std::size_t flagged = 0;
};

[[nodiscard]] inline SvLognormalParams sv_lognormal_params(std::span<const double> th) {
  return {th[0], th[1], th[2], th[3], th[4]};
}
[[nodiscard]] inline SvLinearParams sv_linear_params(std::span<const double> th) {
  return {th[0], th[1], th[2], th[3], th[4]};
}
[[nodiscard]] inline TobitParams tobit_params(std::span<const double> th) { return {th[0], th[1], th[2]}; }

// Maps base draws through the mixture sampler and the model recursion for every sample.
// theta holds all structural values in ModelSpec order; x is the panel regressor matrix.
[[nodiscard]] inline SimulatedSet simulate_for_estimation(const ModelSpec& m, std::span<const double> theta,
                                                          const MixtureParams& p, const BaseDraws& d,
                                                          std::span<const double> x = {}) {
  detail::require(theta.size() == m.theta.size(), "simulate_for_estimation: wrong number of parameters");
  SimulatedSet out;
  out.samples.resize(d.S);
  for (std::size_t s = 0; s < d.S; ++s) {
    auto e = mixture_shocks(p, d, s);
    auto& o = out.samples[s];
    switch (m.kind) {
    case ModelKind::ar1: {
      auto y = simulate_ar1(theta[0], theta[1], e);
      o.y.assign(y.begin() + static_cast<std::ptrdiff_t>(m.burn_in), y.end());
      break;
    }
    case ModelKind::sv_lognormal:
    case ModelKind::sv_linear: {
      const std::span<const double> e2(d.e2.data() + d.at(s, 0), d.periods);
      auto path = m.kind == ModelKind::sv_lognormal
                      ? simulate_sv_lognormal(sv_lognormal_params(theta), e, e2)
                      : simulate_sv_linear(sv_linear_params(theta), e, e2, m.sigma2_floor);
      o.y.assign(path.y.begin() + static_cast<std::ptrdiff_t>(m.burn_in), path.y.end());
      o.vol.assign(path.vol.begin() + static_cast<std::ptrdiff_t>(m.burn_in), path.vol.end());
      o.flagged = path.flagged;
      break;
    }
    case ModelKind::tobit_panel:
      o.y = simulate_tobit_panel(tobit_params(theta), x, e, m.panel.units, m.panel.T, m.panel.burn_in);
      break;
    }
    out.flagged += o.flagged;
  }
  return out;
}

// CSV export with columns t, s, y and the model's latent column (sigma, sigma2 or unit).
inline void write_simulated_csv(const std::string& path, const ModelSpec& m, const SimulatedSet& set) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.precision(17);
  if (m.is_panel()) {
    f << "t,s,y,unit\n";
    for (std::size_t s = 0; s < set.samples.size(); ++s)
      for (std::size_t j = 0; j < m.panel.units; ++j)
        for (std::size_t t = 0; t < m.panel.T; ++t)
          f << t + 1 << ',' << s << ',' << set.samples[s].y[j * m.panel.T + t] << ',' << j << '\n';
    return;
  }
  const bool vol = m.kind == ModelKind::sv_lognormal || m.kind == ModelKind::sv_linear;
  f << "t,s,y";
  if (vol) f << (m.kind == ModelKind::sv_lognormal ? ",sigma" : ",sigma2");
  f << '\n';
  for (std::size_t s = 0; s < set.samples.size(); ++s)
    for (std::size_t t = 0; t < set.samples[s].y.size(); ++t) {
      f << t + 1 << ',' << s << ',' << set.samples[s].y[t];
      if (vol) f << ',' << set.samples[s].vol[t];
      f << '\n';
    }
}

} // namespace sievesmm
