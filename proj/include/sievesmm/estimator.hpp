#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sievesmm/cf.hpp"
#include "sievesmm/dgp.hpp"
#include "sievesmm/errors.hpp"
#include "sievesmm/garch.hpp"
#include "sievesmm/mixture.hpp"
#include "sievesmm/optimize.hpp"

namespace sievesmm {

struct GridConfig {
  std::size_t m = 1000;
  QmcGenerator generator = QmcGenerator::sobol;
  std::uint64_t seed = 0;
  GridScaleMode scale_mode = GridScaleMode::inverse;
};

// Auxiliary GARCH(1,1) filter appended to the CF vector as (sigma_t, g(sigma_{t-1}), ...),
// g = log when log_lag is set.
struct AuxConfig {
  bool enabled = false;
  GarchVariant variant = GarchVariant::garch;
  bool log_lag = true;
};

struct OptimizerConfig {
  std::string method = "nelder_mead"; // nelder_mead | direct_then_nm
  std::size_t max_evals = 4000;
  double tol = 1e-10;
  std::size_t restarts = 2;
  std::size_t screen_budget = 64;
  double initial_step = 0.5;
};

struct EstimationConfig {
  ModelSpec model;
  MixtureConfig mixture;
  GridConfig grid;
  AuxConfig aux;
  OptimizerConfig optimizer;
  std::uint64_t sim_seed = 1;
};

// Observed data: a time series in y, or a units x T panel (row-major) in y and x.
struct Dataset {
  std::vector<double> y;
  std::vector<double> x;
  std::size_t units = 0;
  std::size_t T = 0;
};

// Free coordinates: the non-fixed structural parameters (bounded through logistic or
// exponential maps) followed by the packed mixture coordinates.
struct ParameterLayout {
  std::vector<std::size_t> free_theta;
  std::size_t mixture_offset = 0;
  std::size_t size = 0;
  std::vector<std::string> names;
};

namespace detail {

inline double to_bounded(double x, double lo, double hi) {
  const bool fl = std::isfinite(lo), fh = std::isfinite(hi);
  if (fl && fh) return lo + (hi - lo) / (1.0 + std::exp(-x));
  if (fl) return lo + std::exp(x);
  if (fh) return hi - std::exp(-x);
  return x;
}

inline double from_bounded(double v, double lo, double hi) {
  const bool fl = std::isfinite(lo), fh = std::isfinite(hi);
  if (fl && fh) {
    const double u = (v - lo) / (hi - lo);
    detail::require(u > 0.0 && u < 1.0, "parameter value must lie strictly inside its bounds");
    return std::log(u / (1.0 - u));
  }
  if (fl) return std::log(v - lo);
  if (fh) return -std::log(hi - v);
  return v;
}

// Derivative of to_bounded with respect to x.
inline double bounded_slope(double x, double lo, double hi) {
  const bool fl = std::isfinite(lo), fh = std::isfinite(hi);
  if (fl && fh) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return (hi - lo) * s * (1.0 - s);
  }
  if (fl) return std::exp(x);
  if (fh) return std::exp(-x);
  return 1.0;
}

} // namespace detail

[[nodiscard]] inline ParameterLayout make_layout(const ModelSpec& m, const MixtureConfig& mc) {
  ParameterLayout L;
  for (std::size_t i = 0; i < m.theta.size(); ++i)
    if (!m.theta[i].fixed) {
      L.free_theta.push_back(i);
      L.names.push_back(m.theta[i].name);
    }
  L.mixture_offset = L.free_theta.size();
  for (auto& n : raw_coordinate_names(mc)) L.names.push_back(n);
  L.size = L.names.size();
  return L;
}

// Full structural vector (model order) from the free coordinates.
[[nodiscard]] inline std::vector<double> theta_from_raw(std::span<const double> raw, const ModelSpec& m,
                                                        const ParameterLayout& L) {
  auto th = m.values();
  for (std::size_t i = 0; i < L.free_theta.size(); ++i) {
    const auto& p = m.theta[L.free_theta[i]];
    th[L.free_theta[i]] = detail::to_bounded(raw[i], p.lower, p.upper);
  }
  return th;
}

[[nodiscard]] inline std::vector<double> raw_from_theta(std::span<const double> theta, const ModelSpec& m,
                                                        const ParameterLayout& L) {
  std::vector<double> r;
  for (std::size_t i : L.free_theta) r.push_back(detail::from_bounded(theta[i], m.theta[i].lower, m.theta[i].upper));
  return r;
}

// Mixture start: equal weights, unit raw scales and small alternating location offsets,
// so the components are distinguishable from the first simplex on.
[[nodiscard]] inline RawMixtureParams default_mixture_start(const MixtureConfig& mc) {
  auto r = neutral_raw(mc);
  for (std::size_t j = 1; j < mc.k; ++j) {
    const double mag = 0.5 * static_cast<double>((j + 1) / 2);
    r.mu[j] = (j % 2 == 1) ? -mag : mag;
  }
  return r;
}

// Embedded CF layout for a configuration.
[[nodiscard]] inline std::vector<EmbedColumn> observation_columns(const EstimationConfig& cfg) {
  const std::size_t L = cfg.model.lags;
  if (cfg.model.is_panel()) return default_columns(2, L);
  std::vector<EmbedColumn> cols = default_columns(1, L);
  if (cfg.aux.enabled) {
    cols.push_back({1, 0, ColumnTransform::identity});
    for (std::size_t l = 1; l <= L; ++l)
      cols.push_back({1, l, cfg.aux.log_lag ? ColumnTransform::log : ColumnTransform::identity});
  }
  return cols;
}

namespace detail {

// Rows contributed by one time series of length n or one panel (units x T).
inline std::size_t group_rows(const EstimationConfig& cfg, std::size_t length) {
  const std::size_t L = cfg.model.lags;
  if (cfg.model.is_panel()) return cfg.model.panel.units * (cfg.model.panel.T - L);
  return length - L;
}

// Embeds one time series (with its auxiliary filter) or one panel into `out` at `offset`.
inline std::size_t embed_group(const EstimationConfig& cfg, const std::optional<GarchParams>& aux,
                               std::span<const EmbedColumn> cols, std::span<const double> y,
                               std::span<const double> x, EmbeddedSeries& out, std::size_t offset) {
  if (cfg.model.is_panel()) {
    const std::size_t units = cfg.model.panel.units, T = cfg.model.panel.T;
    std::size_t rows = 0;
    for (std::size_t j = 0; j < units; ++j) {
      const std::span<const double> series[2] = {y.subspan(j * T, T), x.subspan(j * T, T)};
      rows += embed_into(out, offset + rows, series, cols);
    }
    return rows;
  }
  if (cfg.aux.enabled) {
    const auto sig = filter_garch11(y, *aux);
    const std::span<const double> series[2] = {y, sig};
    return embed_into(out, offset, series, cols);
  }
  const std::span<const double> series[1] = {y};
  return embed_into(out, offset, series, cols);
}

} // namespace detail

// Frozen state of one estimation problem: observed CF, grid, base draws, auxiliary filter.
struct ObjectiveContext {
  EstimationConfig config;
  Dataset data;
  ParameterLayout layout;
  std::optional<GarchParams> aux;
  std::vector<EmbedColumn> columns;
  EmbeddedSeries data_embedding;
  std::size_t rows_per_group = 1; // rows that must stay together under resampling (panel units)
  CFGrid grid;
  cvector data_cf;
  BaseDraws draws;
};

[[nodiscard]] inline EmbeddedSeries embed_dataset(const EstimationConfig& cfg, const std::optional<GarchParams>& aux,
                                                  std::span<const EmbedColumn> cols, const Dataset& data) {
  EmbeddedSeries e;
  e.dim = cols.size();
  e.lags = max_lag(cols);
  e.rows = detail::group_rows(cfg, data.y.size());
  e.data.assign(e.rows * e.dim, 0.0);
  detail::embed_group(cfg, aux, cols, data.y, data.x, e, 0);
  return e;
}

inline void validate_dataset(const EstimationConfig& cfg, const Dataset& data) {
  for (double v : data.y) detail::require(std::isfinite(v), "data: non-finite observation");
  if (cfg.model.is_panel()) {
    const auto& P = cfg.model.panel;
    detail::require(data.units == P.units && data.T == P.T, "data: panel dimensions do not match the model");
    detail::require(data.y.size() == P.units * P.T && data.x.size() == P.units * P.T,
                    "data: panel outcome and regressor matrices must be units x T");
    detail::require(P.T > cfg.model.lags, "data: T must exceed the lag count");
  } else {
    detail::require(data.y.size() > cfg.model.lags + 10, "data: series too short for the lag count");
    detail::require(data.y.size() == cfg.model.n, "data: series length differs from model n");
  }
}

// Builds the frozen context: fits and freezes the auxiliary model, scales the grid to the
// embedded data, computes the data CF once and draws the simulation randomness once.
[[nodiscard]] inline ObjectiveContext make_context(const EstimationConfig& cfg, Dataset data) {
  validate(cfg.model);
  validate_dataset(cfg, data);
  ObjectiveContext ctx;
  ctx.config = cfg;
  ctx.layout = make_layout(cfg.model, cfg.mixture);
  if (cfg.aux.enabled) {
    detail::require(!cfg.model.is_panel(), "auxiliary GARCH filter is only available for time series");
    ctx.aux = fit_garch11(data.y, cfg.aux.variant);
  }
  ctx.columns = observation_columns(cfg);
  ctx.data_embedding = embed_dataset(cfg, ctx.aux, ctx.columns, data);
  ctx.rows_per_group = cfg.model.is_panel() ? cfg.model.panel.T - cfg.model.lags : 1;
  ctx.grid = build_cf_grid(cfg.grid.m, ctx.columns.size(), cfg.grid.generator, cfg.grid.seed,
                           grid_scale_for(ctx.data_embedding, cfg.grid.scale_mode));
  ctx.data_cf = empirical_cf(ctx.data_embedding, ctx.grid);
  ctx.draws = draw_base(cfg.model, cfg.mixture.k, cfg.sim_seed);
  ctx.data = std::move(data);
  return ctx;
}

struct DecodedParams {
  std::vector<double> theta;
  MixtureParams mixture;
};

[[nodiscard]] inline DecodedParams decode(std::span<const double> raw, const ObjectiveContext& ctx) {
  detail::require(raw.size() == ctx.layout.size, "decode: wrong parameter vector length");
  DecodedParams d;
  d.theta = theta_from_raw(raw, ctx.config.model, ctx.layout);
  d.mixture = transform_params(unpack_raw(raw.subspan(ctx.layout.mixture_offset), ctx.config.mixture),
                               ctx.config.mixture);
  return d;
}

// Embedding of all simulated samples stacked; its CF equals the average of the per-sample CFs.
[[nodiscard]] inline EmbeddedSeries simulated_embedding(const DecodedParams& d, const ObjectiveContext& ctx,
                                                        const BaseDraws& draws, std::size_t* flagged = nullptr) {
  const auto& cfg = ctx.config;
  const auto set = simulate_for_estimation(cfg.model, d.theta, d.mixture, draws, ctx.data.x);
  if (flagged) *flagged = set.flagged;
  EmbeddedSeries e;
  e.dim = ctx.columns.size();
  e.lags = max_lag(ctx.columns);
  for (const auto& s : set.samples) e.rows += detail::group_rows(cfg, s.y.size());
  e.data.assign(e.rows * e.dim, 0.0);
  std::size_t off = 0;
  for (const auto& s : set.samples)
    off += detail::embed_group(cfg, ctx.aux, ctx.columns, s.y, ctx.data.x, e, off);
  return e;
}

// psi^S at raw parameters with the given draws. Throws if the parameters are invalid.
[[nodiscard]] inline cvector simulated_cf(std::span<const double> raw, const ObjectiveContext& ctx,
                                          const BaseDraws& draws) {
  const auto d = decode(raw, ctx);
  return empirical_cf(simulated_embedding(d, ctx, draws), ctx.grid);
}

[[nodiscard]] inline cvector simulated_cf(std::span<const double> raw, const ObjectiveContext& ctx) {
  return simulated_cf(raw, ctx, ctx.draws);
}

// Q(raw) = sum_l w_l |psi_n(tau_l) - psi^S(tau_l)|^2; invalid parameters give +inf.
[[nodiscard]] inline double objective(std::span<const double> raw, const ObjectiveContext& ctx) {
  try {
    const auto sim = simulated_cf(raw, ctx);
    const double q = cf_distance(ctx.data_cf, sim, ctx.grid.weights);
    return std::isfinite(q) ? q : std::numeric_limits<double>::infinity();
  } catch (const degenerate_error&) {
    return std::numeric_limits<double>::infinity();
  } catch (const validation_error&) {
    return std::numeric_limits<double>::infinity();
  } catch (const domain_error&) {
    return std::numeric_limits<double>::infinity();
  } catch (const numeric_error&) {
    return std::numeric_limits<double>::infinity();
  }
}

struct EstimationResult {
  std::vector<std::string> theta_names;
  std::vector<double> theta;
  MixtureParams mixture;
  std::vector<std::string> raw_names;
  std::vector<double> raw;
  double objective = std::numeric_limits<double>::infinity();
  std::size_t evals = 0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;
  double eta = std::numeric_limits<double>::infinity(); // final simplex spread
  std::optional<GarchParams> aux;
  std::uint64_t sim_seed = 0;
  std::uint64_t grid_seed = 0;
  nlohmann::ordered_json grid;
};

// Starting raw vector from the model's parameter values and the default mixture start.
[[nodiscard]] inline std::vector<double> start_vector(const ObjectiveContext& ctx) {
  auto x = raw_from_theta(ctx.config.model.values(), ctx.config.model, ctx.layout);
  const auto mix = pack_raw(default_mixture_start(ctx.config.mixture), ctx.config.mixture);
  x.insert(x.end(), mix.begin(), mix.end());
  return x;
}

namespace detail {

// Screening box for the free structural parameters.
inline void screening_box(const ObjectiveContext& ctx, std::vector<double>& lo, std::vector<double>& hi) {
  for (std::size_t i : ctx.layout.free_theta) {
    const auto& p = ctx.config.model.theta[i];
    const double width = std::max(1.0, std::abs(p.value));
    double a = std::isfinite(p.lower) ? p.lower : p.value - 2.0 * width;
    double b = std::isfinite(p.upper) ? p.upper : p.value + 2.0 * width;
    // Stay inside open bounds.
    const double pad = 1e-3 * (b - a);
    if (std::isfinite(p.lower)) a += pad;
    if (std::isfinite(p.upper)) b -= pad;
    if (std::isfinite(p.upper) && std::isfinite(p.lower) && b - a > 12.0) {
      a = std::max(a, p.value - 6.0 * width);
      b = std::min(b, p.value + 6.0 * width);
    }
    lo.push_back(a);
    hi.push_back(b);
  }
}

} // namespace detail

[[nodiscard]] inline EstimationResult estimate(const ObjectiveContext& ctx) {
  const auto& cfg = ctx.config;
  auto x0 = start_vector(ctx);
  const auto f = [&](std::span<const double> x) { return objective(x, ctx); };

  if (cfg.optimizer.method == "direct_then_nm" && !ctx.layout.free_theta.empty()) {
    std::vector<double> lo, hi;
    detail::screening_box(ctx, lo, hi);
    const auto mix = std::vector<double>(x0.begin() + static_cast<std::ptrdiff_t>(ctx.layout.mixture_offset), x0.end());
    const auto screen = [&](std::span<const double> th_free) {
      auto th = cfg.model.values();
      for (std::size_t i = 0; i < ctx.layout.free_theta.size(); ++i) th[ctx.layout.free_theta[i]] = th_free[i];
      auto x = raw_from_theta(th, cfg.model, ctx.layout);
      x.insert(x.end(), mix.begin(), mix.end());
      return f(x);
    };
    const auto best = direct_search(screen, lo, hi, cfg.optimizer.screen_budget);
    auto th = cfg.model.values();
    for (std::size_t i = 0; i < ctx.layout.free_theta.size(); ++i) th[ctx.layout.free_theta[i]] = best[i];
    auto x = raw_from_theta(th, cfg.model, ctx.layout);
    x.insert(x.end(), mix.begin(), mix.end());
    x0 = std::move(x);
  } else if (cfg.optimizer.method != "nelder_mead" && cfg.optimizer.method != "direct_then_nm") {
    throw validation_error("unknown optimizer method '" + cfg.optimizer.method + "'");
  }

  NelderMeadOptions nm;
  nm.tol = cfg.optimizer.tol;
  nm.max_evals = cfg.optimizer.max_evals;
  nm.restarts = cfg.optimizer.restarts;
  nm.initial_step = cfg.optimizer.initial_step;
  const auto r = nelder_mead(f, x0, nm);

  EstimationResult out;
  for (const auto& p : cfg.model.theta) out.theta_names.push_back(p.name);
  const auto d = decode(r.x, ctx);
  out.theta = d.theta;
  out.mixture = d.mixture;
  out.raw_names = ctx.layout.names;
  out.raw = r.x;
  out.objective = r.f;
  out.evals = r.evals;
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.trace = r.trace;
  out.eta = r.spread;
  out.aux = ctx.aux;
  out.sim_seed = cfg.sim_seed;
  out.grid_seed = cfg.grid.seed;
  out.grid = grid_descriptor(ctx.grid);
  return out;
}

[[nodiscard]] inline EstimationResult estimate(const EstimationConfig& cfg, const Dataset& data) {
  return estimate(make_context(cfg, data));
}

inline nlohmann::ordered_json to_json(const EstimationResult& r) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json th;
  for (std::size_t i = 0; i < r.theta.size(); ++i) th[r.theta_names[i]] = r.theta[i];
  j["theta"] = th;
  j["mixture"] = to_json(r.mixture);
  nlohmann::ordered_json raw;
  for (std::size_t i = 0; i < r.raw.size(); ++i) raw[r.raw_names[i]] = r.raw[i];
  j["raw"] = raw;
  j["objective"] = r.objective;
  j["evals"] = r.evals;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["eta"] = std::isfinite(r.eta) ? nlohmann::ordered_json(r.eta) : nlohmann::ordered_json();
  j["trace"] = r.trace;
  j["aux"] = r.aux ? to_json(*r.aux) : nlohmann::ordered_json();
  j["seeds"] = {{"simulation", r.sim_seed}, {"grid", r.grid_seed}};
  j["grid"] = r.grid;
  return j;
}

} // namespace sievesmm
