#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sievesmm/distributions.hpp"
#include "sievesmm/errors.hpp"
#include "sievesmm/estimator.hpp"
#include "sievesmm/parallel.hpp"
#include "sievesmm/random.hpp"

namespace sievesmm {

// Regressor process for panel designs: stationary Gaussian AR(1).
struct RegressorProcess {
  double mean = 2.0;
  double autocorrelation = 0.3;
  double variance = 2.0;
};

struct MonteCarloConfig {
  EstimationConfig estimation;    // model parameter values double as the optimizer start
  std::vector<double> truth;      // true structural values; empty means the model values
  TruthDistribution shocks;       // law of the observed-data shocks
  std::size_t replications = 100;
  std::uint64_t master_seed = 1;
  std::size_t data_burn_in = 500; // discarded leading periods of each observed time series
  RegressorProcess regressor;
  double density_lo = -5.0;
  double density_hi = 5.0;
  std::size_t density_points = 201;
};

// Observed data drawn from the true model plus its censoring share (panels).
struct TruthSample {
  Dataset data;
  double censored_fraction = 0.0;
};

[[nodiscard]] inline std::vector<double> ar1_regressor_panel(const RegressorProcess& x, std::size_t units,
                                                             std::size_t T, RngStream& g) {
  detail::require(std::abs(x.autocorrelation) < 1.0 && x.variance > 0.0,
                  "regressor: need |autocorrelation| < 1 and positive variance");
  const double c = x.mean * (1.0 - x.autocorrelation);
  const double sd = std::sqrt(x.variance * (1.0 - x.autocorrelation * x.autocorrelation));
  std::vector<double> out(units * T);
  for (std::size_t j = 0; j < units; ++j) {
    double v = x.mean + std::sqrt(x.variance) * g.normal();
    for (std::size_t t = 0; t < T; ++t) {
      if (t > 0) v = c + x.autocorrelation * v + sd * g.normal();
      out[j * T + t] = v;
    }
  }
  return out;
}

// One observed data set of the model's size. Shocks come from `shocks`; volatility shocks
// are Gaussian (log-normal model) or chi-square(1) (linear model).
[[nodiscard]] inline TruthSample simulate_truth(const ModelSpec& m, std::span<const double> theta,
                                                const TruthDistribution& shocks, std::uint64_t seed,
                                                std::size_t burn_in = 500, const RegressorProcess& xp = {}) {
  detail::require(theta.size() == m.theta.size(), "simulate_truth: wrong number of parameters");
  TruthSample out;
  RngStream ge(seed, 1), gv(seed, 2), gx(seed, 3);
  if (m.is_panel()) {
    const std::size_t units = m.panel.units, T = m.panel.T, b = m.panel.burn_in;
    out.data.units = units;
    out.data.T = T;
    out.data.x = ar1_regressor_panel(xp, units, T, gx);
    std::vector<double> e(units * (b + T));
    for (double& v : e) v = shocks.draw(ge);
    out.data.y = simulate_tobit_panel(tobit_params(theta), out.data.x, e, units, T, b);
    std::size_t zeros = 0;
    for (double v : out.data.y) zeros += v == 0.0;
    out.censored_fraction = static_cast<double>(zeros) / static_cast<double>(out.data.y.size());
    return out;
  }
  const std::size_t total = burn_in + m.n;
  std::vector<double> e(total), e2(total);
  for (double& v : e) v = shocks.draw(ge);
  std::vector<double> y;
  switch (m.kind) {
  case ModelKind::ar1: y = simulate_ar1(theta[0], theta[1], e); break;
  case ModelKind::sv_lognormal:
    for (double& v : e2) v = gv.normal();
    y = simulate_sv_lognormal(sv_lognormal_params(theta), e, e2).y;
    break;
  case ModelKind::sv_linear:
    for (double& v : e2) {
      const double z = gv.normal();
      v = z * z;
    }
    y = simulate_sv_linear(sv_linear_params(theta), e, e2, m.sigma2_floor).y;
    break;
  case ModelKind::tobit_panel: break;
  }
  out.data.y.assign(y.begin() + static_cast<std::ptrdiff_t>(burn_in), y.end());
  return out;
}

struct ReplicationResult {
  std::size_t index = 0;
  std::uint64_t data_seed = 0;
  std::uint64_t sim_seed = 0;
  bool failed = false;
  std::string error;
  std::optional<EstimationResult> estimate;
  double censored_fraction = 0.0;
  std::vector<double> density; // fitted density on the summary grid
};

// Seeds of replication r are functions of (master, r) only.
[[nodiscard]] inline std::uint64_t replication_data_seed(std::uint64_t master, std::size_t r) {
  return derive_seed(master, 2 * static_cast<std::uint64_t>(r));
}
[[nodiscard]] inline std::uint64_t replication_sim_seed(std::uint64_t master, std::size_t r) {
  return derive_seed(master, 2 * static_cast<std::uint64_t>(r) + 1);
}

[[nodiscard]] inline std::vector<double> density_grid(const MonteCarloConfig& c) {
  detail::require(c.density_points >= 2 && c.density_hi > c.density_lo, "density grid: need >= 2 points on a non-empty interval");
  std::vector<double> e(c.density_points);
  for (std::size_t i = 0; i < e.size(); ++i)
    e[i] = c.density_lo + (c.density_hi - c.density_lo) * static_cast<double>(i) / static_cast<double>(e.size() - 1);
  return e;
}

[[nodiscard]] inline std::vector<double> truth_values(const MonteCarloConfig& c) {
  return c.truth.empty() ? c.estimation.model.values() : c.truth;
}

[[nodiscard]] inline ReplicationResult run_replication(const MonteCarloConfig& c, std::size_t r) {
  ReplicationResult out;
  out.index = r;
  out.data_seed = replication_data_seed(c.master_seed, r);
  out.sim_seed = replication_sim_seed(c.master_seed, r);
  try {
    const auto th = truth_values(c);
    auto ts = simulate_truth(c.estimation.model, th, c.shocks, out.data_seed, c.data_burn_in, c.regressor);
    out.censored_fraction = ts.censored_fraction;
    auto cfg = c.estimation;
    cfg.sim_seed = out.sim_seed;
    const auto res = estimate(make_context(cfg, std::move(ts.data)));
    if (!std::isfinite(res.objective)) throw numeric_error("replication: non-finite objective at the optimum");
    for (double e : density_grid(c)) out.density.push_back(density(res.mixture, e));
    out.estimate = res;
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

struct ParameterSummary {
  std::string name;
  double truth = 0.0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN(); // absent (NaN) with fewer than two successes
  double sqrt_n_sd = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_fail = 0;
};

struct DensityBand {
  std::vector<double> e, truth, mean, q025, q975;
};

struct MonteCarloSummary {
  std::size_t replications = 0;
  std::size_t n_fail = 0;
  std::vector<ParameterSummary> parameters;
  DensityBand density;
  double mean_censored_fraction = 0.0;
  std::vector<ReplicationResult> runs;
};

namespace detail {

// Linear-interpolation quantile (type 7) of a sorted sample.
inline double sorted_quantile(const std::vector<double>& v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

} // namespace detail

[[nodiscard]] inline MonteCarloSummary summarize(const MonteCarloConfig& c, std::vector<ReplicationResult> runs) {
  MonteCarloSummary s;
  s.replications = runs.size();
  const auto& m = c.estimation.model;
  const auto th = truth_values(c);
  std::vector<const ReplicationResult*> ok;
  double cens = 0.0;
  for (const auto& r : runs) {
    if (r.failed) ++s.n_fail;
    else ok.push_back(&r);
    cens += r.censored_fraction;
  }
  s.mean_censored_fraction = runs.empty() ? 0.0 : cens / static_cast<double>(runs.size());
  const double n_eff = static_cast<double>(m.is_panel() ? m.panel.units : m.n);
  for (std::size_t i = 0; i < m.theta.size(); ++i) {
    if (m.theta[i].fixed) continue;
    ParameterSummary p;
    p.name = m.theta[i].name;
    p.truth = th[i];
    p.n_fail = s.n_fail;
    if (!ok.empty()) {
      double sum = 0.0;
      for (const auto* r : ok) sum += r->estimate->theta[i];
      p.mean = sum / static_cast<double>(ok.size());
      if (ok.size() >= 2) {
        double ss = 0.0;
        for (const auto* r : ok) ss += (r->estimate->theta[i] - p.mean) * (r->estimate->theta[i] - p.mean);
        p.sd = std::sqrt(ss / static_cast<double>(ok.size() - 1));
        p.sqrt_n_sd = std::sqrt(n_eff) * p.sd;
      }
    }
    s.parameters.push_back(p);
  }
  s.density.e = density_grid(c);
  for (std::size_t g = 0; g < s.density.e.size(); ++g) {
    s.density.truth.push_back(c.shocks.density(s.density.e[g]));
    std::vector<double> v;
    for (const auto* r : ok) v.push_back(r->density[g]);
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    s.density.mean.push_back(v.empty() ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(v.size()));
    s.density.q025.push_back(detail::sorted_quantile(v, 0.025));
    s.density.q975.push_back(detail::sorted_quantile(v, 0.975));
  }
  s.runs = std::move(runs);
  return s;
}

// Runs replications [first, first + count); replication r is identical whether run alone
// or inside a larger batch, and for any worker count.
[[nodiscard]] inline MonteCarloSummary monte_carlo(const MonteCarloConfig& c, std::size_t first = 0,
                                                   std::optional<std::size_t> count = std::nullopt,
                                                   unsigned threads = 0) {
  const std::size_t R = count.value_or(c.replications);
  if (R < 1) throw validation_error("monte_carlo: need at least one replication");
  std::vector<ReplicationResult> runs(R);
  parallel_for(R, [&](std::size_t i) { runs[i] = run_replication(c, first + i); }, threads);
  return summarize(c, std::move(runs));
}

namespace detail {
inline void csv_number(std::ostream& f, double v) {
  if (std::isfinite(v)) f << v;
}
} // namespace detail

// Columns parameter, mean, sd, n_fail, then truth and sqrt(n)*sd; absent values are empty.
inline void write_summary_csv(const std::string& path, const MonteCarloSummary& s) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.precision(10);
  f << "parameter,mean,sd,n_fail,truth,sqrt_n_sd\n";
  for (const auto& p : s.parameters) {
    f << p.name << ',';
    detail::csv_number(f, p.mean);
    f << ',';
    detail::csv_number(f, p.sd);
    f << ',' << p.n_fail << ',';
    detail::csv_number(f, p.truth);
    f << ',';
    detail::csv_number(f, p.sqrt_n_sd);
    f << '\n';
  }
}

inline void write_density_csv(const std::string& path, const DensityBand& d) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.precision(10);
  f << "e,true,mean,q025,q975\n";
  for (std::size_t i = 0; i < d.e.size(); ++i) {
    f << d.e[i] << ',' << d.truth[i] << ',';
    detail::csv_number(f, d.mean[i]);
    f << ',';
    detail::csv_number(f, d.q025[i]);
    f << ',';
    detail::csv_number(f, d.q975[i]);
    f << '\n';
  }
}

inline nlohmann::ordered_json to_json(const MonteCarloSummary& s) {
  nlohmann::ordered_json j;
  j["replications"] = s.replications;
  j["n_fail"] = s.n_fail;
  j["mean_censored_fraction"] = s.mean_censored_fraction;
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(); };
  for (const auto& p : s.parameters)
    j["parameters"][p.name] = {{"truth", p.truth}, {"mean", num(p.mean)}, {"sd", num(p.sd)},
                               {"sqrt_n_sd", num(p.sqrt_n_sd)}, {"n_fail", p.n_fail}};
  for (const auto& r : s.runs) {
    nlohmann::ordered_json rj{{"index", r.index}, {"data_seed", r.data_seed}, {"sim_seed", r.sim_seed}, {"failed", r.failed}};
    if (r.failed) rj["error"] = r.error;
    else {
      nlohmann::ordered_json th;
      for (std::size_t i = 0; i < r.estimate->theta.size(); ++i) th[r.estimate->theta_names[i]] = r.estimate->theta[i];
      rj["theta"] = th;
      rj["objective"] = r.estimate->objective;
      rj["evals"] = r.estimate->evals;
      rj["converged"] = r.estimate->converged;
    }
    j["runs"].push_back(rj);
  }
  return j;
}

} // namespace sievesmm
