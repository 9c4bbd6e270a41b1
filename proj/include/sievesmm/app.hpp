#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sievesmm/econ.hpp"
#include "sievesmm/estimator.hpp"
#include "sievesmm/inference.hpp"
#include "sievesmm/io.hpp"
#include "sievesmm/montecarlo.hpp"

namespace sievesmm {

inline constexpr const char* version = "1.0.0";

enum class Command { estimate, montecarlo, bootstrap, counterfactual, simulate };

inline Command command_from_string(const std::string& s) {
  if (s == "estimate") return Command::estimate;
  if (s == "montecarlo") return Command::montecarlo;
  if (s == "bootstrap") return Command::bootstrap;
  if (s == "counterfactual") return Command::counterfactual;
  if (s == "simulate") return Command::simulate;
  throw validation_error("unknown command '" + s + "'");
}

inline std::string to_string(Command c) {
  switch (c) {
  case Command::estimate: return "estimate";
  case Command::montecarlo: return "montecarlo";
  case Command::bootstrap: return "bootstrap";
  case Command::counterfactual: return "counterfactual";
  case Command::simulate: return "simulate";
  }
  return "?";
}

struct RunOptions {
  Command command = Command::estimate;
  std::string config_path;
  std::string out_dir = "out";
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;
};

// Where the observed data come from and how they are read.
struct InputConfig {
  std::string path; // resolved against the config file's directory
  std::string format = "series"; // series | panel
  std::string column = "y";
  SeriesTransform transform = SeriesTransform::none;
  std::string unit_column = "unit", time_column = "t", y_column = "y", x_column = "x";
};

struct InferenceConfig {
  BootstrapOptions bootstrap;
  JacobianOptions jacobian;
  std::string result_path; // optional: reuse the estimate stored in a result.json
};

struct CounterfactualConfig {
  std::vector<double> gammas{2.0, 4.0, 6.0, 10.0};
  PreferenceParams preferences;
  SvLinearParams theta;
  MixtureParams mixture = standard_normal_mixture();
  UncertaintyOptions uncertainty;
  bool welfare = true;
  std::uint64_t welfare_seed = 1;
};

struct SimulateConfig {
  TruthDistribution shocks;
  std::uint64_t seed = 1;
  std::size_t burn_in = 500;
  RegressorProcess regressor;
};

struct OutputConfig {
  double density_lo = -5.0, density_hi = 5.0;
  std::size_t density_points = 201;
};

// Parsed configuration for every command; sections unused by a command are ignored.
struct RunConfig {
  nlohmann::ordered_json raw;
  std::filesystem::path base_dir;
  std::optional<InputConfig> input;
  nlohmann::ordered_json estimation_json;
  InferenceConfig inference;
  nlohmann::ordered_json montecarlo_json;
  CounterfactualConfig counterfactual;
  SimulateConfig simulate;
  OutputConfig output;
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path q(p);
  return q.is_absolute() ? q : base / q;
}

inline TruthDistribution truth_from_json(const nlohmann::ordered_json& j, const char* kind_key, const char* param_key) {
  const auto kind = get_or<std::string>(j, kind_key, "gev");
  if (kind == "gev") {
    if (j.contains(param_key)) return {TruthKind::gev, j.at(param_key).get<double>(), {}};
    return gev_truth();
  }
  if (kind == "student_t") return student_truth(get_or<double>(j, param_key, 5.0));
  if (kind == "normal") return {};
  if (kind == "mixture") {
    detail::require(j.contains("shock_mixture"), "config: shocks = \"mixture\" needs a shock_mixture table");
    TruthDistribution t;
    t.kind = TruthKind::mixture;
    t.mixture = mixture_from_json(j.at("shock_mixture"));
    return t;
  }
  throw validation_error("config: unknown shock distribution '" + kind + "' (gev, student_t, normal, mixture)");
}

inline RegressorProcess regressor_from_json(const nlohmann::ordered_json& j) {
  RegressorProcess r;
  r.mean = get_or<double>(j, "mean", r.mean);
  r.autocorrelation = get_or<double>(j, "autocorrelation", r.autocorrelation);
  r.variance = get_or<double>(j, "variance", r.variance);
  detail::require(std::abs(r.autocorrelation) < 1.0 && r.variance > 0.0, "config: regressor must be a stationary AR(1)");
  return r;
}

inline MixtureParams econ_mixture_from_json(const nlohmann::ordered_json& j) {
  auto m = j;
  if (!m.contains("k") && m.contains("weights")) m["k"] = m["weights"].size();
  return mixture_from_json(m);
}

} // namespace detail

[[nodiscard]] inline RunConfig parse_run_config(const std::string& path) {
  RunConfig rc;
  rc.raw = read_config(path);
  rc.base_dir = std::filesystem::absolute(path).parent_path();
  const auto& j = rc.raw;

  if (j.contains("input")) {
    const auto& s = j.at("input");
    InputConfig in;
    detail::require(s.contains("path"), "config: input.path is required");
    in.path = detail::resolve(rc.base_dir, s.at("path").get<std::string>()).string();
    in.format = detail::get_or<std::string>(s, "format", in.format);
    detail::require(in.format == "series" || in.format == "panel", "config: input.format must be series or panel");
    in.column = detail::get_or<std::string>(s, "column", in.column);
    in.transform = series_transform_from_string(detail::get_or<std::string>(s, "transform", "none"));
    in.unit_column = detail::get_or<std::string>(s, "unit_column", in.unit_column);
    in.time_column = detail::get_or<std::string>(s, "time_column", in.time_column);
    in.y_column = detail::get_or<std::string>(s, "y_column", in.y_column);
    in.x_column = detail::get_or<std::string>(s, "x_column", in.x_column);
    rc.input = in;
  }
  rc.estimation_json = j;

  const auto& inf = detail::section(j, "inference");
  auto& b = rc.inference.bootstrap;
  b.B = detail::get_or<std::size_t>(inf, "B", b.B);
  b.block_len = detail::get_or<std::size_t>(inf, "block_len", b.block_len);
  b.seed = detail::get_or<std::uint64_t>(inf, "seed", b.seed);
  b.pinv_condition = detail::get_or<double>(inf, "pinv_condition", b.pinv_condition);
  auto& jo = rc.inference.jacobian;
  jo.rel_step = detail::get_or<double>(inf, "rel_step", jo.rel_step);
  jo.min_step = detail::get_or<double>(inf, "min_step", jo.min_step);
  jo.weight_step = detail::get_or<double>(inf, "weight_step", jo.weight_step);
  if (inf.contains("result"))
    rc.inference.result_path = detail::resolve(rc.base_dir, inf.at("result").get<std::string>()).string();

  rc.montecarlo_json = detail::section(j, "montecarlo");

  const auto& cf = detail::section(j, "counterfactual");
  auto& c = rc.counterfactual;
  c.gammas = detail::get_or<std::vector<double>>(cf, "gammas", c.gammas);
  detail::require(!c.gammas.empty(), "config: counterfactual.gammas is empty");
  c.preferences.a = detail::get_or<double>(cf, "a", c.preferences.a);
  if (cf.contains("discount_factor")) {
    const double d = cf.at("discount_factor").get<double>();
    detail::require(d > 0.0 && d < 1.0, "config: counterfactual.discount_factor must lie in (0, 1)");
    c.preferences.a = -std::log(d) / detail::get_or<double>(cf, "discount_periods", 1.0);
  }
  c.preferences.horizon = detail::get_or<std::size_t>(cf, "horizon", c.preferences.horizon);
  c.preferences.reps = detail::get_or<std::size_t>(cf, "reps", c.preferences.reps);
  c.uncertainty.quad_nodes = detail::get_or<std::size_t>(cf, "quad_nodes", c.uncertainty.quad_nodes);
  c.uncertainty.units.data_scale = detail::get_or<double>(cf, "data_scale", c.uncertainty.units.data_scale);
  c.uncertainty.units.long_run_mean = detail::get_or<bool>(cf, "long_run_mean", c.uncertainty.units.long_run_mean);
  c.uncertainty.draws = detail::get_or<std::size_t>(cf, "draws", c.uncertainty.draws);
  c.uncertainty.burn_in = detail::get_or<std::size_t>(cf, "burn_in", c.uncertainty.burn_in);
  c.uncertainty.seed = detail::get_or<std::uint64_t>(cf, "seed", c.uncertainty.seed);
  c.uncertainty.periods_per_year = detail::get_or<double>(cf, "periods_per_year", c.uncertainty.periods_per_year);
  c.welfare = detail::get_or<bool>(cf, "welfare", c.welfare);
  c.welfare_seed = detail::get_or<std::uint64_t>(cf, "welfare_seed", c.uncertainty.seed);
  if (cf.contains("result")) {
    const auto r = read_config_json(detail::resolve(rc.base_dir, cf.at("result").get<std::string>()).string());
    const auto& th = r.at("estimate").at("theta");
    c.theta = {th.at("mu_c").get<double>(), th.at("rho_c").get<double>(), th.at("mu_sigma").get<double>(),
               th.at("rho_sigma").get<double>(), th.at("kappa_sigma").get<double>()};
    c.mixture = mixture_from_json(r.at("estimate").at("mixture"));
  }
  if (cf.contains("theta")) {
    const auto& th = cf.at("theta");
    c.theta.mu_c = detail::get_or<double>(th, "mu_c", c.theta.mu_c);
    c.theta.rho_c = detail::get_or<double>(th, "rho_c", c.theta.rho_c);
    c.theta.mu_sigma = detail::get_or<double>(th, "mu_sigma", c.theta.mu_sigma);
    c.theta.rho_sigma = detail::get_or<double>(th, "rho_sigma", c.theta.rho_sigma);
    c.theta.kappa_sigma = detail::get_or<double>(th, "kappa_sigma", c.theta.kappa_sigma);
  }
  if (cf.contains("mixture")) c.mixture = detail::econ_mixture_from_json(cf.at("mixture"));

  const auto& sm = detail::section(j, "simulate");
  rc.simulate.shocks = detail::truth_from_json(sm, "shocks", "shock_parameter");
  rc.simulate.seed = detail::get_or<std::uint64_t>(sm, "seed", rc.simulate.seed);
  rc.simulate.burn_in = detail::get_or<std::size_t>(sm, "burn_in", rc.simulate.burn_in);
  rc.simulate.regressor = detail::regressor_from_json(detail::section(sm, "regressor"));

  const auto& out = detail::section(j, "output");
  rc.output.density_lo = detail::get_or<double>(out, "density_lo", rc.output.density_lo);
  rc.output.density_hi = detail::get_or<double>(out, "density_hi", rc.output.density_hi);
  rc.output.density_points = detail::get_or<std::size_t>(out, "density_points", rc.output.density_points);
  detail::require(rc.output.density_points >= 2 && rc.output.density_hi > rc.output.density_lo,
                  "config: output density grid needs hi > lo and at least two points");
  return rc;
}

[[nodiscard]] inline MonteCarloConfig montecarlo_config_from_json(const nlohmann::ordered_json& root) {
  const auto& j = detail::section(root, "montecarlo");
  MonteCarloConfig c;
  c.estimation = estimation_config_from_json(root);
  c.shocks = detail::truth_from_json(j, "shocks", "shock_parameter");
  c.replications = detail::get_or<std::size_t>(j, "replications", c.replications);
  detail::require(c.replications >= 1, "config: montecarlo.replications must be >= 1");
  c.master_seed = detail::get_or<std::uint64_t>(j, "master_seed", c.master_seed);
  c.data_burn_in = detail::get_or<std::size_t>(j, "data_burn_in", c.data_burn_in);
  c.regressor = detail::regressor_from_json(detail::section(j, "regressor"));
  c.density_lo = detail::get_or<double>(j, "density_lo", c.density_lo);
  c.density_hi = detail::get_or<double>(j, "density_hi", c.density_hi);
  c.density_points = detail::get_or<std::size_t>(j, "density_points", c.density_points);
  if (j.contains("truth")) {
    c.truth = c.estimation.model.values();
    const auto& t = j.at("truth");
    for (auto it = t.begin(); it != t.end(); ++it) c.truth[c.estimation.model.index_of(it.key())] = it->get<double>();
  }
  return c;
}

// SHA-256 of a file as lowercase hex.
[[nodiscard]] inline std::string sha256_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw validation_error("cannot open '" + path + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256: init failed");
  std::vector<char> buf(1 << 16);
  while (f) {
    f.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (f.gcount() > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(f.gcount())) != 1)
      throw std::runtime_error("sha256: update failed");
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) throw std::runtime_error("sha256: final failed");
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

namespace detail {

inline void write_json(const std::filesystem::path& p, const nlohmann::ordered_json& j) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
  f << j.dump(2) << '\n';
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline void write_fitted_density(const std::filesystem::path& p, const MixtureParams& m, const OutputConfig& o) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
  f.precision(10);
  f << "e,density\n";
  for (std::size_t i = 0; i < o.density_points; ++i) {
    const double e = o.density_lo + (o.density_hi - o.density_lo) * static_cast<double>(i) /
                                        static_cast<double>(o.density_points - 1);
    f << e << ',' << density(m, e) << '\n';
  }
}

} // namespace detail

// Observed data for estimate/bootstrap.
[[nodiscard]] inline Dataset load_input(const InputConfig& in) {
  if (in.format == "panel") return load_panel_csv(in.path, in.unit_column, in.time_column, in.y_column, in.x_column);
  Dataset d;
  d.y = load_series_csv(in.path, in.column, in.transform);
  return d;
}

// Draws one observed data set from the configured model (parameter values are the truth).
[[nodiscard]] inline TruthSample simulate_dataset(const EstimationConfig& cfg, const SimulateConfig& s) {
  return simulate_truth(cfg.model, cfg.model.values(), s.shocks, s.seed, s.burn_in, s.regressor);
}

struct RunReport {
  nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

namespace detail {

inline std::pair<EstimationConfig, Dataset> prepared_data(const RunConfig& rc, const RunOptions& opt, RunReport& rep) {
  detail::require(rc.input.has_value(), "config: this command needs an [input] section");
  auto d = load_input(*rc.input);
  rep.inputs.push_back(rc.input->path);
  auto j = rc.estimation_json;
  if (rc.input->format == "panel") {
    auto& m = j["model"];
    if (!m.contains("kind")) m["kind"] = "tobit_panel";
    if (!m["panel"].contains("units")) m["panel"]["units"] = d.units;
    if (!m["panel"].contains("T")) m["panel"]["T"] = d.T;
  }
  auto cfg = estimation_config_from_json(j, d.y.size());
  if (opt.seed) cfg.sim_seed = *opt.seed;
  return {cfg, std::move(d)};
}

inline nlohmann::ordered_json estimate_json(const EstimationResult& r) { return to_json(r); }

} // namespace detail

inline void run_estimate(const RunConfig& rc, const RunOptions& opt, RunReport& rep) {
  auto [cfg, data] = detail::prepared_data(rc, opt, rep);
  const auto res = estimate(cfg, data);
  rep.seeds["simulation"] = cfg.sim_seed;
  rep.seeds["grid"] = cfg.grid.seed;
  nlohmann::ordered_json j;
  j["command"] = "estimate";
  j["config"] = to_json(cfg);
  j["observations"] = data.y.size();
  j["estimate"] = detail::estimate_json(res);
  const std::filesystem::path out(opt.out_dir);
  detail::write_json(out / "result.json", j);
  detail::write_fitted_density(out / "density.csv", res.mixture, rc.output);
  rep.outputs.insert(rep.outputs.end(), {"result.json", "density.csv"});
}

inline void run_bootstrap(const RunConfig& rc, const RunOptions& opt, RunReport& rep) {
  auto [cfg, data] = detail::prepared_data(rc, opt, rep);
  const auto ctx = make_context(cfg, data);
  EstimationResult res;
  if (!rc.inference.result_path.empty()) {
    const auto prev = read_config_json(rc.inference.result_path);
    rep.inputs.push_back(rc.inference.result_path);
    const auto& raw = prev.at("estimate").at("raw");
    detail::require(raw.size() == ctx.layout.size, "inference.result: raw vector does not match the configuration");
    res.raw_names = ctx.layout.names;
    for (const auto& name : ctx.layout.names) {
      detail::require(raw.contains(name), "inference.result: missing raw coordinate '" + name + "'");
      res.raw.push_back(raw.at(name).get<double>());
    }
    const auto dec = decode(res.raw, ctx);
    res.theta = dec.theta;
    res.mixture = dec.mixture;
    for (const auto& p : cfg.model.theta) res.theta_names.push_back(p.name);
    res.objective = objective(res.raw, ctx);
    res.converged = prev.at("estimate").value("converged", false);
    res.aux = ctx.aux;
    res.sim_seed = cfg.sim_seed;
    res.grid_seed = cfg.grid.seed;
    res.grid = grid_descriptor(ctx.grid);
  } else {
    res = estimate(ctx);
  }
  auto bopt = rc.inference.bootstrap;
  if (opt.seed) bopt.seed = *opt.seed;
  const auto J = moment_jacobian(res.raw, ctx, rc.inference.jacobian);
  const auto cols = mixture_columns(ctx.layout);
  const double floor = cfg.mixture.floor() > 0.0 ? cfg.mixture.floor() : 1.0;
  const auto ill = illposedness_diagnostic(J.G, ctx.grid.weights, floor, cols);
  const auto boot = block_bootstrap_se(res.raw, ctx, J, bopt);
  rep.seeds["simulation"] = cfg.sim_seed;
  rep.seeds["grid"] = cfg.grid.seed;
  rep.seeds["bootstrap"] = bopt.seed;
  nlohmann::ordered_json j;
  j["command"] = "bootstrap";
  j["config"] = to_json(cfg);
  j["observations"] = data.y.size();
  j["estimate"] = detail::estimate_json(res);
  j["inference"] = to_json(boot, ill);
  if (cfg.mixture.floor() <= 0.0) j["inference"]["warnings"].push_back("bandwidth floor disabled: bounds use floor 1");
  const std::filesystem::path out(opt.out_dir);
  detail::write_json(out / "result.json", j);
  {
    std::ofstream f(out / "se.csv");
    f.precision(10);
    f << "parameter,estimate,se\n";
    for (std::size_t i = 0; i < boot.theta_names.size(); ++i) {
      f << boot.theta_names[i] << ',' << boot.theta[i] << ',';
      if (std::isfinite(boot.theta_se[i])) f << boot.theta_se[i];
      f << '\n';
    }
  }
  detail::write_fitted_density(out / "density.csv", res.mixture, rc.output);
  rep.outputs.insert(rep.outputs.end(), {"result.json", "se.csv", "density.csv"});
}

inline void run_montecarlo(const RunConfig& rc, const RunOptions& opt, RunReport& rep) {
  auto c = montecarlo_config_from_json(rc.raw);
  if (opt.seed) c.master_seed = *opt.seed;
  const auto s = monte_carlo(c, 0, c.replications, opt.threads);
  rep.seeds["master"] = c.master_seed;
  rep.seeds["grid"] = c.estimation.grid.seed;
  nlohmann::ordered_json j;
  j["command"] = "montecarlo";
  j["config"] = to_json(c.estimation);
  j["shocks"] = {{"kind", c.shocks.name()}, {"parameter", c.shocks.parameter}};
  j["summary"] = to_json(s);
  const std::filesystem::path out(opt.out_dir);
  detail::write_json(out / "result.json", j);
  write_summary_csv((out / "summary.csv").string(), s);
  write_density_csv((out / "density_band.csv").string(), s.density);
  rep.outputs.insert(rep.outputs.end(), {"result.json", "summary.csv", "density_band.csv"});
}

inline void run_counterfactual(const RunConfig& rc, const RunOptions& opt, RunReport& rep) {
  auto c = rc.counterfactual;
  if (opt.seed) {
    c.uncertainty.seed = *opt.seed;
    c.welfare_seed = *opt.seed;
  }
  rep.seeds["uncertainty"] = c.uncertainty.seed;
  rep.seeds["welfare"] = c.welfare_seed;
  const std::filesystem::path out(opt.out_dir);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  {
    std::ofstream f(out / "risk_free.csv");
    f.precision(10);
    f << "gamma,uncertainty_effect,floored\n";
    for (double g : c.gammas) {
      const auto u = uncertainty_component(c.theta, c.mixture, g, c.uncertainty);
      f << g << ',' << u.effect << ',' << u.floored << '\n';
      rows.push_back({{"gamma", g}, {"uncertainty_effect", u.effect}, {"floored", u.floored}});
    }
  }
  nlohmann::ordered_json j;
  j["command"] = "counterfactual";
  j["theta"] = {{"mu_c", c.theta.mu_c},
                {"rho_c", c.theta.rho_c},
                {"mu_sigma", c.theta.mu_sigma},
                {"rho_sigma", c.theta.rho_sigma},
                {"kappa_sigma", c.theta.kappa_sigma}};
  j["mixture"] = to_json(c.mixture);
  j["preferences"] = {{"a", c.preferences.a}, {"horizon", c.preferences.horizon}, {"reps", c.preferences.reps}};
  j["units"] = {{"data_scale", c.uncertainty.units.data_scale}, {"long_run_mean", c.uncertainty.units.long_run_mean}};
  j["risk_free"] = rows;
  rep.outputs.push_back("risk_free.csv");
  if (c.welfare) {
    std::ofstream f(out / "welfare.csv");
    f.precision(10);
    f << "gamma,lambda_pct\n";
    nlohmann::ordered_json w = nlohmann::ordered_json::array();
    for (double g : c.gammas) {
      auto pref = c.preferences;
      pref.gamma = g;
      WelfareOptions wo;
      wo.units = c.uncertainty.units;
      wo.seed = c.welfare_seed;
      wo.threads = opt.threads;
      const auto r = welfare_cost(c.theta, c.mixture, pref, wo);
      f << g << ',' << 100.0 * r.lambda << '\n';
      w.push_back({{"gamma", g}, {"lambda_pct", 100.0 * r.lambda}});
    }
    j["welfare"] = w;
    rep.outputs.push_back("welfare.csv");
  }
  detail::write_json(out / "result.json", j);
  rep.outputs.push_back("result.json");
}

inline void run_simulate(const RunConfig& rc, const RunOptions& opt, RunReport& rep) {
  const auto cfg = estimation_config_from_json(rc.estimation_json);
  auto s = rc.simulate;
  if (opt.seed) s.seed = *opt.seed;
  const auto sample = simulate_dataset(cfg, s);
  rep.seeds["simulate"] = s.seed;
  const std::filesystem::path out(opt.out_dir);
  if (cfg.model.is_panel()) write_panel_csv((out / "data.csv").string(), sample.data);
  else write_series_csv((out / "data.csv").string(), "y", sample.data.y);
  nlohmann::ordered_json j;
  j["command"] = "simulate";
  j["config"] = to_json(cfg);
  j["shocks"] = {{"kind", s.shocks.name()}, {"parameter", s.shocks.parameter}};
  j["observations"] = sample.data.y.size();
  j["censored_fraction"] = sample.censored_fraction;
  detail::write_json(out / "result.json", j);
  rep.outputs.insert(rep.outputs.end(), {"data.csv", "result.json"});
}

// Runs one command, writing artifacts and manifest.json to opt.out_dir. On failure writes
// error.json and returns a nonzero status (2 for invalid input, 1 otherwise).
inline int run(const RunOptions& opt) {
  const std::filesystem::path out(opt.out_dir);
  try {
    std::filesystem::create_directories(out);
  } catch (const std::exception& e) {
    std::cerr << "sievesmm: cannot create output directory: " << e.what() << '\n';
    return 1;
  }
  try {
    set_default_threads(opt.threads);
    const auto rc = parse_run_config(opt.config_path);
    RunReport rep;
    switch (opt.command) {
    case Command::estimate: run_estimate(rc, opt, rep); break;
    case Command::bootstrap: run_bootstrap(rc, opt, rep); break;
    case Command::montecarlo: run_montecarlo(rc, opt, rep); break;
    case Command::counterfactual: run_counterfactual(rc, opt, rep); break;
    case Command::simulate: run_simulate(rc, opt, rep); break;
    }
    nlohmann::ordered_json m;
    m["tool"] = "sievesmm";
    m["version"] = version;
    m["command"] = to_string(opt.command);
    m["config"] = {{"path", opt.config_path}, {"sha256", sha256_file(opt.config_path)}};
    nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
    for (const auto& p : rep.inputs) inputs.push_back({{"path", p}, {"sha256", sha256_file(p)}});
    m["inputs"] = inputs;
    m["seeds"] = rep.seeds;
    if (opt.seed) m["seed_override"] = *opt.seed;
    m["threads"] = opt.threads;
    m["outputs"] = rep.outputs;
    m["timestamp"] = detail::utc_timestamp();
    detail::write_json(out / "manifest.json", m);
    std::filesystem::remove(out / "error.json");
    return 0;
  } catch (const std::exception& e) {
    nlohmann::ordered_json err;
    err["error"] = {{"code", error_code(e)}, {"message", e.what()}};
    err["command"] = to_string(opt.command);
    err["config"] = opt.config_path;
    try {
      detail::write_json(out / "error.json", err);
    } catch (...) {
    }
    std::cerr << "sievesmm: " << error_code(e) << ": " << e.what() << '\n';
    return dynamic_cast<const std::invalid_argument*>(&e) ? 2 : 1;
  }
}

} // namespace sievesmm
