#pragma once

#include <json.hpp>
#include <toml.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sievesmm/errors.hpp"
#include "sievesmm/estimator.hpp"

namespace sievesmm {

enum class SeriesTransform { none, log_growth_x100 };

inline SeriesTransform series_transform_from_string(const std::string& s) {
  if (s == "none") return SeriesTransform::none;
  if (s == "log_growth_x100") return SeriesTransform::log_growth_x100;
  throw validation_error("unknown transform '" + s + "' (expected none or log_growth_x100)");
}

inline std::string to_string(SeriesTransform t) { return t == SeriesTransform::none ? "none" : "log_growth_x100"; }

// Comma-separated table with a header row; cells kept as text.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
    std::string avail;
    for (const auto& h : header) avail += (avail.empty() ? "" : ", ") + h;
    throw validation_error("column '" + name + "' not found; available columns: " + avail);
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && ws(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && ws(static_cast<unsigned char>(s[i]))) ++i;
  s.erase(0, i);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') quoted = !quoted;
    if (ch == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline double parse_cell(const std::string& s, std::size_t row, const std::string& col) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (!s.empty() && *b == '+') ++b;
  const auto r = std::from_chars(b, e, v);
  if (s.empty()) throw validation_error("missing value in column '" + col + "' at data row " + std::to_string(row));
  if (r.ec != std::errc() || r.ptr != e || !std::isfinite(v))
    throw validation_error("non-numeric value '" + s + "' in column '" + col + "' at data row " + std::to_string(row));
  return v;
}

} // namespace detail

[[nodiscard]] inline CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw validation_error("cannot open input file '" + path + "'");
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    cells.resize(t.header.size());
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) throw validation_error("input file '" + path + "' is empty");
  return t;
}

// Applies the transform; log growth is 100 (log X_t - log X_{t-1}) and drops the first value.
[[nodiscard]] inline std::vector<double> transform_series(std::span<const double> levels, SeriesTransform tr) {
  if (tr == SeriesTransform::none) return {levels.begin(), levels.end()};
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (!(levels[i] > 0.0))
      throw validation_error("log_growth_x100 needs positive levels; data row " + std::to_string(i + 1) + " is " +
                             std::to_string(levels[i]));
  detail::require(levels.size() >= 2, "log_growth_x100 needs at least two observations");
  std::vector<double> out(levels.size() - 1);
  for (std::size_t i = 1; i < levels.size(); ++i) out[i - 1] = 100.0 * (std::log(levels[i]) - std::log(levels[i - 1]));
  return out;
}

[[nodiscard]] inline std::vector<double> load_series_csv(const std::string& path, const std::string& column,
                                                         SeriesTransform tr = SeriesTransform::none) {
  const auto t = read_csv(path);
  const std::size_t c = t.column(column);
  std::vector<double> v;
  v.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) v.push_back(detail::parse_cell(t.rows[r][c], r + 1, column));
  return transform_series(v, tr);
}

// Long-format panel (unit, t, y, x): units sorted by first appearance, periods by t.
[[nodiscard]] inline Dataset load_panel_csv(const std::string& path, const std::string& unit_col,
                                            const std::string& time_col, const std::string& y_col,
                                            const std::string& x_col) {
  const auto t = read_csv(path);
  const std::size_t cu = t.column(unit_col), ct = t.column(time_col), cy = t.column(y_col), cx = t.column(x_col);
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::tuple<double, double, double>>> units;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (!units.count(row[cu])) order.push_back(row[cu]);
    units[row[cu]].emplace_back(detail::parse_cell(row[ct], r + 1, time_col), detail::parse_cell(row[cy], r + 1, y_col),
                                detail::parse_cell(row[cx], r + 1, x_col));
  }
  detail::require(!order.empty(), "panel input has no rows");
  Dataset d;
  d.units = order.size();
  d.T = units[order[0]].size();
  for (const auto& u : order) {
    auto rows = units[u];
    if (rows.size() != d.T) throw validation_error("panel is unbalanced: unit '" + u + "' has " + std::to_string(rows.size()) +
                                                   " periods, expected " + std::to_string(d.T));
    std::sort(rows.begin(), rows.end());
    for (const auto& [tt, y, x] : rows) {
      d.y.push_back(y);
      d.x.push_back(x);
    }
  }
  return d;
}

inline void write_series_csv(const std::string& path, const std::string& column, std::span<const double> y) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.precision(17);
  f << "t," << column << '\n';
  for (std::size_t t = 0; t < y.size(); ++t) f << t + 1 << ',' << y[t] << '\n';
}

inline void write_panel_csv(const std::string& path, const Dataset& d) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.precision(17);
  f << "unit,t,y,x\n";
  for (std::size_t j = 0; j < d.units; ++j)
    for (std::size_t t = 0; t < d.T; ++t) f << j << ',' << t + 1 << ',' << d.y[j * d.T + t] << ',' << d.x[j * d.T + t] << '\n';
}

namespace detail {

inline nlohmann::ordered_json toml_to_json(const toml::node& n) {
  if (const auto* t = n.as_table()) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v);
    return j;
  }
  if (const auto* a = n.as_array()) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& v : *a) j.push_back(toml_to_json(v));
    return j;
  }
  if (const auto* v = n.as_string()) return v->get();
  if (const auto* v = n.as_integer()) return v->get();
  if (const auto* v = n.as_floating_point()) return v->get();
  if (const auto* v = n.as_boolean()) return v->get();
  throw validation_error("config: dates and times are not supported");
}

} // namespace detail

inline constexpr int config_schema_version = 1;

// Reads a TOML (.toml) or JSON (any other extension) config into JSON and checks the schema version.
[[nodiscard]] inline nlohmann::ordered_json read_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw validation_error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  nlohmann::ordered_json j;
  if (std::filesystem::path(path).extension() == ".toml") {
    try {
      j = detail::toml_to_json(toml::parse(text, path));
    } catch (const toml::parse_error& e) {
      throw validation_error("config: TOML parse error: " + std::string(e.description()));
    }
  } else {
    try {
      j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw validation_error(std::string("config: JSON parse error: ") + e.what());
    }
  }
  if (!j.is_object()) throw validation_error("config: top level must be a table/object");
  if (!j.contains("schema_version")) throw validation_error("config: missing schema_version");
  if (j["schema_version"] != config_schema_version)
    throw validation_error("config: unsupported schema_version " + j["schema_version"].dump() + " (expected " +
                           std::to_string(config_schema_version) + ")");
  return j;
}

// Plain JSON document (result files written by earlier runs).
[[nodiscard]] inline nlohmann::ordered_json read_config_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw validation_error("cannot open '" + path + "'");
  try {
    return nlohmann::ordered_json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw validation_error("'" + path + "' is not valid JSON: " + e.what());
  }
}

namespace detail {

template <class T>
T get_or(const nlohmann::ordered_json& j, const char* key, T def) {
  if (!j.is_object() || !j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw validation_error(std::string("config: key '") + key + "' has the wrong type");
  }
}

inline const nlohmann::ordered_json& section(const nlohmann::ordered_json& j, const char* key) {
  static const nlohmann::ordered_json empty = nlohmann::ordered_json::object();
  return j.contains(key) ? j.at(key) : empty;
}

} // namespace detail

// Model section: kind, sizes, and optional per-parameter overrides
// [model.parameters.<name>] value/lower/upper/fixed.
[[nodiscard]] inline ModelSpec model_from_json(const nlohmann::ordered_json& j, std::size_t n_data = 0) {
  const auto kind = model_kind_from_string(detail::get_or<std::string>(j, "kind", "ar1"));
  ModelSpec m;
  const std::size_t S = detail::get_or<std::size_t>(j, "S", 1);
  if (kind == ModelKind::tobit_panel) {
    const auto& p = detail::section(j, "panel");
    m = make_panel_model(detail::get_or<std::size_t>(p, "units", 0), detail::get_or<std::size_t>(p, "T", 0), S,
                         detail::get_or<std::size_t>(p, "burn_in", 10));
  } else {
    const std::size_t n = detail::get_or<std::size_t>(j, "n", n_data);
    m = make_model(kind, n, S);
    m.burn_in = detail::get_or<std::size_t>(j, "burn_in", default_burn_in(n));
  }
  m.lags = detail::get_or<std::size_t>(j, "lags", 1);
  m.long_sample = detail::get_or<bool>(j, "long_sample", false);
  m.sigma2_floor = detail::get_or<double>(j, "sigma2_floor", 1e-12);
  const auto& ps = detail::section(j, "parameters");
  for (auto it = ps.begin(); it != ps.end(); ++it) {
    auto& p = m.theta[m.index_of(it.key())];
    if (it->is_number()) {
      p.value = it->get<double>();
      continue;
    }
    p.value = detail::get_or<double>(*it, "value", p.value);
    p.lower = detail::get_or<double>(*it, "lower", p.lower);
    p.upper = detail::get_or<double>(*it, "upper", p.upper);
    p.fixed = detail::get_or<bool>(*it, "fixed", p.fixed);
  }
  return m;
}

[[nodiscard]] inline MixtureConfig mixture_config_from_json(const nlohmann::ordered_json& j) {
  MixtureConfig c;
  c.k = detail::get_or<std::size_t>(j, "k", 1);
  c.flags.mean_zero = detail::get_or<bool>(j, "mean_zero", true);
  c.flags.unit_variance = detail::get_or<bool>(j, "unit_variance", true);
  c.flags.tails = detail::get_or<bool>(j, "tails", false);
  c.floor_c = detail::get_or<double>(j, "floor_c", c.floor_c);
  c.floor_b = detail::get_or<double>(j, "floor_b", c.floor_b);
  c.location_multiplier = detail::get_or<double>(j, "location_multiplier", c.location_multiplier);
  c.xi_max = detail::get_or<double>(j, "xi_max", c.xi_max);
  detail::require(c.k >= 1, "config: mixture.k must be >= 1");
  return c;
}

// Full estimation configuration; n_data fills the time-series length when not given.
[[nodiscard]] inline EstimationConfig estimation_config_from_json(const nlohmann::ordered_json& j, std::size_t n_data = 0) {
  EstimationConfig c;
  c.model = model_from_json(detail::section(j, "model"), n_data);
  c.mixture = mixture_config_from_json(detail::section(j, "mixture"));
  const auto& g = detail::section(j, "grid");
  c.grid.m = detail::get_or<std::size_t>(g, "m", c.grid.m);
  c.grid.generator = qmc_generator_from_string(detail::get_or<std::string>(g, "generator", "sobol"));
  c.grid.seed = detail::get_or<std::uint64_t>(g, "seed", 0);
  c.grid.scale_mode = grid_scale_mode_from_string(detail::get_or<std::string>(g, "scale_mode", "inverse"));
  const auto& a = detail::section(j, "aux");
  c.aux.enabled = detail::get_or<bool>(a, "enabled", false);
  c.aux.variant = garch_variant_from_string(detail::get_or<std::string>(a, "variant", "garch"));
  c.aux.log_lag = detail::get_or<bool>(a, "log_lag", true);
  const auto& o = detail::section(j, "optimizer");
  c.optimizer.method = detail::get_or<std::string>(o, "method", c.optimizer.method);
  c.optimizer.max_evals = detail::get_or<std::size_t>(o, "max_evals", c.optimizer.max_evals);
  c.optimizer.tol = detail::get_or<double>(o, "tol", c.optimizer.tol);
  c.optimizer.restarts = detail::get_or<std::size_t>(o, "restarts", c.optimizer.restarts);
  c.optimizer.screen_budget = detail::get_or<std::size_t>(o, "screen_budget", c.optimizer.screen_budget);
  c.optimizer.initial_step = detail::get_or<double>(o, "initial_step", c.optimizer.initial_step);
  detail::require(c.optimizer.tol > 0.0, "config: optimizer.tol must be positive");
  detail::require(c.optimizer.max_evals >= 1, "config: optimizer.max_evals must be >= 1");
  c.sim_seed = detail::get_or<std::uint64_t>(detail::section(j, "simulation"), "seed", 1);
  return c;
}

inline nlohmann::ordered_json to_json(const EstimationConfig& c) {
  nlohmann::ordered_json j;
  j["model"]["kind"] = to_string(c.model.kind);
  j["model"]["n"] = c.model.n;
  j["model"]["S"] = c.model.S;
  j["model"]["lags"] = c.model.lags;
  j["model"]["burn_in"] = c.model.burn_in;
  j["model"]["long_sample"] = c.model.long_sample;
  if (c.model.is_panel())
    j["model"]["panel"] = {{"units", c.model.panel.units}, {"T", c.model.panel.T}, {"burn_in", c.model.panel.burn_in}};
  const auto bound = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(); };
  for (const auto& p : c.model.theta)
    j["model"]["parameters"][p.name] = {{"value", p.value}, {"lower", bound(p.lower)}, {"upper", bound(p.upper)}, {"fixed", p.fixed}};
  j["mixture"] = {{"k", c.mixture.k},
                  {"mean_zero", c.mixture.flags.mean_zero},
                  {"unit_variance", c.mixture.flags.unit_variance},
                  {"tails", c.mixture.flags.tails},
                  {"floor_c", c.mixture.floor_c},
                  {"floor_b", c.mixture.floor_b},
                  {"location_multiplier", c.mixture.location_multiplier},
                  {"xi_max", c.mixture.xi_max}};
  j["grid"] = {{"m", c.grid.m}, {"generator", to_string(c.grid.generator)}, {"seed", c.grid.seed},
               {"scale_mode", to_string(c.grid.scale_mode)}};
  j["aux"] = {{"enabled", c.aux.enabled}, {"variant", to_string(c.aux.variant)}, {"log_lag", c.aux.log_lag}};
  j["optimizer"] = {{"method", c.optimizer.method},     {"max_evals", c.optimizer.max_evals},
                    {"tol", c.optimizer.tol},           {"restarts", c.optimizer.restarts},
                    {"screen_budget", c.optimizer.screen_budget}, {"initial_step", c.optimizer.initial_step}};
  j["simulation"] = {{"seed", c.sim_seed}};
  return j;
}

} // namespace sievesmm
