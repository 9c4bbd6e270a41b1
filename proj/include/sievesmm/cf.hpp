#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sievesmm/detail/sincos.hpp"
#include "sievesmm/errors.hpp"
#include "sievesmm/parallel.hpp"
#include "sievesmm/qmc.hpp"

namespace sievesmm {

using cvector = std::vector<std::complex<double>>;

// Affine map applied to the Box-Muller normals: tau_c = mean_c + sd_c * z_c.
struct GridScale {
  std::vector<double> mean;
  std::vector<double> sd;
};

// Frequency grid: m points in R^d (row-major) with integration weights.
struct CFGrid {
  QmcGenerator generator = QmcGenerator::sobol;
  std::size_t m = 0;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  GridScale scale;
  std::vector<double> points;
  std::vector<double> weights;

  [[nodiscard]] double tau(std::size_t l, std::size_t c) const { return points[l * d + c]; }
};

[[nodiscard]] inline CFGrid build_cf_grid(std::size_t m, std::size_t d, QmcGenerator gen, std::uint64_t seed,
                                          GridScale scale) {
  detail::require(m >= 1, "build_cf_grid: m must be >= 1");
  detail::require(d >= 1, "build_cf_grid: d must be >= 1");
  detail::require(scale.mean.size() == d && scale.sd.size() == d, "build_cf_grid: scale must have d entries");
  for (std::size_t c = 0; c < d; ++c) {
    detail::require(std::isfinite(scale.mean[c]), "build_cf_grid: non-finite scale mean");
    detail::require(scale.sd[c] > 0.0 && std::isfinite(scale.sd[c]), "build_cf_grid: scale sd must be positive");
  }
  const std::size_t pairs = (d + 1) / 2;
  const auto u = qmc_points(gen, m, 2 * pairs, seed);
  CFGrid g;
  g.generator = gen;
  g.m = m;
  g.d = d;
  g.seed = seed;
  g.points.resize(m * d);
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t q = 0; q < pairs; ++q) {
      const double u1 = u[l * 2 * pairs + 2 * q], u2 = u[l * 2 * pairs + 2 * q + 1];
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double a = 2.0 * std::numbers::pi * u2;
      const std::size_t c0 = 2 * q, c1 = 2 * q + 1;
      g.points[l * d + c0] = scale.mean[c0] + scale.sd[c0] * r * std::cos(a);
      if (c1 < d) g.points[l * d + c1] = scale.mean[c1] + scale.sd[c1] * r * std::sin(a);
    }
  }
  g.weights.assign(m, 1.0 / static_cast<double>(m));
  g.scale = std::move(scale);
  return g;
}

// Weights multiplied by c (used to check scale coherence of the objective).
[[nodiscard]] inline CFGrid rescale_weights(CFGrid g, double c) {
  for (double& w : g.weights) w *= c;
  return g;
}

inline nlohmann::ordered_json grid_descriptor(const CFGrid& g) {
  nlohmann::ordered_json j;
  j["generator"] = to_string(g.generator);
  j["m"] = g.m;
  j["d"] = g.d;
  j["seed"] = g.seed;
  j["scale"] = {{"mean", g.scale.mean}, {"sd", g.scale.sd}};
  return j;
}

[[nodiscard]] inline CFGrid grid_from_descriptor(const nlohmann::ordered_json& j) {
  GridScale s{j.at("scale").at("mean").get<std::vector<double>>(), j.at("scale").at("sd").get<std::vector<double>>()};
  return build_cf_grid(j.at("m").get<std::size_t>(), j.at("d").get<std::size_t>(),
                       qmc_generator_from_string(j.at("generator").get<std::string>()),
                       j.at("seed").get<std::uint64_t>(), std::move(s));
}

// Lag-embedded observations stored column-major: value(t, c) = data[c * rows + t].
struct EmbeddedSeries {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::size_t lags = 0;
  std::vector<double> data;

  [[nodiscard]] double at(std::size_t t, std::size_t c) const { return data[c * rows + t]; }
  [[nodiscard]] std::span<const double> column(std::size_t c) const { return {data.data() + c * rows, rows}; }
  [[nodiscard]] std::vector<double> row(std::size_t t) const {
    std::vector<double> r(dim);
    for (std::size_t c = 0; c < dim; ++c) r[c] = at(t, c);
    return r;
  }
};

enum class ColumnTransform { identity, log };

// One embedded coordinate: series index, lag, optional transform.
struct EmbedColumn {
  std::size_t series = 0;
  std::size_t lag = 0;
  ColumnTransform transform = ColumnTransform::identity;
};

// Default layout (y_t..y_{t-L}, x_t..x_{t-L}, ...) for the given number of series.
[[nodiscard]] inline std::vector<EmbedColumn> default_columns(std::size_t n_series, std::size_t L) {
  std::vector<EmbedColumn> cols;
  for (std::size_t s = 0; s < n_series; ++s)
    for (std::size_t l = 0; l <= L; ++l) cols.push_back({s, l, ColumnTransform::identity});
  return cols;
}

// Largest lag referenced by a column layout.
[[nodiscard]] inline std::size_t max_lag(std::span<const EmbedColumn> columns) {
  std::size_t L = 0;
  for (const auto& c : columns) L = std::max(L, c.lag);
  return L;
}

// Writes the embedding of equal-length series into rows [offset, offset + n - L) of a
// pre-sized `out` and returns the number of rows written.
inline std::size_t embed_into(EmbeddedSeries& out, std::size_t offset, std::span<const std::span<const double>> series,
                              std::span<const EmbedColumn> columns) {
  const std::size_t n = series.empty() ? 0 : series[0].size();
  const std::size_t L = max_lag(columns);
  const std::size_t add = n - L;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& col = columns[c];
    const double* src = series[col.series].data() + (L - col.lag);
    double* dst = out.data.data() + c * out.rows + offset;
    if (col.transform == ColumnTransform::log)
      for (std::size_t t = 0; t < add; ++t) dst[t] = std::log(src[t]);
    else
      std::copy_n(src, add, dst);
  }
  return add;
}

// Appends the embedding of equal-length series to `out` (which must already have
// `dim` equal to columns.size()); rows run over t = maxlag..n-1.
inline void append_embedding(EmbeddedSeries& out, std::span<const std::span<const double>> series,
                             std::span<const EmbedColumn> columns) {
  detail::require(!series.empty(), "lag_embed: no series given");
  const std::size_t n = series[0].size();
  for (const auto& s : series) detail::require(s.size() == n, "lag_embed: series lengths differ");
  std::size_t L = 0;
  for (const auto& c : columns) {
    detail::require(c.series < series.size(), "lag_embed: column refers to a missing series");
    L = std::max(L, c.lag);
  }
  detail::require(L < n, "lag_embed: lag count must be smaller than the series length");
  const std::size_t add = n - L;
  const std::size_t old_rows = out.rows;
  const std::size_t new_rows = old_rows + add;
  std::vector<double> data(new_rows * columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (old_rows > 0) std::copy_n(out.data.begin() + static_cast<std::ptrdiff_t>(c * old_rows), old_rows,
                                  data.begin() + static_cast<std::ptrdiff_t>(c * new_rows));
    const auto& col = columns[c];
    const auto src = series[col.series];
    double* dst = data.data() + c * new_rows + old_rows;
    for (std::size_t t = 0; t < add; ++t) {
      const double v = src[t + L - col.lag];
      dst[t] = col.transform == ColumnTransform::log ? std::log(v) : v;
    }
  }
  out.data = std::move(data);
  out.rows = new_rows;
  out.dim = columns.size();
  out.lags = std::max(out.lags, L);
}

[[nodiscard]] inline EmbeddedSeries lag_embed(std::span<const std::span<const double>> series,
                                              std::span<const EmbedColumn> columns) {
  EmbeddedSeries e;
  e.dim = columns.size();
  append_embedding(e, series, columns);
  return e;
}

[[nodiscard]] inline EmbeddedSeries lag_embed(const std::vector<std::vector<double>>& series, std::size_t L) {
  std::vector<std::span<const double>> views(series.begin(), series.end());
  const auto cols = default_columns(series.size(), L);
  return lag_embed(views, cols);
}

// Rows selected (with repetition) from an embedding, in the given order.
[[nodiscard]] inline EmbeddedSeries select_rows(const EmbeddedSeries& e, std::span<const std::size_t> idx) {
  EmbeddedSeries out;
  out.rows = idx.size();
  out.dim = e.dim;
  out.lags = e.lags;
  out.data.resize(out.rows * out.dim);
  for (std::size_t c = 0; c < e.dim; ++c)
    for (std::size_t t = 0; t < idx.size(); ++t) out.data[c * out.rows + t] = e.at(idx[t], c);
  return out;
}

// Column means and standard deviations of an embedding.
[[nodiscard]] inline GridScale embedding_moments(const EmbeddedSeries& e) {
  detail::require(e.rows >= 2, "embedding_moments: need at least two rows");
  GridScale s;
  for (std::size_t c = 0; c < e.dim; ++c) {
    const auto col = e.column(c);
    double m = 0.0;
    for (double v : col) m += v;
    m /= static_cast<double>(e.rows);
    double v2 = 0.0;
    for (double v : col) v2 += (v - m) * (v - m);
    s.mean.push_back(m);
    s.sd.push_back(std::sqrt(v2 / static_cast<double>(e.rows - 1)));
  }
  return s;
}

// How the weighting density is tied to the data.
//  matched:  tau ~ N(mean, var) of the embedded data.
//  inverse:  tau ~ N(0, 1/var), i.e. the matched Gaussian weighting applied to the
//            standardized data (the location only adds a phase that cancels in |.|^2).
enum class GridScaleMode { matched, inverse };

inline std::string to_string(GridScaleMode m) { return m == GridScaleMode::matched ? "matched" : "inverse"; }

inline GridScaleMode grid_scale_mode_from_string(const std::string& s) {
  if (s == "matched") return GridScaleMode::matched;
  if (s == "inverse") return GridScaleMode::inverse;
  throw validation_error("unknown grid scale mode '" + s + "' (expected matched or inverse)");
}

[[nodiscard]] inline GridScale grid_scale_for(const EmbeddedSeries& e, GridScaleMode mode) {
  GridScale s = embedding_moments(e);
  for (double sd : s.sd)
    if (!(sd > 0.0)) throw degenerate_error("grid scale: embedded data has a constant column");
  if (mode == GridScaleMode::inverse) {
    for (std::size_t c = 0; c < s.sd.size(); ++c) {
      s.mean[c] = 0.0;
      s.sd[c] = 1.0 / s.sd[c];
    }
  }
  return s;
}

namespace detail {

inline constexpr std::size_t cf_chunk = 512;

// Sum of cos and sin of phases over a chunk, in eight fixed lanes.
inline void accumulate_sincos(const double* ph, std::size_t len, double& cs, double& ss) {
  double ac[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  double as[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t t = 0;
  for (; t + 8 <= len; t += 8)
    for (std::size_t u = 0; u < 8; ++u) {
      double s, c;
      sincos_fast(ph[t + u], s, c);
      ac[u] += c;
      as[u] += s;
    }
  for (std::size_t u = 0; t < len; ++t, ++u) {
    double s, c;
    sincos_fast(ph[t], s, c);
    ac[u] += c;
    as[u] += s;
  }
  cs = ((ac[0] + ac[1]) + (ac[2] + ac[3])) + ((ac[4] + ac[5]) + (ac[6] + ac[7]));
  ss = ((as[0] + as[1]) + (as[2] + as[3])) + ((as[4] + as[5]) + (as[6] + as[7]));
}

} // namespace detail

// psi(tau_l) = mean_t exp(i tau_l . row_t). Grid points are split across workers and
// every point is summed in the same chunk order, so the result is thread-count invariant.
[[nodiscard]] inline cvector empirical_cf(const EmbeddedSeries& data, const CFGrid& grid, unsigned threads = 0) {
  detail::require(data.dim == grid.d, "empirical_cf: data dimension does not match grid dimension");
  detail::require(data.rows >= 1, "empirical_cf: no rows");
  cvector out(grid.m);
  const std::size_t n = data.rows, d = data.dim;
  const std::size_t blocks = (grid.m + 31) / 32;
  parallel_for(
      blocks,
      [&](std::size_t b) {
        const std::size_t l0 = b * 32, l1 = std::min(grid.m, l0 + 32);
        std::vector<double> re(l1 - l0, 0.0), im(l1 - l0, 0.0);
        alignas(64) double ph[detail::cf_chunk];
        for (std::size_t t0 = 0; t0 < n; t0 += detail::cf_chunk) {
          const std::size_t len = std::min(detail::cf_chunk, n - t0);
          for (std::size_t l = l0; l < l1; ++l) {
            const double* tau = grid.points.data() + l * d;
            const double* c0 = data.data.data() + t0;
            for (std::size_t t = 0; t < len; ++t) ph[t] = tau[0] * c0[t];
            for (std::size_t c = 1; c < d; ++c) {
              const double tc = tau[c];
              const double* col = data.data.data() + c * n + t0;
              for (std::size_t t = 0; t < len; ++t) ph[t] += tc * col[t];
            }
            double cs, ss;
            detail::accumulate_sincos(ph, len, cs, ss);
            re[l - l0] += cs;
            im[l - l0] += ss;
          }
        }
        const auto dn = static_cast<double>(n);
        for (std::size_t l = l0; l < l1; ++l) out[l] = {re[l - l0] / dn, im[l - l0] / dn};
      },
      threads);
  return out;
}

// Weighted squared distance sum_l w_l |a_l - b_l|^2.
[[nodiscard]] inline double cf_distance(std::span<const std::complex<double>> a, std::span<const std::complex<double>> b,
                                        std::span<const double> w) {
  detail::require(a.size() == b.size() && a.size() == w.size(), "cf_distance: length mismatch");
  double q = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) q += w[l] * std::norm(a[l] - b[l]);
  return q;
}

} // namespace sievesmm
