#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sievesmm/cf.hpp"
#include "sievesmm/errors.hpp"
#include "sievesmm/estimator.hpp"
#include "sievesmm/parallel.hpp"
#include "sievesmm/random.hpp"

namespace sievesmm {

// Derivatives of psi^S with respect to the free coordinates, rows (Re psi_1..Re psi_m,
// Im psi_1..Im psi_m).
struct MomentJacobian {
  std::size_t m = 0;
  std::size_t p = 0;
  Eigen::MatrixXd G;
  std::vector<double> steps;
  std::vector<bool> one_sided;
  std::vector<std::string> names;
};

struct JacobianOptions {
  double rel_step = 1e-5;
  double min_step = 1e-5;
  // Step for softmax weight coordinates: the simulated sample depends on them only through
  // component selection, so psi^S is a step function there and needs a wide difference.
  double weight_step = 0.05;
  double scale = 1.0; // multiplies every step (scale 0.1 gives the h/10 Jacobian)
  unsigned threads = 0;
};

namespace detail {

inline Eigen::VectorXd stack_re_im(const cvector& v) {
  const auto m = static_cast<Eigen::Index>(v.size());
  Eigen::VectorXd out(2 * m);
  for (Eigen::Index l = 0; l < m; ++l) {
    out[l] = v[static_cast<std::size_t>(l)].real();
    out[m + l] = v[static_cast<std::size_t>(l)].imag();
  }
  return out;
}

inline std::vector<bool> weight_mask(const ObjectiveContext& ctx) {
  std::vector<bool> mask(ctx.layout.size, false);
  for (std::size_t j : raw_weight_coordinates(ctx.config.mixture)) mask[ctx.layout.mixture_offset + j] = true;
  return mask;
}

inline bool is_parameter_error(const std::exception& e) {
  return dynamic_cast<const degenerate_error*>(&e) || dynamic_cast<const validation_error*>(&e) ||
         dynamic_cast<const domain_error*>(&e) || dynamic_cast<const numeric_error*>(&e);
}

// Gram matrix G' W G with W the grid weights repeated for the Re and Im blocks.
inline Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& G, std::span<const double> w) {
  const auto m = static_cast<Eigen::Index>(w.size());
  detail::require(G.rows() == 2 * m, "weighted_gram: G must have 2m rows");
  Eigen::VectorXd ww(2 * m);
  for (Eigen::Index l = 0; l < m; ++l) ww[l] = ww[m + l] = w[static_cast<std::size_t>(l)];
  Eigen::MatrixXd A = G.transpose() * ww.asDiagonal() * G;
  return 0.5 * (A + A.transpose());
}

} // namespace detail

// Central differences of psi^S under the context's frozen draws; a column whose forward
// or backward point is invalid falls back to a one-sided difference and is flagged.
[[nodiscard]] inline MomentJacobian moment_jacobian(std::span<const double> raw, const ObjectiveContext& ctx,
                                                    const JacobianOptions& opt = {}) {
  detail::require(raw.size() == ctx.layout.size, "moment_jacobian: wrong parameter vector length");
  detail::require(opt.rel_step > 0.0 && opt.min_step > 0.0 && opt.weight_step > 0.0 && opt.scale > 0.0,
                  "moment_jacobian: steps must be positive");
  MomentJacobian J;
  J.m = ctx.grid.m;
  J.p = raw.size();
  J.names = ctx.layout.names;
  J.G.resize(static_cast<Eigen::Index>(2 * J.m), static_cast<Eigen::Index>(J.p));
  J.steps.resize(J.p);
  J.one_sided.assign(J.p, false);
  const auto mask = detail::weight_mask(ctx);
  const Eigen::VectorXd base = detail::stack_re_im(simulated_cf(raw, ctx));
  std::vector<char> one(J.p, 0);
  parallel_for(
      J.p,
      [&](std::size_t j) {
        const double h = opt.scale * (mask[j] ? opt.weight_step : std::max(opt.min_step, opt.rel_step * std::abs(raw[j])));
        J.steps[j] = h;
        std::vector<double> xp(raw.begin(), raw.end()), xm(raw.begin(), raw.end());
        xp[j] += h;
        xm[j] -= h;
        const auto eval = [&](const std::vector<double>& x, Eigen::VectorXd& out) {
          try {
            out = detail::stack_re_im(simulated_cf(x, ctx));
            return true;
          } catch (const std::exception& e) {
            if (!detail::is_parameter_error(e)) throw;
            return false;
          }
        };
        Eigen::VectorXd fp, fm;
        const bool okp = eval(xp, fp), okm = eval(xm, fm);
        Eigen::VectorXd col;
        if (okp && okm) col = (fp - fm) / (2.0 * h);
        else if (okp) col = (fp - base) / h;
        else if (okm) col = (base - fm) / h;
        else throw numeric_error("moment_jacobian: parameter " + J.names[j] + " invalid on both sides of the estimate");
        if (!(okp && okm)) one[j] = 1;
        J.G.col(static_cast<Eigen::Index>(j)) = col;
      },
      opt.threads);
  for (std::size_t j = 0; j < J.p; ++j) J.one_sided[j] = one[j] != 0;
  return J;
}

struct IllPosednessReport {
  double lambda_min = 0.0;      // mixture columns (or all columns if none given)
  double lambda_min_full = 0.0; // all columns
  double tv_bound = std::numeric_limits<double>::infinity();
  double sup_bound = std::numeric_limits<double>::infinity();
  double floor = 0.0;
  bool ill_posed = false;
  std::vector<std::string> warnings;
};

namespace detail {

// Smallest eigenvalue of a symmetric matrix, set to 0 when below rel_tol times the largest.
inline double smallest_eigenvalue(const Eigen::MatrixXd& A, double rel_tol, bool& zero) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw numeric_error("eigen-decomposition failed");
  const auto& ev = es.eigenvalues();
  const double top = std::max(std::abs(ev[ev.size() - 1]), std::numeric_limits<double>::min());
  zero = ev[0] <= rel_tol * top;
  return zero ? 0.0 : ev[0];
}

} // namespace detail

// lambda_min of G'WG restricted to `columns` (all when empty); TV bound lambda^(-1/2)/floor
// and sup-norm bound TV/floor.
[[nodiscard]] inline IllPosednessReport illposedness_diagnostic(const Eigen::MatrixXd& G, std::span<const double> w,
                                                                double floor, std::span<const std::size_t> columns = {},
                                                                double rel_tol = 1e-10) {
  detail::require(floor > 0.0, "illposedness_diagnostic: floor must be positive");
  detail::require(G.allFinite(), "illposedness_diagnostic: G has non-finite entries");
  detail::require(G.cols() >= 1, "illposedness_diagnostic: G has no columns");
  const Eigen::MatrixXd A = detail::weighted_gram(G, w);
  IllPosednessReport r;
  r.floor = floor;
  bool zero_full = false, zero = false;
  r.lambda_min_full = detail::smallest_eigenvalue(A, rel_tol, zero_full);
  if (columns.empty()) {
    r.lambda_min = r.lambda_min_full;
    zero = zero_full;
  } else {
    const auto k = static_cast<Eigen::Index>(columns.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) {
        detail::require(columns[static_cast<std::size_t>(a)] < static_cast<std::size_t>(G.cols()),
                        "illposedness_diagnostic: column index out of range");
        sub(a, b) = A(static_cast<Eigen::Index>(columns[static_cast<std::size_t>(a)]),
                      static_cast<Eigen::Index>(columns[static_cast<std::size_t>(b)]));
      }
    r.lambda_min = detail::smallest_eigenvalue(sub, rel_tol, zero);
  }
  if (zero) {
    r.ill_posed = true;
    r.warnings.push_back("smallest eigenvalue is zero within tolerance: the mixture is not locally identified by the CF grid");
  } else {
    r.tv_bound = 1.0 / (std::sqrt(r.lambda_min) * floor);
    r.sup_bound = r.tv_bound / floor;
  }
  if (zero_full && !zero) r.warnings.push_back("full-parameter Gram matrix is singular within tolerance");
  return r;
}

// Mixture columns of the layout (the ill-posedness diagnostic restricts to these).
[[nodiscard]] inline std::vector<std::size_t> mixture_columns(const ParameterLayout& L) {
  std::vector<std::size_t> c;
  for (std::size_t j = L.mixture_offset; j < L.size; ++j) c.push_back(j);
  return c;
}

// Starting indices of overlapping blocks covering `count` items: blocks of `len` begin
// uniformly in [0, count - len] and are concatenated then truncated.
[[nodiscard]] inline std::vector<std::size_t> block_bootstrap_indices(std::size_t count, std::size_t len, RngStream& g) {
  detail::require(count >= 1, "block bootstrap: nothing to resample");
  detail::require(len >= 1 && len <= count, "block bootstrap: block length must lie in [1, count]");
  std::vector<std::size_t> idx;
  idx.reserve(count + len);
  const std::size_t starts = count - len + 1;
  while (idx.size() < count) {
    const auto s = static_cast<std::size_t>(g.below(starts));
    for (std::size_t i = 0; i < len && idx.size() < count; ++i) idx.push_back(s + i);
  }
  return idx;
}

// Bootstrap standard error of a statistic of a series (iid when len = 1).
template <class Stat>
[[nodiscard]] double block_bootstrap_statistic_se(std::span<const double> x, Stat&& stat, std::size_t B,
                                                  std::size_t len, std::uint64_t seed) {
  detail::require(B >= 2, "block bootstrap: B must be >= 2");
  std::vector<double> v(B), buf(x.size());
  for (std::size_t b = 0; b < B; ++b) {
    RngStream g(derive_seed(seed, b), 0);
    const auto idx = block_bootstrap_indices(x.size(), len, g);
    for (std::size_t i = 0; i < idx.size(); ++i) buf[i] = x[idx[i]];
    v[b] = stat(std::span<const double>(buf));
  }
  double m = 0.0;
  for (double a : v) m += a;
  m /= static_cast<double>(B);
  double ss = 0.0;
  for (double a : v) ss += (a - m) * (a - m);
  return std::sqrt(ss / static_cast<double>(B - 1));
}

struct BootstrapOptions {
  std::size_t B = 200;
  std::size_t block_len = 0; // 0: ceil(count^(1/3)) for time series, 1 for panels (units are iid)
  std::uint64_t seed = 1;
  double pinv_condition = 1e12; // condition number beyond which D uses the pseudo-inverse
  unsigned threads = 0;
};

struct BootstrapReport {
  std::vector<std::string> raw_names;
  std::vector<double> raw_se;
  std::vector<std::string> theta_names;
  std::vector<double> theta;
  std::vector<double> theta_se; // NaN for fixed parameters
  Eigen::MatrixXd D;            // (G'WG)^-1
  Eigen::MatrixXd Omega;        // covariance of the bootstrap scores
  Eigen::MatrixXd V;            // D Omega D, covariance of the raw estimate
  std::size_t B = 0;
  std::size_t block_len = 0;
  std::uint64_t seed = 0;
  double condition = 0.0;
  bool pseudo_inverse = false;
  std::vector<std::string> warnings;
};

[[nodiscard]] inline std::size_t default_block_length(std::size_t count) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(count)))));
}

// Block bootstrap of the score G'W(psi_n,b - psi^S_b(beta)) with beta held fixed: each
// replicate resamples blocks of embedded observations (whole units for panels) and redraws
// the simulation randomness with seed derive_seed(seed, b).
[[nodiscard]] inline BootstrapReport block_bootstrap_se(std::span<const double> raw, const ObjectiveContext& ctx,
                                                        const MomentJacobian& J, const BootstrapOptions& opt = {}) {
  if (opt.B == 0) throw validation_error("block_bootstrap_se: B must be >= 1");
  detail::require(opt.B >= 2, "block_bootstrap_se: B must be >= 2 to estimate a covariance");
  detail::require(J.p == raw.size() && J.m == ctx.grid.m, "block_bootstrap_se: Jacobian does not match the problem");
  const std::size_t groups = ctx.data_embedding.rows / ctx.rows_per_group;
  const std::size_t len =
      opt.block_len ? opt.block_len : (ctx.config.model.is_panel() ? 1 : default_block_length(groups));
  detail::require(len >= 1 && len < std::max<std::size_t>(groups, 2), "block_bootstrap_se: need 1 <= block_len < n");

  BootstrapReport rep;
  rep.B = opt.B;
  rep.block_len = len;
  rep.seed = opt.seed;
  rep.raw_names = ctx.layout.names;

  const auto p = static_cast<Eigen::Index>(J.p);
  const auto m = static_cast<Eigen::Index>(J.m);
  Eigen::VectorXd ww(2 * m);
  for (Eigen::Index l = 0; l < m; ++l) ww[l] = ww[m + l] = ctx.grid.weights[static_cast<std::size_t>(l)];
  const Eigen::MatrixXd GW = J.G.transpose() * ww.asDiagonal();
  const auto decoded = decode(raw, ctx);

  Eigen::MatrixXd scores(p, static_cast<Eigen::Index>(opt.B));
  parallel_for(
      opt.B,
      [&](std::size_t b) {
        RngStream g(derive_seed(opt.seed, 2 * b), 0);
        const auto gidx = block_bootstrap_indices(groups, len, g);
        std::vector<std::size_t> rows;
        rows.reserve(groups * ctx.rows_per_group);
        for (std::size_t gi : gidx)
          for (std::size_t i = 0; i < ctx.rows_per_group; ++i) rows.push_back(gi * ctx.rows_per_group + i);
        const auto psi_n = empirical_cf(select_rows(ctx.data_embedding, rows), ctx.grid, 1);
        const auto draws = draw_base(ctx.config.model, ctx.config.mixture.k, derive_seed(opt.seed, 2 * b + 1));
        const auto psi_s = empirical_cf(simulated_embedding(decoded, ctx, draws), ctx.grid, 1);
        cvector diff(psi_n.size());
        for (std::size_t l = 0; l < diff.size(); ++l) diff[l] = psi_n[l] - psi_s[l];
        scores.col(static_cast<Eigen::Index>(b)) = GW * detail::stack_re_im(diff);
      },
      opt.threads);

  const Eigen::VectorXd mean = scores.rowwise().mean();
  const Eigen::MatrixXd centered = scores.colwise() - mean;
  rep.Omega = centered * centered.transpose() / static_cast<double>(opt.B - 1);

  const Eigen::MatrixXd A = detail::weighted_gram(J.G, ctx.grid.weights);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) throw numeric_error("block_bootstrap_se: eigen-decomposition of G'WG failed");
  const Eigen::VectorXd ev = es.eigenvalues();
  const double top = std::max(ev[p - 1], std::numeric_limits<double>::min());
  rep.condition = ev[0] > 0.0 ? top / ev[0] : std::numeric_limits<double>::infinity();
  Eigen::VectorXd inv(p);
  if (!(rep.condition < opt.pinv_condition)) {
    rep.pseudo_inverse = true;
    rep.warnings.push_back("G'WG is near singular (condition " + std::to_string(rep.condition) +
                           "); using the pseudo-inverse");
    for (Eigen::Index i = 0; i < p; ++i) inv[i] = ev[i] > top / opt.pinv_condition ? 1.0 / ev[i] : 0.0;
  } else {
    inv = ev.cwiseInverse();
  }
  rep.D = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  rep.V = rep.D * rep.Omega * rep.D;
  rep.V = 0.5 * (rep.V + rep.V.transpose());

  rep.raw_se.resize(J.p);
  for (std::size_t j = 0; j < J.p; ++j)
    rep.raw_se[j] = std::sqrt(std::max(0.0, rep.V(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j))));

  const auto& model = ctx.config.model;
  rep.theta = decoded.theta;
  rep.theta_se.assign(model.theta.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < model.theta.size(); ++i) rep.theta_names.push_back(model.theta[i].name);
  for (std::size_t a = 0; a < ctx.layout.free_theta.size(); ++a) {
    const auto& ps = model.theta[ctx.layout.free_theta[a]];
    rep.theta_se[ctx.layout.free_theta[a]] = std::abs(detail::bounded_slope(raw[a], ps.lower, ps.upper)) * rep.raw_se[a];
  }
  return rep;
}

// Delta-method standard error of phi(beta): sqrt(dphi' D Omega D dphi), dphi taken with
// respect to the free coordinates.
[[nodiscard]] inline double functional_se(const BootstrapReport& rep, std::span<const double> dphi) {
  detail::require(static_cast<Eigen::Index>(dphi.size()) == rep.V.rows(),
                  "functional_se: gradient length does not match the parameter count");
  const Eigen::Map<const Eigen::VectorXd> g(dphi.data(), static_cast<Eigen::Index>(dphi.size()));
  return std::sqrt(std::max(0.0, g.dot(rep.V * g)));
}

// Gradient of a functional of the decoded parameters with respect to the free coordinates
// (central differences, same step rule as the moment Jacobian).
template <class Phi>
[[nodiscard]] std::vector<double> functional_gradient(Phi&& phi, std::span<const double> raw, const ObjectiveContext& ctx,
                                                      const JacobianOptions& opt = {}) {
  const auto mask = detail::weight_mask(ctx);
  std::vector<double> g(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    const double h = opt.scale * (mask[j] ? opt.weight_step : std::max(opt.min_step, opt.rel_step * std::abs(raw[j])));
    std::vector<double> xp(raw.begin(), raw.end()), xm(raw.begin(), raw.end());
    xp[j] += h;
    xm[j] -= h;
    g[j] = (phi(decode(xp, ctx)) - phi(decode(xm, ctx))) / (2.0 * h);
  }
  return g;
}

inline nlohmann::ordered_json to_json(const BootstrapReport& rep, const IllPosednessReport& ill) {
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(); };
  nlohmann::ordered_json j;
  nlohmann::ordered_json se;
  for (std::size_t i = 0; i < rep.theta_names.size(); ++i)
    if (std::isfinite(rep.theta_se[i])) se[rep.theta_names[i]] = rep.theta_se[i];
  j["se"] = se;
  nlohmann::ordered_json raw;
  for (std::size_t i = 0; i < rep.raw_names.size(); ++i) raw[rep.raw_names[i]] = rep.raw_se[i];
  j["raw_se"] = raw;
  j["lambda_min"] = ill.lambda_min;
  j["lambda_min_full"] = ill.lambda_min_full;
  j["tv_bound"] = num(ill.tv_bound);
  j["sup_bound"] = num(ill.sup_bound);
  j["floor"] = ill.floor;
  j["B"] = rep.B;
  j["block_len"] = rep.block_len;
  j["seeds"] = {{"bootstrap", rep.seed}};
  j["condition"] = num(rep.condition);
  j["pseudo_inverse"] = rep.pseudo_inverse;
  auto w = rep.warnings;
  w.insert(w.end(), ill.warnings.begin(), ill.warnings.end());
  j["warnings"] = w;
  return j;
}

} // namespace sievesmm
