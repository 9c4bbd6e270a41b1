#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "sievesmm/errors.hpp"
#include "sievesmm/qmc.hpp"

namespace sievesmm {

struct NelderMeadOptions {
  double tol = 1e-8;            // stop when max f - min f over the simplex falls below tol
  std::size_t max_evals = 2000; // across all restarts
  std::size_t restarts = 0;     // fresh simplices built around the incumbent
  double initial_step = 0.5;    // used where `steps` is empty
  std::vector<double> steps;    // per-coordinate initial simplex offsets
};

struct OptimResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  std::vector<double> trace;                 // best value after every iteration
  std::vector<std::vector<double>> accepted; // best vertex after every iteration
  std::size_t evals = 0;
  std::size_t iterations = 0;
  bool converged = false;
  double spread = std::numeric_limits<double>::infinity(); // final simplex f-spread
};

namespace detail {

struct Vertex {
  std::vector<double> x;
  double f;
  std::size_t id; // insertion order, breaks ties
};

inline bool vertex_less(const Vertex& a, const Vertex& b) {
  if (a.f < b.f) return true;
  if (b.f < a.f) return false;
  return a.id < b.id;
}

} // namespace detail

// Standard Nelder-Mead simplex (reflection 1, expansion 2, contraction 0.5, shrink 0.5).
template <class F>
OptimResult nelder_mead(F&& f, std::vector<double> x0, const NelderMeadOptions& opt = {}) {
  const std::size_t n = x0.size();
  detail::require(n >= 1, "nelder_mead: empty starting point");
  for (double v : x0) detail::require(std::isfinite(v), "nelder_mead: non-finite starting point");
  detail::require(opt.tol >= 0.0, "nelder_mead: tolerance must be nonnegative");
  detail::require(opt.steps.empty() || opt.steps.size() == n, "nelder_mead: steps must match dimension");

  OptimResult res;
  std::size_t next_id = 0;
  const auto eval = [&](const std::vector<double>& x) {
    ++res.evals;
    const double v = f(std::span<const double>(x));
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  double f0 = eval(x0);
  if (!std::isfinite(f0)) throw validation_error("nelder_mead: objective is infinite at the starting point");
  res.x = x0;
  res.f = f0;

  for (std::size_t round = 0; round <= opt.restarts; ++round) {
    if (res.evals >= opt.max_evals) break;
    const double f_start = res.f;
    std::vector<detail::Vertex> sx;
    sx.push_back({res.x, res.f, next_id++});
    for (std::size_t i = 0; i < n && res.evals < opt.max_evals; ++i) {
      auto x = res.x;
      const double h = opt.steps.empty() ? opt.initial_step : opt.steps[i];
      x[i] += h;
      sx.push_back({x, eval(x), next_id++});
    }
    if (sx.size() < n + 1) break;

    bool converged = false;
    while (true) {
      std::stable_sort(sx.begin(), sx.end(), detail::vertex_less);
      res.spread = sx.back().f - sx.front().f;
      if (sx.front().f <= res.f) {
        res.f = sx.front().f;
        res.x = sx.front().x;
      }
      if (std::isfinite(res.spread) && res.spread <= opt.tol) {
        converged = true;
        break;
      }
      if (res.evals >= opt.max_evals) break;

      std::vector<double> c(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) c[j] += sx[i].x[j];
      for (double& v : c) v /= static_cast<double>(n);
      const auto along = [&](double t) {
        std::vector<double> x(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = c[j] + t * (sx[n].x[j] - c[j]);
        return x;
      };

      auto xr = along(-1.0);
      const double fr = eval(xr);
      bool shrink = false;
      if (fr < sx[0].f) {
        auto xe = along(-2.0);
        const double fe = eval(xe);
        if (fe < fr) sx[n] = {std::move(xe), fe, next_id++};
        else sx[n] = {std::move(xr), fr, next_id++};
      } else if (fr < sx[n - 1].f) {
        sx[n] = {std::move(xr), fr, next_id++};
      } else if (fr < sx[n].f) {
        auto xc = along(-0.5);
        const double fc = eval(xc);
        if (fc <= fr) sx[n] = {std::move(xc), fc, next_id++};
        else shrink = true;
      } else {
        auto xc = along(0.5);
        const double fc = eval(xc);
        if (fc < sx[n].f) sx[n] = {std::move(xc), fc, next_id++};
        else shrink = true;
      }
      if (shrink) {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < n; ++j) sx[i].x[j] = sx[0].x[j] + 0.5 * (sx[i].x[j] - sx[0].x[j]);
          sx[i].f = eval(sx[i].x);
          sx[i].id = next_id++;
        }
      }
      ++res.iterations;
      const auto best = std::min_element(sx.begin(), sx.end(), detail::vertex_less);
      if (best->f <= res.f) {
        res.f = best->f;
        res.x = best->x;
      }
      res.trace.push_back(res.f);
      res.accepted.push_back(res.x);
    }
    res.converged = converged;
    // A restart that fails to improve ends the search.
    if (round > 0 && !(res.f < f_start - opt.tol)) break;
  }
  return res;
}

// Deterministic global screening: the box centre followed by budget-1 Sobol points.
// Returns the best point (earliest on ties).
template <class F>
std::vector<double> direct_search(F&& f, std::span<const double> lower, std::span<const double> upper,
                                  std::size_t budget, double* best_value = nullptr) {
  const std::size_t n = lower.size();
  detail::require(n >= 1 && upper.size() == n, "direct_search: bounds must be non-empty and of equal length");
  detail::require(budget >= 1, "direct_search: budget must be >= 1");
  for (std::size_t j = 0; j < n; ++j)
    detail::require(std::isfinite(lower[j]) && std::isfinite(upper[j]) && lower[j] < upper[j],
                    "direct_search: box must be finite and non-empty");
  std::vector<double> best(n);
  for (std::size_t j = 0; j < n; ++j) best[j] = 0.5 * (lower[j] + upper[j]);
  double fb = f(std::span<const double>(best));
  if (std::isnan(fb)) fb = std::numeric_limits<double>::infinity();
  if (budget > 1) {
    const auto u = qmc_points(QmcGenerator::sobol, budget - 1, n);
    std::vector<double> x(n);
    for (std::size_t i = 0; i + 1 < budget; ++i) {
      for (std::size_t j = 0; j < n; ++j) x[j] = lower[j] + (upper[j] - lower[j]) * u[i * n + j];
      const double v = f(std::span<const double>(x));
      if (v < fb) {
        fb = v;
        best = x;
      }
    }
  }
  if (best_value) *best_value = fb;
  return best;
}

} // namespace sievesmm
