#pragma once

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "sievesmm/errors.hpp"
#include "sievesmm/mixture.hpp"
#include "sievesmm/random.hpp"

namespace sievesmm {

namespace detail {
inline double gev_g(int i, double xi) { return std::tgamma(1.0 - i * xi); }
} // namespace detail

// GEV with F(x) = exp(-(1 + xi x)^(-1/xi)); moment formulas need xi < 1/4 for kurtosis.
[[nodiscard]] inline double gev_skewness(double xi) {
  detail::require(xi < 1.0 / 3.0 && xi != 0.0, "gev_skewness: xi must be nonzero and < 1/3");
  const double g1 = detail::gev_g(1, xi), g2 = detail::gev_g(2, xi), g3 = detail::gev_g(3, xi);
  const double sign = xi > 0.0 ? 1.0 : -1.0;
  return sign * (g3 - 3.0 * g2 * g1 + 2.0 * g1 * g1 * g1) / std::pow(g2 - g1 * g1, 1.5);
}

[[nodiscard]] inline double gev_excess_kurtosis(double xi) {
  detail::require(xi < 0.25 && xi != 0.0, "gev_excess_kurtosis: xi must be nonzero and < 1/4");
  const double g1 = detail::gev_g(1, xi), g2 = detail::gev_g(2, xi), g3 = detail::gev_g(3, xi),
               g4 = detail::gev_g(4, xi);
  const double v = g2 - g1 * g1;
  return (g4 - 4.0 * g3 * g1 + 6.0 * g2 * g1 * g1 - 3.0 * g1 * g1 * g1 * g1) / (v * v) - 3.0;
}

// Shape with the requested skewness, searched on the bounded-support branch xi in (-1, -0.05).
[[nodiscard]] inline double solve_gev_shape(double target_skewness) {
  const auto f = [&](double xi) { return gev_skewness(xi) - target_skewness; };
  const double lo = -1.0 + 1e-9, hi = -0.05;
  if (f(lo) * f(hi) > 0.0) throw numeric_error("solve_gev_shape: skewness target outside the searched branch");
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r.first + r.second);
}

// GEV rescaled to mean 0 and variance 1.
class StandardizedGev {
public:
  explicit StandardizedGev(double xi) : xi_(xi) {
    detail::require(xi < 0.5 && xi != 0.0, "StandardizedGev: xi must be nonzero and < 1/2");
    const double g1 = detail::gev_g(1, xi), g2 = detail::gev_g(2, xi);
    mean_ = (g1 - 1.0) / xi;
    sd_ = std::sqrt(g2 - g1 * g1) / std::abs(xi);
  }
  [[nodiscard]] double xi() const { return xi_; }
  [[nodiscard]] double quantile(double u) const {
    const double x = (std::pow(-std::log(u), -xi_) - 1.0) / xi_;
    return (x - mean_) / sd_;
  }
  [[nodiscard]] double density(double e) const {
    const double x = mean_ + sd_ * e;
    const double a = 1.0 + xi_ * x;
    if (!(a > 0.0)) return 0.0;
    const double t = std::pow(a, -1.0 / xi_);
    return sd_ * std::pow(t, xi_ + 1.0) * std::exp(-t);
  }

private:
  double xi_, mean_ = 0.0, sd_ = 1.0;
};

// Student t with nu > 2 degrees of freedom rescaled to unit variance.
class StandardizedStudentT {
public:
  explicit StandardizedStudentT(double nu) : nu_(nu) {
    detail::require(nu > 2.0, "StandardizedStudentT: need nu > 2");
    scale_ = std::sqrt((nu - 2.0) / nu);
  }
  [[nodiscard]] double nu() const { return nu_; }
  [[nodiscard]] double density(double e) const {
    const double x = e / scale_;
    const double c = std::exp(std::lgamma(0.5 * (nu_ + 1.0)) - std::lgamma(0.5 * nu_)) / std::sqrt(nu_ * std::numbers::pi);
    return c * std::pow(1.0 + x * x / nu_, -0.5 * (nu_ + 1.0)) / scale_;
  }
  // Normal over the root of an independent chi-square (integer nu: sum of squared normals).
  [[nodiscard]] double draw(RngStream& g) const {
    const double z = g.normal();
    double chi = 0.0;
    const auto whole = static_cast<int>(std::floor(nu_));
    for (int i = 0; i < whole; ++i) {
      const double v = g.normal();
      chi += v * v;
    }
    detail::require(static_cast<double>(whole) == nu_, "StandardizedStudentT: sampling needs integer nu");
    return scale_ * z / std::sqrt(chi / nu_);
  }

private:
  double nu_, scale_ = 1.0;
};

enum class TruthKind { normal, gev, student_t, mixture };

// Named shock law for Monte-Carlo data.
struct TruthDistribution {
  TruthKind kind = TruthKind::normal;
  double parameter = 0.0; // GEV shape or t degrees of freedom
  MixtureParams mixture = standard_normal_mixture();

  [[nodiscard]] std::string name() const {
    switch (kind) {
    case TruthKind::normal: return "normal";
    case TruthKind::gev: return "gev";
    case TruthKind::student_t: return "student_t";
    case TruthKind::mixture: return "mixture";
    }
    return "?";
  }

  [[nodiscard]] double draw(RngStream& g) const {
    switch (kind) {
    case TruthKind::normal: return g.normal();
    case TruthKind::gev: return StandardizedGev(parameter).quantile(g.uniform());
    case TruthKind::student_t: return StandardizedStudentT(parameter).draw(g);
    case TruthKind::mixture: {
      const double nu = g.uniform();
      std::vector<double> z(mixture.k);
      for (double& v : z) v = g.normal();
      const double nl = g.uniform(), nr = g.uniform();
      return sample(mixture, nu, z, nl, nr);
    }
    }
    return 0.0;
  }

  [[nodiscard]] double density(double e) const {
    switch (kind) {
    case TruthKind::normal: return std::exp(-0.5 * e * e) / std::sqrt(2.0 * std::numbers::pi);
    case TruthKind::gev: return StandardizedGev(parameter).density(e);
    case TruthKind::student_t: return StandardizedStudentT(parameter).density(e);
    case TruthKind::mixture: return sievesmm::density(mixture, e);
    }
    return 0.0;
  }
};

// Skewness of the Monte-Carlo GEV truth.
inline constexpr double gev_target_skewness = -0.9;

[[nodiscard]] inline TruthDistribution gev_truth() { return {TruthKind::gev, solve_gev_shape(gev_target_skewness), {}}; }
[[nodiscard]] inline TruthDistribution student_truth(double nu = 5.0) { return {TruthKind::student_t, nu, {}}; }

} // namespace sievesmm
