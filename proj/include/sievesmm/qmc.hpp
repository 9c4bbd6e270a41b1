#pragma once

#include <boost/random/sobol.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sievesmm/errors.hpp"

namespace sievesmm {

enum class QmcGenerator { sobol, halton };

inline std::string to_string(QmcGenerator g) { return g == QmcGenerator::sobol ? "sobol" : "halton"; }

inline QmcGenerator qmc_generator_from_string(const std::string& s) {
  if (s == "sobol") return QmcGenerator::sobol;
  if (s == "halton") return QmcGenerator::halton;
  throw validation_error("unknown QMC generator '" + s + "' (expected sobol or halton)");
}

namespace detail {

inline std::vector<unsigned> first_primes(std::size_t n) {
  std::vector<unsigned> p;
  for (unsigned c = 2; p.size() < n; ++c) {
    bool prime = true;
    for (unsigned q : p) {
      if (q * q > c) break;
      if (c % q == 0) { prime = false; break; }
    }
    if (prime) p.push_back(c);
  }
  return p;
}

inline double radical_inverse(std::uint64_t i, unsigned base) {
  const double inv = 1.0 / base;
  double f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

} // namespace detail

// m low-discrepancy points in (0,1)^dim, row-major. The all-zero origin of both
// sequences is never returned; `skip` further points are discarded after it.
inline std::vector<double> qmc_points(QmcGenerator gen, std::size_t m, std::size_t dim, std::uint64_t skip = 0) {
  detail::require(m >= 1 && dim >= 1, "qmc_points: m and dim must be positive");
  std::vector<double> out(m * dim);
  if (gen == QmcGenerator::sobol) {
    // Boost's Sobol engine already starts after the origin.
    boost::random::sobol eng(dim);
    if (skip > 0) eng.discard(skip * dim);
    constexpr double lo = 0x1.0p-64, hi = 1.0 - 0x1.0p-53;
    for (auto& u : out) {
      const double v = std::ldexp(static_cast<double>(eng()), -64);
      u = v < lo ? lo : (v > hi ? hi : v);
    }
  } else {
    const auto primes = detail::first_primes(dim);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < dim; ++j) out[i * dim + j] = detail::radical_inverse(i + 1 + skip, primes[j]);
  }
  return out;
}

} // namespace sievesmm
