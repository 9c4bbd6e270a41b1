#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace sievesmm {

// Philox4x32-10 counter-based generator. Every draw is a pure function of
// (key, counter), so any element of a simulation can be regenerated on its own.
class Philox {
public:
  using counter_type = std::array<std::uint32_t, 4>;

  explicit constexpr Philox(std::uint64_t seed) noexcept
      : k0_(static_cast<std::uint32_t>(seed)), k1_(static_cast<std::uint32_t>(seed >> 32)) {}

  [[nodiscard]] constexpr counter_type operator()(counter_type c) const noexcept {
    std::uint32_t k0 = k0_, k1 = k1_;
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k0, static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k1, static_cast<std::uint32_t>(p0)};
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return c;
  }

private:
  std::uint32_t k0_, k1_;
};

namespace detail {
// 53-bit uniform strictly inside (0,1).
constexpr double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}
} // namespace detail

// Draws addressed by a four-part index (a, b, c, d), typically (t, s, channel, tag).
class KeyedRng {
public:
  explicit constexpr KeyedRng(std::uint64_t seed) noexcept : gen_(seed) {}

  [[nodiscard]] double uniform(std::uint32_t a, std::uint32_t b, std::uint32_t c,
                               std::uint32_t d = 0) const noexcept {
    const auto r = gen_({a, b, c, d});
    return detail::to_open_unit(r[0], r[1]);
  }

  // Box-Muller on the two halves of one Philox block (cosine branch only).
  [[nodiscard]] double normal(std::uint32_t a, std::uint32_t b, std::uint32_t c,
                              std::uint32_t d = 0) const noexcept {
    const auto r = gen_({a, b, c, d});
    const double u1 = detail::to_open_unit(r[0], r[1]);
    const double u2 = detail::to_open_unit(r[2], r[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  Philox gen_;
};

// Sequential view over a keyed stream: the counter's first two words advance per draw.
// Also satisfies UniformRandomBitGenerator for use with <algorithm>.
class RngStream {
public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint32_t stream, std::uint32_t substream = 0) noexcept
      : gen_(seed), stream_(stream), sub_(substream) {}

  double uniform() noexcept {
    const auto r = block(0u);
    return detail::to_open_unit(r[0], r[1]);
  }
  double normal() noexcept {
    const auto r = block(0x80000000u);
    const double u1 = detail::to_open_unit(r[0], r[1]);
    const double u2 = detail::to_open_unit(r[2], r[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  // Uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n) noexcept {
    const auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept {
    const auto r = block(0x40000000u);
    return (std::uint64_t{r[0]} << 32) | r[1];
  }

private:
  Philox::counter_type block(std::uint32_t tag) noexcept {
    const std::uint64_t i = index_++;
    return gen_({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32), stream_, sub_ ^ tag});
  }

  Philox gen_;
  std::uint32_t stream_, sub_;
  std::uint64_t index_ = 0;
};

// Mixes a parent seed with an index into an independent child seed (SplitMix64 finalizer).
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  std::uint64_t z = parent + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

} // namespace sievesmm
