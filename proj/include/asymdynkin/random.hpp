#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace asymdynkin {

namespace detail {

// SplitMix64 finalizer; a bijective avalanche mix of one 64-bit word.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based random source. A draw is a pure function of
/// (seed, stream, counter), so any partition of work over streams
/// reproduces the same numbers.
class RandomDevice {
 public:
  constexpr explicit RandomDevice(std::uint64_t seed = 0) noexcept : seed_(seed) {}

  constexpr std::uint64_t seed() const noexcept { return seed_; }

  constexpr std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const noexcept {
    std::uint64_t key = detail::mix64(seed_ ^ detail::mix64(stream + 0x632be59bd9b4e019ULL));
    return detail::mix64(key ^ detail::mix64(counter * 0xd1342543de82ef95ULL + 1));
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t stream, std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(stream, counter) >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1); never returns 0.
  double uniform_open(std::uint64_t stream, std::uint64_t counter) const noexcept {
    return (static_cast<double>(bits(stream, counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on two consecutive counters.
  double normal(std::uint64_t stream, std::uint64_t counter) const noexcept {
    double u1 = uniform_open(stream, 2 * counter);
    double u2 = uniform(stream, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t seed_;
};

/// Sequential view of one stream of a RandomDevice.
class RandomStream {
 public:
  RandomStream(const RandomDevice& device, std::uint64_t stream) noexcept
      : device_(device), stream_(stream) {}

  double uniform() noexcept { return device_.uniform(stream_, counter_++); }

  /// Standard normal via Box-Muller on the next two counters.
  double normal() noexcept {
    double u1 = device_.uniform_open(stream_, counter_++);
    double u2 = device_.uniform(stream_, counter_++);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  RandomDevice device_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace asymdynkin
