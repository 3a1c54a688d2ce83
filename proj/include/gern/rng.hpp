#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace gern {

/// Seeded random stream. Identical (seed, stream) pairs replay identical
/// sequences; distinct stream ids give independent sequences from one seed.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Child stream keyed by `sub`; independent of this stream's state.
  RngStream derive(std::uint64_t sub) const;

  std::mt19937_64& engine() noexcept { return engine_; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  double uniform01();
  double normal(double mean = 0.0, double stddev = 1.0);
  bool bernoulli(double p);

  template <class T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[uniform_index(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> gauss_;
};

/// SplitMix64 finalizer, used to combine stream ids.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace gern
