#pragma once

#include <cstdint>
#include <random>

namespace arc {

/// splitmix64 finalizer. Used to derive independent stream seeds from a master seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Named random streams split off one master seed. Adding draws to one stream
/// never shifts another.
enum class Stream : std::uint64_t {
  env = 1,
  policy_init = 2,
  buffer = 3,
  discriminator_init = 4,
  eval = 5,
  policy_sampling = 6,
  critic_init = 7,
  expert = 8,
  data = 9,
};

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t counter = 0) noexcept {
  return splitmix64(splitmix64(master ^ splitmix64(stream)) + counter);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                    std::uint64_t counter = 0) noexcept {
  return derive_seed(master, static_cast<std::uint64_t>(stream), counter);
}

/// Thin wrapper over mt19937_64 with the draws this project needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal() { return normal_(engine_); }
  double normal(double mean, double stddev) { return mean + stddev * normal_(engine_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace arc
