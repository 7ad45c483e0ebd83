#pragma once

#include <cstdint>
#include <random>

namespace optknn {

// SplitMix64 finaliser; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

// Seed for substream `stream` of master seed `seed`. Substreams depend only
// on (seed, stream), so replications can run in any order.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream);

// mt19937_64 with distribution transforms written out explicitly, so draws
// are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1).
  double uniform_open();
  double normal();
  double logistic();
  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace optknn
