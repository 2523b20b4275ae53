#pragma once

#include <cstdint>
#include <random>

namespace rwlab {

// SplitMix64 finalizer. This is the published mixing function used to derive
// per-replica streams: stream_seed(seed, r) is stable across builds.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replica) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(replica + 0x632be59bd9b4e019ULL));
}

// Thin wrapper over mt19937_64 with the few draws the simulators need.
// Bit extraction is done here rather than through <random> distributions so
// the streams do not depend on the standard library's distribution code.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t replica) : engine_(stream_seed(seed, replica)) {}

  std::uint64_t next() { return engine_(); }

  bool coin() {
    if (bits_left_ == 0) {
      bit_pool_ = engine_();
      bits_left_ = 64;
    }
    const bool b = bit_pool_ & 1U;
    bit_pool_ >>= 1;
    --bits_left_;
    return b;
  }

  // Uniform integer in [0, n), n > 0. Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t x = engine_();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = engine_();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t bit_pool_ = 0;
  int bits_left_ = 0;
};

}  // namespace rwlab
