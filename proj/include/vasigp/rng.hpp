#pragma once

#include <cstdint>
#include <random>

namespace vasigp::rng {

/// SplitMix64 step, used to decorrelate nearby seeds before they reach the
/// main engine.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Sub-seed of run `run_index` in a batch with the given master seed.
inline std::uint64_t sub_seed(std::uint64_t master_seed, std::uint64_t run_index) {
    return master_seed ^ run_index;
}

/// Per-run random stream. Each run owns its own instance; instances are not
/// thread-safe but independent instances may be used concurrently.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t s = seed;
        engine_.seed(splitmix64(s));
    }

    std::uint64_t seed() const { return seed_; }

    double normal() { return normal_(engine_); }

    double uniform(double a, double b) {
        if (a == b) return a;
        return std::uniform_real_distribution<double>(a, b)(engine_);
    }

    std::uint64_t next_u64() { return engine_(); }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

}  // namespace vasigp::rng
