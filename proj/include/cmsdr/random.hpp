#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace cmsdr {

// Domain-separated seed derivation so that e.g. frame bits and channel noise
// drawn from the same trial seed use independent streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace seed_tag {
inline constexpr std::uint64_t frame_bits = 1;
inline constexpr std::uint64_t channel_noise = 2;
inline constexpr std::uint64_t randomization = 3;
inline constexpr std::uint64_t code_generation = 4;
}  // namespace seed_tag

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    int bit() { return static_cast<int>(gen_() & 1u); }

    double gaussian(double stddev) {
        std::normal_distribution<double> d(0.0, stddev);
        return d(gen_);
    }

    // Circular complex Gaussian with E|v|^2 = variance.
    std::complex<double> complex_gaussian(double variance) {
        const double s = std::sqrt(variance / 2.0);
        std::normal_distribution<double> d(0.0, s);
        const double re = d(gen_);
        const double im = d(gen_);
        return {re, im};
    }

    std::uint64_t next() { return gen_(); }

    std::mt19937_64& engine() { return gen_; }

  private:
    std::mt19937_64 gen_;
};

}  // namespace cmsdr
