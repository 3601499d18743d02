#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace flame {

/// splitmix64 step; used to derive independent stream seeds so replicate
/// workers can draw concurrently without sharing an engine.
inline std::uint64_t split_mix(std::uint64_t state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    std::uint64_t s = split_mix(seed ^ 0x6a09e667f3bcc908ULL);
    s = split_mix(s ^ a);
    s = split_mix(s ^ b);
    return split_mix(s ^ c);
}

/// Standard-normal stream built on mt19937_64 with a Box-Muller transform.
/// mt19937_64 output is fixed by the standard, so a seed reproduces the
/// same draws on every conforming platform.
class NormalSampler {
  public:
    explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1], u2 in [0, 1)
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * pi() * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Uniform draw in [0, 1) from the top 53 bits of the engine output.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    std::mt19937_64& engine() { return engine_; }

  private:
    static constexpr double pi() { return 3.14159265358979323846; }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace flame
