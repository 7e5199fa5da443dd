#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace mspin::rng {

/// Algorithm identifier recorded in run metadata. Reproducibility of a run
/// is promised for this generator only.
inline constexpr std::string_view kAlgorithm =
    "xoshiro256++ (splitmix64-seeded, per-stream substreams)";

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ (Blackman & Vigna). Fully specified, so identical seeds give
/// identical streams on every platform, independent of the standard library.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    /// Substream `index` of a master seed: walkers, bootstrap resamples and
    /// trial repetitions each get an independent, order-free stream.
    static Xoshiro256pp substream(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t sm = seed;
        std::uint64_t mixed = splitmix64(sm) ^ (0x9E3779B97F4A7C15ULL * (index + 1));
        return Xoshiro256pp(mixed);
    }

    std::uint64_t next() {
        auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
        std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    bool coin() { return next() >> 63; }

    /// Uniform on [0,1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller on explicit uniforms (nothing is
    /// delegated to std::normal_distribution, whose algorithm is unspecified).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; // (0,1]
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace mspin::rng
