#pragma once

#include <cstdint>
#include <random>

namespace eit {

// Deterministic RNG wrapper. std::uniform_real_distribution is
// implementation-defined, so the mappings below are spelled out to keep
// seeded outputs byte-identical across standard libraries.
class Rng {
   public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Sub-stream for sample `index`, independent of draws on this stream.
    static Rng for_sample(std::uint64_t seed, std::uint64_t index) {
        return Rng(splitmix(seed ^ splitmix(0x9E3779B97F4A7C15ull + index)));
    }

    // uniform on [0,1)
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }
    // uniform on (lo, hi]  (matches the paper's half-open parameter ranges)
    double uniform_left_open(double lo, double hi) {
        return hi - (hi - lo) * uniform01();
    }
    // uniform on [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal() {
        // Box-Muller, deterministic pairing
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do { u1 = uniform01(); } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t bits() { return gen_(); }

    std::uint64_t bounded(std::uint64_t n) {
        // rejection sampling, unbiased and deterministic
        const std::uint64_t lim = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do { v = gen_(); } while (v >= lim);
        return v % n;
    }

    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

   private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace eit
