#pragma once

#include <cmath>
#include <cstdint>

namespace mlaforge {

// splitmix64 step; the de-facto standard 64-bit mixer.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic per-item random stream. Seeding is a pure function of
// (seed, key...), so results are independent of iteration order and
// thread scheduling.
class RandomStream {
public:
    explicit RandomStream(uint64_t seed) : state_(seed) {
        // decorrelate trivially related seeds
        splitmix64(state_);
        splitmix64(state_);
    }

    RandomStream(uint64_t seed, uint64_t k1) : RandomStream(mix(seed, k1)) {}
    RandomStream(uint64_t seed, uint64_t k1, uint64_t k2)
        : RandomStream(mix(mix(seed, k1), k2)) {}

    uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0, 1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    float next_float() {
        return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f;
    }

    // uniform integer in [0, n)
    uint32_t next_below(uint32_t n) {
        return static_cast<uint32_t>((next_u64() >> 32) * uint64_t(n) >> 32);
    }

    // standard normal, Box-Muller
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * kTwoPi_ * 0.5 * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    static uint64_t mix(uint64_t a, uint64_t b) {
        uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
        splitmix64(s);
        return s;
    }

private:
    static constexpr double kTwoPi_ = 6.28318530717958647692;
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace mlaforge
