#pragma once

#include <cstdint>
#include <cmath>

namespace reqsim {

// Key mixer (splitmix64). Advances x and returns a well-mixed word.
inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Counter-based per-trial generator: an xoshiro256++ instance whose state is
// derived from (seed, stream, trial). Trials can be evaluated in any order or
// on any number of workers and still produce identical draws, which is what
// makes the stochastic artifacts byte-reproducible.
class TrialRng {
public:
    TrialRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t trial) {
        std::uint64_t key = seed;
        key ^= 0xD1B54A32D192ED03ull * (stream + 1);
        key ^= 0x8CB92BA72F3D8DD7ull * (trial + 1);
        for (auto& w : s_) w = splitmix64(key);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // isotropic unit vector; consumes exactly two draws
    void unit_vector(double out[3]) {
        const double z = 1.0 - 2.0 * uniform();
        const double phi = 2.0 * 3.141592653589793 * uniform();
        const double rho = std::sqrt(std::fmax(0.0, 1.0 - z * z));
        out[0] = rho * std::cos(phi);
        out[1] = rho * std::sin(phi);
        out[2] = z;
    }

    // Exact Poisson sampling (product method), chunked so exp(-chunk) stays far
    // from underflow for large means.
    long poisson(double mean) {
        long total = 0;
        while (mean > 0.0) {
            const double chunk = mean > 30.0 ? 30.0 : mean;
            mean -= chunk;
            const double limit = std::exp(-chunk);
            double p = 1.0;
            long k = 0;
            do {
                ++k;
                p *= uniform();
            } while (p > limit);
            total += k - 1;
        }
        return total;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

}  // namespace reqsim
