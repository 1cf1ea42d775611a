#pragma once
// Seeded PRNG used everywhere randomness is needed. All draws are
// reproducible from a single master seed; sub-streams are derived by
// hashing the seed with a purpose string so independent pipeline stages
// cannot perturb each other's sequences.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace floornav {

inline uint64_t splitmix64(uint64_t& s) {
    uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a(std::string_view s, uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Derive an independent stream seed from (seed, purpose[, index]).
inline uint64_t derive_seed(uint64_t seed, std::string_view purpose, uint64_t index = 0) {
    uint64_t h = fnv1a(purpose) ^ (seed * 0x9E3779B97F4A7C15ULL);
    h ^= index + 0xBF58476D1CE4E5B9ULL + (h << 6) + (h >> 2);
    uint64_t s = h;
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(uint64_t seed = 0xC0FFEE1234ULL) : state_(seed) {
        // burn-in so nearby seeds decorrelate
        splitmix64(state_);
    }

    uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0, 1)
    double uniform01() { return (next_u64() >> 11) * (1.0 / 9007199254740992.0); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // uniform integer in [0, n)
    uint64_t uniform_int(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    // standard normal via Box-Muller, one spare cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    Rng fork(std::string_view purpose, uint64_t index = 0) {
        return Rng(derive_seed(next_u64(), purpose, index));
    }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace floornav
