#pragma once

#include <cmath>
#include <cstdint>

namespace rhm {

// All randomness in the library flows through this generator. Streams are
// derived from 64-bit seeds with the splitmix64 finalizer, so results are
// reproducible from a single master seed and independent of scheduling.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Stream id for a sweep cell: chained splitmix64 over (master, cell_key, trial).
// cell_key is the bit pattern of the grid value (plus any secondary index), so
// adding grid points never changes the stream of an existing cell.
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t cell_key,
                                   std::uint64_t trial) {
    return splitmix64(splitmix64(splitmix64(master) ^ cell_key) ^ trial);
}

// xoshiro256++ with splitmix64 seeding.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) {
        std::uint64_t x = seed;
        for (auto& w : s_) {
            x = splitmix64(x);
            w = x;
        }
        has_spare_ = false;
    }

    std::uint64_t next() {
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

    // Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), unbiased (rejection on the top range).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
        std::uint64_t r;
        do {
            r = next();
        } while (r > limit);
        return r % n;
    }

    // Standard normal, Marsaglia polar method (pairs cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, w, q;
        do {
            u = 2.0 * uniform() - 1.0;
            w = 2.0 * uniform() - 1.0;
            q = u * u + w * w;
        } while (q >= 1.0 || q == 0.0);
        const double g = std::sqrt(-2.0 * std::log(q) / q);
        spare_ = w * g;
        has_spare_ = true;
        return u * g;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_;
};

}  // namespace rhm
