#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace mtsdiag {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Deterministic random stream. mt19937_64 is bit-exact across conforming
// standard libraries; the distributions are hand-rolled because the
// std::*_distribution output sequences are implementation-defined and the
// data module promises bit-identical generation per seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // [0, 1)
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller, pairs cached.
    double normal(double mean = 0.0, double stddev = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + stddev * spare_;
        }
        const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53; // (0, 1]
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return mean + stddev * r * std::cos(theta);
    }

    std::uint64_t next_u64() { return gen_(); }

    // Fisher-Yates using bounded draws by rejection (unbiased, deterministic).
    template <typename Vec>
    void shuffle(Vec& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = bounded(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::size_t bounded(std::size_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % n);
    }

    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// All randomness flows from one top-level seed through named substreams, so
// adding a consumer never perturbs the draws of another.
inline Rng substream(std::uint64_t seed, std::string_view name) {
    return Rng(splitmix64(seed ^ fnv1a64(name)));
}

inline Rng substream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
    return Rng(splitmix64(splitmix64(seed ^ fnv1a64(name)) + index));
}

} // namespace mtsdiag
