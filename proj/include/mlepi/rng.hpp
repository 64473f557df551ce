#pragma once
// Self-contained PRNG utilities. std::uniform_*_distribution is not
// bit-reproducible across standard library implementations, so all
// sampling goes through these helpers.
#include <cstdint>
#include <cmath>
#include <string_view>
#include <vector>
#include <stdexcept>

namespace mlepi {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    uint64_t next_u64() {
        // xoshiro256**
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, bound), Lemire's method
    uint64_t next_below(uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("Rng::next_below: bound must be > 0");
        __uint128_t m = static_cast<__uint128_t>(next_u64()) * bound;
        auto lo = static_cast<uint64_t>(m);
        if (lo < bound) {
            const uint64_t threshold = (-bound) % bound;
            while (lo < threshold) {
                m = static_cast<__uint128_t>(next_u64()) * bound;
                lo = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    // uniform in [0, 1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in (0, 1], safe for log()
    double next_double_open() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double weibull(double shape, double scale) {
        return scale * std::pow(-std::log(next_double_open()), 1.0 / shape);
    }

    double normal() {
        // Box-Muller, one value per call (the discarded twin keeps the
        // draw count deterministic and simple)
        double u1 = next_double_open();
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // k distinct values from [0, n), in sampling order
    std::vector<uint32_t> sample_without_replacement(uint32_t n, uint32_t k);

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

inline std::vector<uint32_t> Rng::sample_without_replacement(uint32_t n, uint32_t k) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    std::vector<uint32_t> out;
    out.reserve(k);
    if (k * 3ULL >= n) {
        // partial Fisher-Yates
        std::vector<uint32_t> pool(n);
        for (uint32_t i = 0; i < n; ++i) pool[i] = i;
        for (uint32_t i = 0; i < k; ++i) {
            uint32_t j = i + static_cast<uint32_t>(next_below(n - i));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
    } else {
        // rejection sampling with a small hash-free marker set
        std::vector<bool> taken(n, false);
        while (out.size() < k) {
            auto v = static_cast<uint32_t>(next_below(n));
            if (!taken[v]) { taken[v] = true; out.push_back(v); }
        }
    }
    return out;
}

// Deterministic child-seed derivation: every module draws its seed from
// (master_seed, module tag, index) so partial re-runs stay consistent.
inline uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t index = 0) {
    uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    auto mix = [&h](uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    mix(master);
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    mix(index);
    uint64_t sm = h;
    return splitmix64(sm);
}

} // namespace mlepi
