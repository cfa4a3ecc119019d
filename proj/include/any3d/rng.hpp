#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace any3d {

// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

// FNV-1a, 64-bit.
constexpr std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Maps 64 random bits to [0, 1) with 53-bit resolution.
constexpr double to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Counter-based generator: output i is mix(key, i). Streams derived with
// split() never overlap their parent in practice and are reproducible from
// (key, stream id) alone.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t key, std::uint64_t counter = 0)
        : key_(key), counter_(counter) {}

    constexpr std::uint64_t next_u64() { return hash_combine(key_, counter_++); }

    constexpr CounterRng split(std::uint64_t stream) const {
        return CounterRng(hash_combine(mix64(key_ ^ 0xa0761d6478bd642fULL), stream));
    }

    constexpr double uniform() { return to_unit(next_u64()); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next_u64());
        // Rejecting the short low range keeps x % span exactly uniform.
        const std::uint64_t limit = (~std::uint64_t{0} - span + 1) % span;
        std::uint64_t x = next_u64();
        while (x < limit) x = next_u64();
        return lo + static_cast<std::int64_t>(x % span);
    }

    // Standard normal by Box-Muller; consumes two counters per draw.
    double normal() {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    constexpr std::uint64_t key() const { return key_; }
    constexpr std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace any3d
