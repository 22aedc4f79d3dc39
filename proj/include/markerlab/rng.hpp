#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace markerlab {

/// Deterministic random generator used throughout the toolkit.
///
/// All distributions are implemented on top of the raw 64-bit stream so that
/// a (seed, call sequence) pair produces identical values on every platform
/// and toolchain. Standard-library distributions are avoided on purpose:
/// their output is implementation defined, which would break byte-identical
/// dataset reruns.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // Warm up so that small seeds do not start in a low-entropy state.
        next_u64();
        next_u64();
    }

    /// Derives an independent child stream, e.g. one per dataset image.
    /// child(i) depends only on (seed, i), never on draws made so far.
    Rng child(std::uint64_t stream) const {
        return Rng(mix(seed_origin_, 0x9e3779b97f4a7c15ull * (stream + 1)));
    }

    std::uint64_t next_u64() {
        // splitmix64 (Steele, Lea, Flood): tiny state, passes BigCrush-lite.
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        if (hi <= lo) return lo;
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (no state caching, one draw per call).
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.28318530717958647692 * u2);
    }

    /// Fisher-Yates shuffle (std::shuffle is implementation defined).
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = next_u64() % i;
            std::swap(v[i - 1], v[j]);
        }
    }

    /// k distinct values from {0, ..., n-1}, in draw order.
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> pool(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(k));
        for (int i = 0; i < k && i < n; ++i) {
            const std::size_t j =
                static_cast<std::size_t>(i) +
                next_u64() % static_cast<std::uint64_t>(n - i);
            std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
            out.push_back(pool[static_cast<std::size_t>(i)]);
        }
        return out;
    }

private:
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    std::uint64_t seed_origin_ = state_;
};

/// FNV-1a, used for config digests and byte-identity checks in tests.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace markerlab
