#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace sbrec {

// SplitMix64 step, used to derive independent sub-seeds from (seed, index)
// pairs so that parallel replications stay reproducible.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic random source: mt19937_64 (bit-exact per the standard) with
// hand-rolled uniform/normal transforms so results do not depend on the
// standard library's unspecified distribution algorithms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1) with 53-bit resolution
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::size_t uniform_index(std::size_t n) {
        return std::min<std::size_t>(static_cast<std::size_t>(uniform() * static_cast<double>(n)), n - 1);
    }

    // standard normal via Box-Muller; the spare is cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[uniform_index(i)]);
        }
    }

    // first `count` elements of a Fisher-Yates shuffle; order is random too
    template <typename T>
    std::vector<T> sample_without_replacement(std::span<const T> pool, std::size_t count) {
        std::vector<T> items(pool.begin(), pool.end());
        count = std::min(count, items.size());
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t j = i + uniform_index(items.size() - i);
            std::swap(items[i], items[j]);
        }
        items.resize(count);
        return items;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace sbrec
