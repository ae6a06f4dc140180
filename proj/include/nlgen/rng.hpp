#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nlgen {

/// Deterministic PRNG used for every random choice in the project.
/// Implements splitmix64 directly instead of going through the standard
/// distributions, so results are bit-identical across platforms and
/// standard-library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed + 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) {
        // Lemire's multiply-shift with rejection to remove modulo bias.
        std::uint64_t x = next_u64();
        unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<unsigned __int128>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Draw an index from an unnormalised non-negative weight vector.
    int categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform01() * total;
        double acc = 0.0;
        int last_positive = 0;
        for (int i = 0; i < static_cast<int>(weights.size()); ++i) {
            if (weights[i] <= 0.0) continue;
            last_positive = i;
            acc += weights[i];
            if (u < acc) return i;
        }
        return last_positive;
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

    /// Derive an independent stream from a base seed; used to give each
    /// sampled candidate / test act its own reproducible stream.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        Rng mixer(seed ^ (0x632be59bd9b4e019ull * (stream + 1)));
        return mixer.next_u64();
    }

private:
    std::uint64_t state_;
};

}  // namespace nlgen
