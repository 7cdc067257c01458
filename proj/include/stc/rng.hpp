#pragma once

#include <cstdint>
#include <vector>

namespace stc {

// Counter-style deterministic generator (splitmix64). Every draw is a pure
// function of the evolving 64-bit state, so a (seed, draw-count) pair fully
// identifies the stream on any platform. Gaussians use an Irwin-Hall sum of
// twelve uniforms: integer/multiply-only arithmetic, no libm in the path,
// hence bit-stable everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Approximate standard normal, bounded in [-6,6].
    double normal(double mean = 0.0, double stddev = 1.0) {
        double s = 0.0;
        for (int i = 0; i < 12; ++i) s += uniform();
        return mean + stddev * (s - 6.0);
    }

    // Uniform integer in [0, n); n must be positive.
    std::size_t below(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace stc
