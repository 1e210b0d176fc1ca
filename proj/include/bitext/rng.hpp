#pragma once

#include <cmath>
#include <cstdint>

namespace bitext {

// Counter-based deterministic RNG (splitmix64 over a seed/counter pair).
// Unlike std::uniform_real_distribution, the output stream is fully
// specified here, so runs are reproducible across compilers and the
// state serializes as two integers.
class Rng {
public:
    Rng() = default;
    explicit Rng(uint64_t seed, uint64_t counter = 0) : seed_(seed), counter_(counter) {}

    uint64_t next_u64() {
        uint64_t z = seed_ + 0x9e3779b97f4a7c15ull * (counter_++ + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [0, n)
    uint64_t below(uint64_t n) { return n ? next_u64() % n : 0; }

    // standard normal via Box-Muller
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Independent stream derived from this generator's seed and a stream id.
    // Streams with distinct ids never collide no matter how much either is used.
    Rng stream(uint64_t id) const {
        uint64_t z = seed_ ^ (0x9e3779b97f4a7c15ull + id * 0xda942042e4dd58b5ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return Rng(z ^ (z >> 31));
    }

    uint64_t seed() const { return seed_; }
    uint64_t counter() const { return counter_; }

private:
    uint64_t seed_ = 0;
    uint64_t counter_ = 0;
};

} // namespace bitext
