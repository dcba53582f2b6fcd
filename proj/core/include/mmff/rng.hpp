#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace mmff {

// Counter-based generator: output n is splitmix64(seed + n * golden).
// Every draw is a pure function of (seed, counter), so streams replay
// bit-identically and do not depend on the standard library's
// implementation-defined distributions.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (one output per two uniforms).
    double normal();

    // Uniform integer in [0, n). n must be positive.
    std::size_t below(std::size_t n);

    // Independent stream keyed by (seed, id); does not advance this stream.
    RngStream fork(std::uint64_t id) const;

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

} // namespace mmff
