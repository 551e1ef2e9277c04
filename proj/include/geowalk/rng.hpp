#pragma once

#include <cstdint>

namespace geowalk {

// Counter-addressable pseudorandom stream built on the splitmix64 finalizer.
// Output i is a pure function of (base, i), so a stream can be replayed or
// evaluated out of order, and streams derived from distinct (master seed,
// stream index) pairs are statistically independent for simulation purposes.
// Every experiment derives one stream per trial; worker count never touches
// the draw sequence.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream() = default;
    explicit RngStream(std::uint64_t base) : base_(base) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~std::uint64_t{0}; }

    result_type operator()() { return at(counter_++); }

    // Value of draw i, independent of the cursor.
    result_type at(std::uint64_t i) const { return mix(base_ + (i + 1) * GAMMA); }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(operator()() >> 11) * 0x1.0p-53; }

    // Uniform in [0, bound) without modulo bias.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t threshold = (~bound + 1) % bound; // 2^64 mod bound
        for (;;) {
            const std::uint64_t r = operator()();
            if (r >= threshold) return r % bound;
        }
    }

    std::uint64_t cursor() const { return counter_; }

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

private:
    static constexpr std::uint64_t GAMMA = 0x9e3779b97f4a7c15ULL;

    std::uint64_t base_ = 0;
    std::uint64_t counter_ = 0;
};

// Base value of the stream for (master seed, stream index).  Two rounds of
// mixing keep low-entropy seeds (0, 1, 2, ...) far apart.  Reports list it
// as the per-trial seed.
inline std::uint64_t derived_seed(std::uint64_t master_seed, std::uint64_t stream_index) {
    const std::uint64_t a = RngStream::mix(master_seed ^ 0x6a09e667f3bcc909ULL);
    const std::uint64_t b = RngStream::mix(stream_index + 0x9e3779b97f4a7c15ULL);
    return RngStream::mix(a ^ (b + 0x3c6ef372fe94f82bULL));
}

// One independent stream per (master seed, stream index).
inline RngStream derive_stream(std::uint64_t master_seed, std::uint64_t stream_index) {
    return RngStream(derived_seed(master_seed, stream_index));
}

} // namespace geowalk
