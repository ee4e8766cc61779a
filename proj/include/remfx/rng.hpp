#pragma once

#include <cstdint>

namespace remfx {

// Splittable counter-based generator. A stream is identified by
// (seed, stream id); the i-th draw is a SplitMix64 hash of the stream
// state plus the draw counter, so identical ids always replay the same
// sequence and sub-streams can be derived without sharing state.
class RngStream {
public:
    RngStream(uint64_t seed, uint64_t stream);

    uint64_t next_u64();

    // [0, 1)
    double uniform();
    // uniform over the closed range [lo, hi]
    double uniform(double lo, double hi);
    // [0, n)
    uint64_t uniform_int(uint64_t n);

    // independent child stream; unaffected by and not affecting this one
    RngStream derive(uint64_t substream) const;

private:
    uint64_t state_;
    uint64_t counter_ = 0;
};

} // namespace remfx
