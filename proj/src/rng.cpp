#include "remfx/rng.hpp"

namespace remfx {

namespace {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

uint64_t splitmix64(uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

RngStream::RngStream(uint64_t seed, uint64_t stream)
    : state_(splitmix64(splitmix64(seed) ^ splitmix64(stream + kGolden))) {}

uint64_t RngStream::next_u64() {
    ++counter_;
    return splitmix64(state_ + counter_ * kGolden);
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

uint64_t RngStream::uniform_int(uint64_t n) {
    return next_u64() % n;
}

RngStream RngStream::derive(uint64_t substream) const {
    return RngStream(state_, substream);
}

} // namespace remfx
