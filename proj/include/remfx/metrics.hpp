#pragma once

#include <utility>
#include <vector>

#include "remfx/audio.hpp"
#include "remfx/spectral.hpp"

namespace remfx {

struct LengthMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ZeroReference : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MrStftConfig {
    // (fft_size, hop_size); hop = fft/4
    std::vector<std::pair<size_t, size_t>> resolutions = {{512, 128}, {1024, 256}, {2048, 512}};
};

struct MetricPair {
    double si_sdr_db = 0.0; // may be +inf for perfect reconstruction
    double mr_stft = 0.0;
};

enum class Direction { HigherBetter, LowerBetter };

// Scale-invariant SDR in dB; +inf when the residual energy is below
// 1e-12 of the scaled-reference energy.
double si_sdr(const AudioClip& estimate, const AudioClip& reference);

// Mean over resolutions of spectral convergence plus mean absolute
// log-magnitude distance.
double mr_stft_error(const AudioClip& estimate, const AudioClip& reference,
                     const MrStftConfig& cfg = {});

double improvement(double metric_on_output, double metric_on_input, Direction direction);

// 100 * L1 + 1 * MR-STFT
double composite_loss(const AudioClip& estimate, const AudioClip& reference);

} // namespace remfx
