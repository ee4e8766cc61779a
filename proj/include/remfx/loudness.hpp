#pragma once

#include <stdexcept>

#include "remfx/audio.hpp"

namespace remfx {

struct GatedSilence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr double kTargetLufs = -20.0;

struct LoudnessReading {
    double lufs = 0.0;
    size_t gated_blocks = 0; // blocks surviving both gates
};

// BS.1770-4 integrated loudness, mono: K-weighting, 400 ms blocks with
// 75% overlap, -70 LKFS absolute gate then -10 LU relative gate.
// Throws GatedSilence when no block survives.
LoudnessReading measure_integrated_loudness(const AudioClip& clip);

// Single-pass gain to the target; no limiting, clipping above |1| is
// allowed.
AudioClip normalize_loudness(const AudioClip& clip, double target_lufs);

} // namespace remfx
