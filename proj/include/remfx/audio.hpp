#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace remfx {

constexpr int kSampleRate = 48000;
constexpr size_t kClipSamples = 262144; // ~5.46 s at 48 kHz

struct AudioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MalformedWav : AudioError {
    using AudioError::AudioError;
};
struct UnsupportedFormat : AudioError {
    using AudioError::AudioError;
};
struct IoFailure : AudioError {
    using AudioError::AudioError;
};

// Mono sample buffer at a fixed rate. Pipelines always run at 48 kHz.
struct AudioClip {
    std::vector<float> samples;
    int sample_rate = kSampleRate;

    size_t length() const { return samples.size(); }
    double duration_sec() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

// RIFF/WAVE, fmt type 3 (IEEE float), mono, 48 kHz, 32-bit. Payload is
// bit-exact in both directions.
AudioClip load_wav(const std::string& path);
void save_wav(const AudioClip& clip, const std::string& path);

} // namespace remfx
