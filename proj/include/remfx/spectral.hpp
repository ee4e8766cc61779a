#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "remfx/audio.hpp"

namespace remfx {

struct ClipTooShort : AudioError {
    using AudioError::AudioError;
};

// Hann-windowed analysis, no zero padding; a trailing partial frame is
// dropped. fft_size must be a power of two.
struct SpectralConfig {
    size_t fft_size = 2048;
    size_t hop_size = 1024;
    size_t mel_bands = 64;
    double fmin_hz = 20.0;
    double fmax_hz = 24000.0;
};

constexpr double kLogEps = 1e-8;

struct ComplexSpectrogram {
    size_t bins = 0;   // fft_size/2 + 1
    size_t frames = 0;
    std::vector<std::complex<double>> data; // frame-major

    std::complex<double>& at(size_t bin, size_t frame) { return data[frame * bins + bin]; }
    const std::complex<double>& at(size_t bin, size_t frame) const { return data[frame * bins + bin]; }
};

struct RealMatrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data; // row-major

    double& at(size_t r, size_t c) { return data[r * cols + c]; }
    double at(size_t r, size_t c) const { return data[r * cols + c]; }
};

// In-place radix-2 FFT, size must be a power of two.
void fft(std::vector<std::complex<double>>& buf);

std::vector<double> hann_window(size_t n);

ComplexSpectrogram stft(const AudioClip& clip, const SpectralConfig& cfg);

// Triangular mel filterbank over the magnitude spectrogram, then
// ln(value + 1e-8). Result is mel_bands x frames.
RealMatrix log_mel_features(const AudioClip& clip, const SpectralConfig& cfg);

// Filterbank weights, mel_bands x bins. Exposed for tests.
RealMatrix mel_filterbank(const SpectralConfig& cfg, int sample_rate);

} // namespace remfx
