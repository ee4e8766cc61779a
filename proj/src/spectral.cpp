#include "remfx/spectral.hpp"

#include <cmath>
#include <stdexcept>

namespace remfx {

namespace {

constexpr double kTwoPi = 6.283185307179586;

bool is_pow2(size_t n) { return n > 0 && (n & (n - 1)) == 0; }

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

} // namespace

void fft(std::vector<std::complex<double>>& buf) {
    const size_t n = buf.size();
    if (!is_pow2(n)) throw std::invalid_argument("fft size must be a power of two");
    // bit-reversal permutation
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(buf[i], buf[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -kTwoPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = buf[i + k];
                const std::complex<double> v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

std::vector<double> hann_window(size_t n) {
    std::vector<double> w(n);
    for (size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n));
    return w;
}

ComplexSpectrogram stft(const AudioClip& clip, const SpectralConfig& cfg) {
    if (!is_pow2(cfg.fft_size)) throw std::invalid_argument("fft_size must be a power of two");
    if (cfg.hop_size == 0 || cfg.hop_size > cfg.fft_size)
        throw std::invalid_argument("hop_size must be in [1, fft_size]");
    if (clip.length() < cfg.fft_size)
        throw ClipTooShort("clip shorter than fft_size");

    const size_t frames = 1 + (clip.length() - cfg.fft_size) / cfg.hop_size;
    const size_t bins = cfg.fft_size / 2 + 1;
    const std::vector<double> win = hann_window(cfg.fft_size);

    ComplexSpectrogram out;
    out.bins = bins;
    out.frames = frames;
    out.data.resize(bins * frames);

    std::vector<std::complex<double>> buf(cfg.fft_size);
    for (size_t f = 0; f < frames; ++f) {
        const size_t off = f * cfg.hop_size;
        for (size_t i = 0; i < cfg.fft_size; ++i)
            buf[i] = {static_cast<double>(clip.samples[off + i]) * win[i], 0.0};
        fft(buf);
        for (size_t b = 0; b < bins; ++b) out.at(b, f) = buf[b];
    }
    return out;
}

RealMatrix mel_filterbank(const SpectralConfig& cfg, int sample_rate) {
    if (cfg.mel_bands < 1) throw std::invalid_argument("mel_bands must be >= 1");
    const double fmax = std::min(cfg.fmax_hz, sample_rate / 2.0);
    const size_t bins = cfg.fft_size / 2 + 1;
    const double mel_lo = hz_to_mel(cfg.fmin_hz);
    const double mel_hi = hz_to_mel(fmax);

    std::vector<double> edges(cfg.mel_bands + 2);
    for (size_t i = 0; i < edges.size(); ++i)
        edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                          static_cast<double>(cfg.mel_bands + 1));

    RealMatrix fb;
    fb.rows = cfg.mel_bands;
    fb.cols = bins;
    fb.data.assign(fb.rows * fb.cols, 0.0);
    const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(cfg.fft_size);
    for (size_t m = 0; m < cfg.mel_bands; ++m) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        for (size_t b = 0; b < bins; ++b) {
            const double f = b * bin_hz;
            double w = 0.0;
            if (f > lo && f < mid)
                w = (f - lo) / (mid - lo);
            else if (f >= mid && f < hi)
                w = (hi - f) / (hi - mid);
            fb.at(m, b) = w;
        }
    }
    return fb;
}

RealMatrix log_mel_features(const AudioClip& clip, const SpectralConfig& cfg) {
    const ComplexSpectrogram spec = stft(clip, cfg);
    const RealMatrix fb = mel_filterbank(cfg, clip.sample_rate);

    // support ranges: each triangle touches a contiguous run of bins
    std::vector<size_t> first(fb.rows, fb.cols), last(fb.rows, 0);
    for (size_t m = 0; m < fb.rows; ++m)
        for (size_t b = 0; b < fb.cols; ++b)
            if (fb.at(m, b) != 0.0) {
                first[m] = std::min(first[m], b);
                last[m] = b + 1;
            }

    RealMatrix out;
    out.rows = cfg.mel_bands;
    out.cols = spec.frames;
    out.data.resize(out.rows * out.cols);
    std::vector<double> mag(spec.bins);
    for (size_t f = 0; f < spec.frames; ++f) {
        for (size_t b = 0; b < spec.bins; ++b) mag[b] = std::abs(spec.at(b, f));
        for (size_t m = 0; m < cfg.mel_bands; ++m) {
            double acc = 0.0;
            for (size_t b = first[m]; b < last[m]; ++b) acc += fb.at(m, b) * mag[b];
            out.at(m, f) = std::log(acc + kLogEps);
        }
    }
    return out;
}

} // namespace remfx
