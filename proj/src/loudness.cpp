#include "remfx/loudness.hpp"

#include <cmath>
#include <vector>

namespace remfx {

namespace {

struct BiquadCoeffs {
    double b0, b1, b2, a1, a2;
};

// BS.1770-4 K-weighting at 48 kHz: stage 1 high shelf, stage 2 high pass.
constexpr BiquadCoeffs kShelf{1.53512485958697, -2.69169618940638, 1.19839281085285,
                              -1.69065929318241, 0.73248077421585};
constexpr BiquadCoeffs kHighpass{1.0, -2.0, 1.0, -1.99004745483398, 0.99007225036621};

std::vector<double> filter(const std::vector<float>& x, const BiquadCoeffs& c) {
    std::vector<double> y(x.size());
    double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
    for (size_t n = 0; n < x.size(); ++n) {
        const double xn = x[n];
        const double yn = c.b0 * xn + c.b1 * x1 + c.b2 * x2 - c.a1 * y1 - c.a2 * y2;
        x2 = x1;
        x1 = xn;
        y2 = y1;
        y1 = yn;
        y[n] = yn;
    }
    return y;
}

std::vector<double> filter(const std::vector<double>& x, const BiquadCoeffs& c) {
    std::vector<double> y(x.size());
    double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
    for (size_t n = 0; n < x.size(); ++n) {
        const double xn = x[n];
        const double yn = c.b0 * xn + c.b1 * x1 + c.b2 * x2 - c.a1 * y1 - c.a2 * y2;
        x2 = x1;
        x1 = xn;
        y2 = y1;
        y1 = yn;
        y[n] = yn;
    }
    return y;
}

double block_loudness(double mean_square) {
    return -0.691 + 10.0 * std::log10(mean_square + 1e-30);
}

} // namespace

LoudnessReading measure_integrated_loudness(const AudioClip& clip) {
    const size_t block = static_cast<size_t>(0.400 * clip.sample_rate); // 19200
    const size_t hop = block / 4;                                       // 75% overlap
    if (clip.length() < block)
        throw GatedSilence("clip shorter than one 400 ms gating block");

    const std::vector<double> weighted = filter(filter(clip.samples, kShelf), kHighpass);

    const size_t num_blocks = 1 + (weighted.size() - block) / hop;
    std::vector<double> ms(num_blocks);
    for (size_t i = 0; i < num_blocks; ++i) {
        double acc = 0.0;
        const size_t off = i * hop;
        for (size_t n = 0; n < block; ++n) acc += weighted[off + n] * weighted[off + n];
        ms[i] = acc / static_cast<double>(block);
    }

    // absolute gate at -70 LKFS
    double sum = 0.0;
    size_t count = 0;
    for (double v : ms)
        if (block_loudness(v) > -70.0) {
            sum += v;
            ++count;
        }
    if (count == 0) throw GatedSilence("no block above the -70 LKFS absolute gate");

    // relative gate 10 LU below the absolute-gated mean
    const double rel_threshold = block_loudness(sum / static_cast<double>(count)) - 10.0;
    sum = 0.0;
    count = 0;
    for (double v : ms) {
        const double l = block_loudness(v);
        if (l > -70.0 && l > rel_threshold) {
            sum += v;
            ++count;
        }
    }
    if (count == 0) throw GatedSilence("no block above the relative gate");

    return {block_loudness(sum / static_cast<double>(count)), count};
}

AudioClip normalize_loudness(const AudioClip& clip, double target_lufs) {
    const LoudnessReading reading = measure_integrated_loudness(clip);
    const double gain = std::pow(10.0, (target_lufs - reading.lufs) / 20.0);
    AudioClip out = clip;
    for (float& s : out.samples) s = static_cast<float>(s * gain);
    return out;
}

} // namespace remfx
