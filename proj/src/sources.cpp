#include "remfx/sources.hpp"

#include <algorithm>
#include <cmath>

#include "remfx/rng.hpp"

namespace remfx {

namespace {

constexpr double kTwoPi = 6.283185307179586;

void peak_normalize(std::vector<float>& s, float target_peak) {
    float peak = 0.0f;
    for (float v : s) peak = std::max(peak, std::abs(v));
    if (peak > 0.0f) {
        const float g = target_peak / peak;
        for (float& v : s) v *= g;
    }
}

// Karplus-Strong plucked strings, one pluck roughly every 0.8 s.
void gen_pluck(std::vector<float>& out, RngStream& rng) {
    const double fs = kSampleRate;
    const size_t note_len = static_cast<size_t>(0.8 * fs);
    static const double scale[] = {110.0, 146.83, 196.0, 220.0, 293.66, 329.63, 440.0};
    for (size_t onset = 0; onset < out.size(); onset += note_len) {
        const double f0 = scale[rng.uniform_int(7)];
        const size_t period = static_cast<size_t>(std::lround(fs / f0));
        std::vector<double> buf(period);
        for (auto& b : buf) b = rng.uniform(-1.0, 1.0);
        size_t idx = 0;
        const size_t span = std::min(note_len + period, out.size() - onset);
        for (size_t n = 0; n < span; ++n) {
            const double cur = buf[idx];
            const size_t nxt = (idx + 1) % period;
            buf[idx] = 0.996 * 0.5 * (cur + buf[nxt]);
            out[onset + n] += static_cast<float>(cur);
            idx = nxt;
        }
    }
}

// Noise burst plus a decaying sine body, hits on a 0.5 s grid. The grid
// leaves the final stretch quiet so onset energy dominates the head.
void gen_drum_hit(std::vector<float>& out, RngStream& rng) {
    const double fs = kSampleRate;
    const size_t hit_len = static_cast<size_t>(0.4 * fs);
    const size_t stride = static_cast<size_t>(0.5 * fs);
    for (size_t onset = 0; onset + hit_len + static_cast<size_t>(0.15 * fs) < out.size();
         onset += stride) {
        const double body_hz = rng.uniform(55.0, 120.0);
        const double body_amp = rng.uniform(0.6, 1.0);
        const double noise_amp = rng.uniform(0.4, 0.8);
        for (size_t n = 0; n < hit_len && onset + n < out.size(); ++n) {
            const double t = n / fs;
            const double noise = rng.uniform(-1.0, 1.0) * noise_amp * std::exp(-t / 0.015);
            const double body = body_amp * std::sin(kTwoPi * body_hz * t) * std::exp(-t / 0.12);
            out[onset + n] += static_cast<float>(noise + body);
        }
    }
}

// Low-passed sawtooth with a per-note envelope.
void gen_bass(std::vector<float>& out, RngStream& rng) {
    const double fs = kSampleRate;
    const size_t note_len = static_cast<size_t>(0.5 * fs);
    static const double roots[] = {41.2, 49.0, 55.0, 61.74, 73.42, 82.41};
    double lp = 0.0;
    const double cutoff_hz = 250.0;
    const double a = std::exp(-kTwoPi * cutoff_hz / fs);
    for (size_t onset = 0; onset < out.size(); onset += note_len) {
        const double f0 = roots[rng.uniform_int(6)];
        double phase = rng.uniform();
        const size_t span = std::min(note_len, out.size() - onset);
        for (size_t n = 0; n < span; ++n) {
            const double t = n / fs;
            const double saw = 2.0 * phase - 1.0;
            phase += f0 / fs;
            if (phase >= 1.0) phase -= 1.0;
            const double env = std::min(t / 0.01, 1.0) * std::exp(-t / 0.6);
            lp = a * lp + (1.0 - a) * saw * env;
            out[onset + n] += static_cast<float>(lp);
        }
    }
}

struct Biquad {
    double b0, b1, b2, a1, a2;
    double z1 = 0.0, z2 = 0.0;
    double tick(double x) {
        const double y = b0 * x + z1;
        z1 = b1 * x - a1 * y + z2;
        z2 = b2 * x - a2 * y;
        return y;
    }
};

Biquad resonator(double freq_hz, double q) {
    // RBJ constant-skirt bandpass
    const double w0 = kTwoPi * freq_hz / kSampleRate;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad bq{};
    bq.b0 = std::sin(w0) / 2.0 / a0;
    bq.b1 = 0.0;
    bq.b2 = -bq.b0;
    bq.a1 = -2.0 * std::cos(w0) / a0;
    bq.a2 = (1.0 - alpha) / a0;
    return bq;
}

// Formant-filtered glottal pulse train with vibrato and a slow
// syllable-like amplitude contour.
void gen_vocal_like(std::vector<float>& out, RngStream& rng) {
    const double fs = kSampleRate;
    const double f0 = rng.uniform(110.0, 240.0);
    const double vib_hz = rng.uniform(4.5, 6.5);
    const double vib_depth = 0.025;
    const double syllable_hz = rng.uniform(1.5, 3.0);
    Biquad f1 = resonator(rng.uniform(600.0, 850.0), 8.0);
    Biquad f2 = resonator(rng.uniform(1000.0, 1400.0), 10.0);
    Biquad f3 = resonator(rng.uniform(2300.0, 2900.0), 12.0);
    double phase = 0.0;
    for (size_t n = 0; n < out.size(); ++n) {
        const double t = n / fs;
        const double inst_f0 = f0 * (1.0 + vib_depth * std::sin(kTwoPi * vib_hz * t));
        phase += inst_f0 / fs;
        double pulse = 0.0;
        if (phase >= 1.0) {
            phase -= 1.0;
            pulse = 1.0;
        }
        const double excited = pulse + 0.02 * rng.uniform(-1.0, 1.0); // breath noise
        const double voiced = f1.tick(excited) + 0.7 * f2.tick(excited) + 0.4 * f3.tick(excited);
        const double env = 0.65 + 0.35 * std::sin(kTwoPi * syllable_hz * t);
        out[n] += static_cast<float>(voiced * env);
    }
}

AudioClip ingest(const SourceSpec& spec, size_t length) {
    AudioClip clip;
    try {
        clip = load_wav(spec.path);
    } catch (const AudioError& e) {
        throw IngestFormatError(std::string("ingest: ") + e.what());
    }
    if (clip.length() < length)
        throw IngestFormatError("ingest: " + spec.path + " shorter than requested length");
    clip.samples.resize(length);
    return clip;
}

} // namespace

const char* source_family_name(SourceFamily f) {
    switch (f) {
        case SourceFamily::Pluck: return "pluck";
        case SourceFamily::DrumHit: return "drum-hit";
        case SourceFamily::Bass: return "bass";
        case SourceFamily::VocalLike: return "vocal-like";
        case SourceFamily::Ingest: return "ingest";
    }
    return "?";
}

SourceFamily source_family_from_name(const std::string& name) {
    if (name == "pluck") return SourceFamily::Pluck;
    if (name == "drum-hit") return SourceFamily::DrumHit;
    if (name == "bass") return SourceFamily::Bass;
    if (name == "vocal-like") return SourceFamily::VocalLike;
    if (name == "ingest") return SourceFamily::Ingest;
    throw std::invalid_argument("unknown source family: " + name);
}

AudioClip synthesize_source(const SourceSpec& spec, size_t length) {
    if (length < 1) throw std::invalid_argument("source length must be >= 1");
    if (spec.family == SourceFamily::Ingest) return ingest(spec, length);

    AudioClip clip;
    clip.sample_rate = kSampleRate;
    clip.samples.assign(length, 0.0f);
    RngStream rng(spec.seed, static_cast<uint64_t>(spec.family));
    switch (spec.family) {
        case SourceFamily::Pluck: gen_pluck(clip.samples, rng); break;
        case SourceFamily::DrumHit: gen_drum_hit(clip.samples, rng); break;
        case SourceFamily::Bass: gen_bass(clip.samples, rng); break;
        case SourceFamily::VocalLike: gen_vocal_like(clip.samples, rng); break;
        case SourceFamily::Ingest: break; // handled above
    }
    peak_normalize(clip.samples, 0.5f);
    return clip;
}

} // namespace remfx
