#include "remfx/effects.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace remfx {

namespace {

constexpr double kTwoPi = 6.283185307179586;

double db_to_lin(double db) { return std::pow(10.0, db / 20.0); }

} // namespace

const char* effect_kind_name(EffectKind k) {
    switch (k) {
        case EffectKind::DST: return "DST";
        case EffectKind::DRC: return "DRC";
        case EffectKind::RVB: return "RVB";
        case EffectKind::CHS: return "CHS";
        case EffectKind::DLY: return "DLY";
    }
    return "?";
}

EffectKind effect_kind_from_name(const std::string& name) {
    if (name == "DST") return EffectKind::DST;
    if (name == "DRC") return EffectKind::DRC;
    if (name == "RVB") return EffectKind::RVB;
    if (name == "CHS") return EffectKind::CHS;
    if (name == "DLY") return EffectKind::DLY;
    throw std::invalid_argument("unknown effect kind: " + name);
}

EffectInstance sample_params(EffectKind kind, RngStream& rng) {
    switch (kind) {
        case EffectKind::DST:
            return {DistortionParams{rng.uniform(6.0, 30.0)}};
        case EffectKind::DRC:
            return {CompressorParams{rng.uniform(-40.0, -20.0), rng.uniform(2.0, 10.0),
                                     rng.uniform(1.0, 50.0), rng.uniform(50.0, 500.0)}};
        case EffectKind::RVB:
            return {ReverbParams{rng.uniform(0.75, 0.95), rng.uniform(0.2, 0.7)}};
        case EffectKind::CHS:
            return {ChorusParams{rng.uniform(0.5, 3.0), rng.uniform(2.0, 8.0),
                                 rng.uniform(0.3, 0.5)}};
        case EffectKind::DLY:
            return {DelayParams{rng.uniform(100.0, 400.0), rng.uniform(0.2, 0.6),
                                rng.uniform(0.15, 0.45)}};
    }
    throw std::invalid_argument("bad effect kind");
}

AudioClip apply_distortion(const AudioClip& clip, const DistortionParams& p) {
    const double g = db_to_lin(p.drive_db);
    AudioClip out = clip;
    for (float& s : out.samples) s = static_cast<float>(std::tanh(g * static_cast<double>(s)));
    return out;
}

AudioClip apply_compressor(const AudioClip& clip, const CompressorParams& p) {
    const double fs = clip.sample_rate;
    const double atk = std::exp(-1.0 / (p.attack_ms * 1e-3 * fs));
    const double rel = std::exp(-1.0 / (p.release_ms * 1e-3 * fs));
    AudioClip out = clip;
    double env = 0.0;
    for (size_t n = 0; n < out.samples.size(); ++n) {
        const double x = out.samples[n];
        const double rect = std::abs(x);
        const double coef = rect > env ? atk : rel;
        env = coef * env + (1.0 - coef) * rect;
        const double level_db = 20.0 * std::log10(env + 1e-8);
        const double compressed =
            p.threshold_db + (level_db - p.threshold_db) / p.ratio;
        const double gain_db = std::min(0.0, compressed - level_db);
        out.samples[n] = static_cast<float>(x * db_to_lin(gain_db));
    }
    return out;
}

AudioClip apply_reverb(const AudioClip& clip, const ReverbParams& p) {
    if (p.mix == 0.0) return clip;
    const double fs = clip.sample_rate;
    // classic Schroeder comb delays, scaled to 48 kHz
    static const double comb_ms[4] = {29.7, 37.1, 41.1, 43.7};
    static const double ap_ms[2] = {5.0, 1.7};
    const size_t T = clip.length();

    std::vector<double> wet(T, 0.0);
    for (double ms : comb_ms) {
        const size_t d = static_cast<size_t>(std::lround(ms * 1e-3 * fs));
        std::vector<double> buf(T, 0.0);
        for (size_t n = 0; n < T; ++n) {
            double y = (n >= d) ? clip.samples[n - d] + p.room_size * buf[n - d] : 0.0;
            buf[n] = y;
            wet[n] += y * 0.25;
        }
    }
    for (double ms : ap_ms) {
        const size_t d = static_cast<size_t>(std::lround(ms * 1e-3 * fs));
        const double g = 0.7;
        std::vector<double> x = wet;
        for (size_t n = 0; n < T; ++n) {
            const double xd = (n >= d) ? x[n - d] : 0.0;
            const double yd = (n >= d) ? wet[n - d] : 0.0;
            wet[n] = -g * x[n] + xd + g * yd;
        }
    }

    AudioClip out = clip;
    for (size_t n = 0; n < T; ++n)
        out.samples[n] = static_cast<float>((1.0 - p.mix) * clip.samples[n] + p.mix * wet[n]);
    return out;
}

AudioClip apply_chorus(const AudioClip& clip, const ChorusParams& p) {
    if (p.mix == 0.0) return clip;
    const double fs = clip.sample_rate;
    const size_t T = clip.length();
    AudioClip out = clip;
    const double phases[2] = {0.0, kTwoPi / 4.0};
    std::vector<double> voices(T, 0.0);
    for (double ph : phases) {
        for (size_t n = 0; n < T; ++n) {
            const double t = n / fs;
            const double delay_ms = 15.0 + p.depth_ms * std::sin(kTwoPi * p.rate_hz * t + ph);
            const double pos = static_cast<double>(n) - delay_ms * 1e-3 * fs;
            double v = 0.0;
            if (pos >= 0.0) {
                const size_t i0 = static_cast<size_t>(pos);
                const double frac = pos - static_cast<double>(i0);
                const double s0 = clip.samples[i0];
                const double s1 = (i0 + 1 < T) ? clip.samples[i0 + 1] : 0.0;
                v = s0 + frac * (s1 - s0);
            }
            voices[n] += v;
        }
    }
    for (size_t n = 0; n < T; ++n)
        out.samples[n] =
            static_cast<float>((1.0 - p.mix) * clip.samples[n] + (p.mix / 2.0) * voices[n]);
    return out;
}

AudioClip apply_delay(const AudioClip& clip, const DelayParams& p) {
    if (p.mix == 0.0) return clip;
    const double fs = clip.sample_rate;
    const size_t D = static_cast<size_t>(std::lround(p.delay_ms * 1e-3 * fs));
    const size_t T = clip.length();
    std::vector<double> w(T, 0.0);
    for (size_t n = D; n < T; ++n)
        w[n] = clip.samples[n - D] + p.feedback * w[n - D];
    AudioClip out = clip;
    for (size_t n = 0; n < T; ++n)
        out.samples[n] = static_cast<float>((1.0 - p.mix) * clip.samples[n] + p.mix * w[n]);
    return out;
}

AudioClip apply_effect(const AudioClip& clip, const EffectInstance& fx) {
    return std::visit(
        [&](const auto& p) -> AudioClip {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, DistortionParams>) return apply_distortion(clip, p);
            else if constexpr (std::is_same_v<P, CompressorParams>) return apply_compressor(clip, p);
            else if constexpr (std::is_same_v<P, ReverbParams>) return apply_reverb(clip, p);
            else if constexpr (std::is_same_v<P, ChorusParams>) return apply_chorus(clip, p);
            else return apply_delay(clip, p);
        },
        fx.params);
}

AudioClip oracle_inverse(const AudioClip& clip, const EffectInstance& fx) {
    if (const auto* dst = std::get_if<DistortionParams>(&fx.params)) {
        const double g = db_to_lin(dst->drive_db);
        AudioClip out = clip;
        for (float& s : out.samples) {
            const double y = std::clamp(static_cast<double>(s), -1.0 + 1e-7, 1.0 - 1e-7);
            s = static_cast<float>(std::atanh(y) / g);
        }
        return out;
    }
    if (const auto* dly = std::get_if<DelayParams>(&fx.params)) {
        // H^-1(z) = (1 - f z^-D) / ((1-m) + (m - f(1-m)) z^-D); the
        // denominator root stays inside the unit circle on the whole
        // parameter box since |m - f(1-m)| < 1-m there.
        const double fs = clip.sample_rate;
        const size_t D = static_cast<size_t>(std::lround(dly->delay_ms * 1e-3 * fs));
        const double m = dly->mix, f = dly->feedback;
        const double a0 = 1.0 - m;
        const double a1 = m - f * (1.0 - m);
        const size_t T = clip.length();
        std::vector<double> x(T, 0.0);
        for (size_t n = 0; n < T; ++n) {
            const double yd = (n >= D) ? clip.samples[n - D] : 0.0;
            const double xd = (n >= D) ? x[n - D] : 0.0;
            x[n] = (clip.samples[n] - f * yd - a1 * xd) / a0;
        }
        AudioClip out = clip;
        for (size_t n = 0; n < T; ++n) out.samples[n] = static_cast<float>(x[n]);
        return out;
    }
    throw UnsupportedOracle(std::string("no oracle inverse for ") +
                            effect_kind_name(fx.kind()));
}

nlohmann::json effect_instance_to_json(const EffectInstance& fx) {
    nlohmann::json params;
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, DistortionParams>) {
                params = {{"drive_db", p.drive_db}};
            } else if constexpr (std::is_same_v<P, CompressorParams>) {
                params = {{"threshold_db", p.threshold_db},
                          {"ratio", p.ratio},
                          {"attack_ms", p.attack_ms},
                          {"release_ms", p.release_ms}};
            } else if constexpr (std::is_same_v<P, ReverbParams>) {
                params = {{"room_size", p.room_size}, {"mix", p.mix}};
            } else if constexpr (std::is_same_v<P, ChorusParams>) {
                params = {{"rate_hz", p.rate_hz}, {"depth_ms", p.depth_ms}, {"mix", p.mix}};
            } else {
                params = {{"delay_ms", p.delay_ms}, {"feedback", p.feedback}, {"mix", p.mix}};
            }
        },
        fx.params);
    return {{"kind", effect_kind_name(fx.kind())}, {"params", params}};
}

EffectInstance effect_instance_from_json(const nlohmann::json& j) {
    const EffectKind kind = effect_kind_from_name(j.at("kind").get<std::string>());
    const nlohmann::json& p = j.at("params");
    switch (kind) {
        case EffectKind::DST:
            return {DistortionParams{p.at("drive_db").get<double>()}};
        case EffectKind::DRC:
            return {CompressorParams{p.at("threshold_db").get<double>(), p.at("ratio").get<double>(),
                                     p.at("attack_ms").get<double>(),
                                     p.at("release_ms").get<double>()}};
        case EffectKind::RVB:
            return {ReverbParams{p.at("room_size").get<double>(), p.at("mix").get<double>()}};
        case EffectKind::CHS:
            return {ChorusParams{p.at("rate_hz").get<double>(), p.at("depth_ms").get<double>(),
                                 p.at("mix").get<double>()}};
        case EffectKind::DLY:
            return {DelayParams{p.at("delay_ms").get<double>(), p.at("feedback").get<double>(),
                                p.at("mix").get<double>()}};
    }
    throw std::invalid_argument("bad effect kind");
}

} // namespace remfx
