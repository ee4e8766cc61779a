#pragma once

#include <string>
#include <variant>

#include "remfx/audio.hpp"
#include "remfx/rng.hpp"

#include <nlohmann/json_fwd.hpp>

namespace remfx {

struct UnsupportedOracle : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Stable integer codes 0..4, in this order.
enum class EffectKind { DST = 0, DRC = 1, RVB = 2, CHS = 3, DLY = 4 };
constexpr size_t kNumEffects = 5;

const char* effect_kind_name(EffectKind k);
EffectKind effect_kind_from_name(const std::string& name);

struct DistortionParams {
    double drive_db; // [6, 30]
};

struct CompressorParams {
    double threshold_db; // [-40, -20]
    double ratio;        // [2, 10]
    double attack_ms;    // [1, 50]
    double release_ms;   // [50, 500]
};

struct ReverbParams {
    double room_size; // comb feedback, [0.75, 0.95]
    double mix;       // [0.2, 0.7]
};

struct ChorusParams {
    double rate_hz;  // [0.5, 3]
    double depth_ms; // [2, 8]
    double mix;      // [0.3, 0.5]
};

struct DelayParams {
    double delay_ms; // [100, 400]
    double feedback; // [0.2, 0.6]
    double mix;      // [0.15, 0.45]
};

// One effect f with its parameters.
struct EffectInstance {
    std::variant<DistortionParams, CompressorParams, ReverbParams, ChorusParams, DelayParams>
        params;

    EffectKind kind() const { return static_cast<EffectKind>(params.index()); }
};

// Each parameter drawn independently and uniformly from its closed range.
EffectInstance sample_params(EffectKind kind, RngStream& rng);

AudioClip apply_distortion(const AudioClip& clip, const DistortionParams& p);
AudioClip apply_compressor(const AudioClip& clip, const CompressorParams& p);
AudioClip apply_reverb(const AudioClip& clip, const ReverbParams& p);
AudioClip apply_chorus(const AudioClip& clip, const ChorusParams& p);
AudioClip apply_delay(const AudioClip& clip, const DelayParams& p);

AudioClip apply_effect(const AudioClip& clip, const EffectInstance& fx);

// Exact analytic inverse; only DST and DLY are invertible. Throws
// UnsupportedOracle for the other kinds.
AudioClip oracle_inverse(const AudioClip& clip, const EffectInstance& fx);

nlohmann::json effect_instance_to_json(const EffectInstance& fx);
EffectInstance effect_instance_from_json(const nlohmann::json& j);

} // namespace remfx
