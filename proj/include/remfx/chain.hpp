#pragma once

#include <cstdint>
#include <vector>

#include "remfx/audio.hpp"
#include "remfx/effects.hpp"
#include "remfx/rng.hpp"

#include <nlohmann/json_fwd.hpp>

namespace remfx {

// Ordered, duplicate-free list of up to five effect instances.
struct EffectChain {
    std::vector<EffectInstance> instances;

    size_t size() const { return instances.size(); }
    bool contains(EffectKind kind) const;
};

struct FxAugExample {
    AudioClip input;  // distractors then target effect, normalized
    AudioClip target; // distractors only
    EffectInstance target_instance;
    EffectChain distractors;
};

// K uniform on {0..n_effects_max}, kinds without replacement, order =
// draw order, params uniform per kind.
EffectChain sample_chain(size_t n_effects_max, RngStream& rng);

// Fold of apply_effect with loudness normalization to -20 LUFS after
// each effect. The input is expected to be pre-normalized.
AudioClip apply_chain(const AudioClip& clip, const EffectChain& chain);

struct FxAugChain {
    EffectChain distractors;
    EffectInstance target_instance;
};

// Distractor count uniform on {0..4}, distractor kinds drawn without
// replacement from the other four effects.
FxAugChain sample_fxaug_chain(EffectKind target_kind, RngStream& rng);

// sample_fxaug_chain plus the audio: target = distractors applied,
// input = target effect applied on top, both at -20 LUFS.
FxAugExample sample_fxaug_example(const AudioClip& source, EffectKind target_kind,
                                  RngStream& rng);

// Sum over k of n!/(n-k)!: the number of ordered duplicate-free effect
// configurations of at most n effects.
uint64_t count_effect_configurations(unsigned n);

nlohmann::json effect_chain_to_json(const EffectChain& chain);
EffectChain effect_chain_from_json(const nlohmann::json& j);

} // namespace remfx
