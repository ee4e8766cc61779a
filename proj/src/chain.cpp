#include "remfx/chain.hpp"

#include <algorithm>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "remfx/loudness.hpp"

namespace remfx {

bool EffectChain::contains(EffectKind kind) const {
    return std::any_of(instances.begin(), instances.end(),
                       [kind](const EffectInstance& fx) { return fx.kind() == kind; });
}

namespace {

// draw `count` kinds without replacement from `pool`, order = draw order
std::vector<EffectKind> draw_kinds(std::vector<EffectKind> pool, size_t count, RngStream& rng) {
    std::vector<EffectKind> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        const size_t idx = rng.uniform_int(pool.size());
        out.push_back(pool[idx]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
    }
    return out;
}

std::vector<EffectKind> all_kinds() {
    return {EffectKind::DST, EffectKind::DRC, EffectKind::RVB, EffectKind::CHS, EffectKind::DLY};
}

} // namespace

EffectChain sample_chain(size_t n_effects_max, RngStream& rng) {
    if (n_effects_max > kNumEffects)
        throw std::invalid_argument("n_effects_max must be <= 5");
    const size_t k = rng.uniform_int(n_effects_max + 1);
    EffectChain chain;
    for (EffectKind kind : draw_kinds(all_kinds(), k, rng))
        chain.instances.push_back(sample_params(kind, rng));
    return chain;
}

AudioClip apply_chain(const AudioClip& clip, const EffectChain& chain) {
    AudioClip out = clip;
    for (const EffectInstance& fx : chain.instances)
        out = normalize_loudness(apply_effect(out, fx), kTargetLufs);
    return out;
}

FxAugChain sample_fxaug_chain(EffectKind target_kind, RngStream& rng) {
    const size_t k_d = rng.uniform_int(kNumEffects); // {0..4}
    std::vector<EffectKind> pool = all_kinds();
    pool.erase(std::remove(pool.begin(), pool.end(), target_kind), pool.end());

    FxAugChain out;
    for (EffectKind kind : draw_kinds(std::move(pool), k_d, rng))
        out.distractors.instances.push_back(sample_params(kind, rng));
    out.target_instance = sample_params(target_kind, rng);
    return out;
}

FxAugExample sample_fxaug_example(const AudioClip& source, EffectKind target_kind,
                                  RngStream& rng) {
    FxAugChain sampled = sample_fxaug_chain(target_kind, rng);
    FxAugExample ex;
    ex.distractors = std::move(sampled.distractors);
    ex.target_instance = sampled.target_instance;
    ex.target = apply_chain(source, ex.distractors);
    ex.input = normalize_loudness(apply_effect(ex.target, ex.target_instance), kTargetLufs);
    return ex;
}

uint64_t count_effect_configurations(unsigned n) {
    if (n > 12) throw std::invalid_argument("n must be <= 12");
    uint64_t total = 0;
    uint64_t perm = 1; // n!/(n-k)!
    for (unsigned k = 0; k <= n; ++k) {
        total += perm;
        perm *= (n - k);
    }
    return total;
}

nlohmann::json effect_chain_to_json(const EffectChain& chain) {
    nlohmann::json arr = nlohmann::json::array();
    for (const EffectInstance& fx : chain.instances) arr.push_back(effect_instance_to_json(fx));
    return arr;
}

EffectChain effect_chain_from_json(const nlohmann::json& j) {
    EffectChain chain;
    for (const auto& item : j) chain.instances.push_back(effect_instance_from_json(item));
    return chain;
}

} // namespace remfx
