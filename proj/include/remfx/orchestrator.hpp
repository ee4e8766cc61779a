#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "remfx/audio.hpp"
#include "remfx/chain.hpp"
#include "remfx/detector.hpp"
#include "remfx/effects.hpp"

namespace remfx {

struct BackendFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LengthChanged : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OracleParamsMissing : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingBackend : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownKind : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BadCommand : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ModeMisconfigured : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BackendFlavor { Identity, Oracle, External };

// One removal function per effect kind. External backends run as a
// subprocess: argv [..., input.wav, output.wav], env REMFX_EFFECT set
// to the kind name, exit 0 on success, output length must match.
struct RemovalBackend {
    EffectKind kind_handled = EffectKind::DST;
    BackendFlavor flavor = BackendFlavor::Identity;
    std::vector<std::string> command; // external only
};

struct BackendRegistry {
    std::array<RemovalBackend, kNumEffects> backends{};

    const RemovalBackend& for_kind(EffectKind k) const {
        return backends[static_cast<size_t>(k)];
    }
};

BackendRegistry identity_registry();
// {"DST": {"flavor": "identity"}, "DLY": {"flavor": "oracle"}, ...};
// all five kinds must be present.
BackendRegistry load_registry(const std::string& path);

// Oracle-flavor backends invert the effect analytically and restore the
// pipeline's -20 LUFS level, undoing the post-effect normalization the
// dataset pipeline applied. oracle_params is required for them.
AudioClip run_backend(const RemovalBackend& backend, const AudioClip& clip,
                      const std::optional<EffectInstance>& oracle_params = std::nullopt);

enum class OrchestratorMode { All, Oracle, Detect };
enum class BackendOrdering { GroundTruth, Random }; // ground-truth: Oracle only

OrchestratorMode orchestrator_mode_from_name(const std::string& name);

struct ComposeResult {
    AudioClip output;
    std::vector<EffectKind> applied; // in execution order
};

// Detect: threshold the detector, bypass bit-exactly when nothing is
// detected. Oracle: use the true chain, ground-truth ordering removes
// effects in reverse application order and forwards parameters to
// oracle-flavor backends. All: every backend, seeded-random order.
ComposeResult compose_and_run(const AudioClip& clip, OrchestratorMode mode,
                              const BackendRegistry& registry,
                              const DetectorModel* detector = nullptr,
                              double threshold = 0.5,
                              const EffectChain* true_chain = nullptr,
                              BackendOrdering ordering = BackendOrdering::Random,
                              uint64_t ordering_seed = 0);

} // namespace remfx
