#include "remfx/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "remfx/loudness.hpp"
#include "remfx/rng.hpp"

namespace remfx {

namespace {

namespace fs = std::filesystem;

double measured_or_silence(const AudioClip& clip) {
    try {
        return measure_integrated_loudness(clip).lufs;
    } catch (const GatedSilence&) {
        return -1e9;
    }
}

AudioClip scaled(const AudioClip& clip, double g) {
    AudioClip out = clip;
    for (float& s : out.samples) s = static_cast<float>(s * g);
    return out;
}

// The pipeline normalizes to -20 LUFS after each effect, so an
// oracle-flavor DST backend sees c * tanh(g*x) for an unknown gain.
// atanh is nonlinear, so the gain must be recovered first: loudness of
// atanh(c*y)/g is monotone in c, and the true c makes it land on the
// -20 LUFS level the pre-effect signal had. Bisection on c.
AudioClip invert_distortion_normalized(const AudioClip& clip, const DistortionParams& p) {
    double peak = 0.0;
    for (float s : clip.samples) peak = std::max(peak, static_cast<double>(std::abs(s)));
    if (peak == 0.0) return clip;

    const EffectInstance fx{p};
    const double hi = (1.0 - 1e-6) / peak;
    if (measured_or_silence(oracle_inverse(scaled(clip, hi), fx)) <= kTargetLufs)
        return oracle_inverse(scaled(clip, hi), fx);

    double log_lo = std::log(hi) - 16.0; // 7 decades below
    double log_hi = std::log(hi);
    for (int it = 0; it < 45; ++it) {
        const double mid = 0.5 * (log_lo + log_hi);
        const double l = measured_or_silence(oracle_inverse(scaled(clip, std::exp(mid)), fx));
        (l > kTargetLufs ? log_hi : log_lo) = mid;
    }
    return oracle_inverse(scaled(clip, std::exp(0.5 * (log_lo + log_hi))), fx);
}

AudioClip run_external(const RemovalBackend& backend, const AudioClip& clip) {
    static std::atomic<uint64_t> counter{0};
    const fs::path dir = fs::temp_directory_path() /
                         ("remfx-" + std::to_string(::getpid()) + "-" +
                          std::to_string(counter.fetch_add(1)));
    fs::create_directories(dir);
    const std::string in_path = (dir / "in.wav").string();
    const std::string out_path = (dir / "out.wav").string();
    save_wav(clip, in_path);

    std::vector<std::string> argv_s = backend.command;
    argv_s.push_back(in_path);
    argv_s.push_back(out_path);
    std::vector<char*> argv;
    for (auto& s : argv_s) argv.push_back(s.data());
    argv.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) throw BackendFailed("fork failed");
    if (pid == 0) {
        ::setenv("REMFX_EFFECT", effect_kind_name(backend.kind_handled), 1);
        ::execvp(argv[0], argv.data());
        ::_exit(127);
    }
    int status = 0;
    ::waitpid(pid, &status, 0);

    struct Cleanup {
        fs::path dir;
        ~Cleanup() {
            std::error_code ec;
            fs::remove_all(dir, ec);
        }
    } cleanup{dir};

    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
        throw BackendFailed("backend command '" + backend.command.front() +
                            "' exited with status " + std::to_string(WEXITSTATUS(status)));
    AudioClip out;
    try {
        out = load_wav(out_path);
    } catch (const AudioError& e) {
        throw BackendFailed(std::string("backend output unreadable: ") + e.what());
    }
    if (out.length() != clip.length())
        throw LengthChanged("backend changed clip length from " +
                            std::to_string(clip.length()) + " to " +
                            std::to_string(out.length()));
    return out;
}

// pure function of (seed, selected set)
std::vector<EffectKind> random_order(std::vector<EffectKind> kinds, uint64_t seed) {
    uint64_t set_id = 0;
    for (EffectKind k : kinds) set_id |= 1ULL << static_cast<unsigned>(k);
    RngStream rng(seed, set_id);
    for (size_t i = kinds.size(); i > 1; --i)
        std::swap(kinds[i - 1], kinds[rng.uniform_int(i)]);
    return kinds;
}

BackendFlavor flavor_from_name(const std::string& name) {
    if (name == "identity") return BackendFlavor::Identity;
    if (name == "oracle") return BackendFlavor::Oracle;
    if (name == "external") return BackendFlavor::External;
    throw BadCommand("unknown backend flavor: " + name);
}

void validate_backend(const RemovalBackend& b) {
    if (b.flavor == BackendFlavor::Oracle && b.kind_handled != EffectKind::DST &&
        b.kind_handled != EffectKind::DLY)
        throw UnsupportedOracle(std::string("oracle backend not available for ") +
                                effect_kind_name(b.kind_handled));
    if (b.flavor == BackendFlavor::External && b.command.empty())
        throw BadCommand(std::string("external backend for ") +
                         effect_kind_name(b.kind_handled) + " has an empty command");
}

} // namespace

BackendRegistry identity_registry() {
    BackendRegistry reg;
    for (size_t i = 0; i < kNumEffects; ++i)
        reg.backends[i] = {static_cast<EffectKind>(i), BackendFlavor::Identity, {}};
    return reg;
}

BackendRegistry load_registry(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open " + path);
    nlohmann::json j;
    in >> j;

    BackendRegistry reg;
    std::array<bool, kNumEffects> seen{};
    for (const auto& [key, spec] : j.items()) {
        EffectKind kind;
        try {
            kind = effect_kind_from_name(key);
        } catch (const std::invalid_argument&) {
            throw UnknownKind("registry key '" + key + "' is not an effect kind");
        }
        RemovalBackend b;
        b.kind_handled = kind;
        b.flavor = flavor_from_name(spec.at("flavor").get<std::string>());
        if (spec.contains("command"))
            b.command = spec["command"].get<std::vector<std::string>>();
        validate_backend(b);
        reg.backends[static_cast<size_t>(kind)] = b;
        seen[static_cast<size_t>(kind)] = true;
    }
    for (size_t i = 0; i < kNumEffects; ++i)
        if (!seen[i])
            throw MissingBackend(std::string("registry has no backend for ") +
                                 effect_kind_name(static_cast<EffectKind>(i)));
    return reg;
}

AudioClip run_backend(const RemovalBackend& backend, const AudioClip& clip,
                      const std::optional<EffectInstance>& oracle_params) {
    switch (backend.flavor) {
        case BackendFlavor::Identity:
            return clip;
        case BackendFlavor::Oracle: {
            if (!oracle_params)
                throw OracleParamsMissing(std::string("oracle backend for ") +
                                          effect_kind_name(backend.kind_handled) +
                                          " needs effect parameters");
            if (const auto* dst = std::get_if<DistortionParams>(&oracle_params->params))
                return invert_distortion_normalized(clip, *dst);
            // delay inverse is linear, so the unknown normalization gain
            // passes through; restore the pipeline level afterwards
            AudioClip out = oracle_inverse(clip, *oracle_params);
            try {
                return normalize_loudness(out, kTargetLufs);
            } catch (const GatedSilence&) {
                return out;
            }
        }
        case BackendFlavor::External:
            return run_external(backend, clip);
    }
    throw BackendFailed("bad backend flavor");
}

OrchestratorMode orchestrator_mode_from_name(const std::string& name) {
    if (name == "all") return OrchestratorMode::All;
    if (name == "oracle") return OrchestratorMode::Oracle;
    if (name == "detect") return OrchestratorMode::Detect;
    throw ModeMisconfigured("unknown mode: " + name);
}

ComposeResult compose_and_run(const AudioClip& clip, OrchestratorMode mode,
                              const BackendRegistry& registry, const DetectorModel* detector,
                              double threshold, const EffectChain* true_chain,
                              BackendOrdering ordering, uint64_t ordering_seed) {
    std::vector<EffectKind> selected;
    std::array<const EffectInstance*, kNumEffects> params{};

    switch (mode) {
        case OrchestratorMode::Detect: {
            if (detector == nullptr)
                throw ModeMisconfigured("Detect mode requires a detector model");
            selected = predict_effects(*detector, clip, threshold);
            if (selected.empty()) return {clip, {}}; // bypass
            selected = random_order(std::move(selected), ordering_seed);
            break;
        }
        case OrchestratorMode::Oracle: {
            if (true_chain == nullptr)
                throw ModeMisconfigured("Oracle mode requires the true chain");
            for (const EffectInstance& fx : true_chain->instances) {
                selected.push_back(fx.kind());
                params[static_cast<size_t>(fx.kind())] = &fx;
            }
            if (ordering == BackendOrdering::GroundTruth) {
                // unwrap: last applied effect is removed first
                std::reverse(selected.begin(), selected.end());
            } else {
                selected = random_order(std::move(selected), ordering_seed);
            }
            break;
        }
        case OrchestratorMode::All: {
            if (ordering == BackendOrdering::GroundTruth)
                throw ModeMisconfigured("ground-truth ordering is only valid for Oracle mode");
            for (size_t i = 0; i < kNumEffects; ++i)
                selected.push_back(static_cast<EffectKind>(i));
            selected = random_order(std::move(selected), ordering_seed);
            break;
        }
    }

    ComposeResult result{clip, {}};
    for (EffectKind kind : selected) {
        const RemovalBackend& backend = registry.for_kind(kind);
        std::optional<EffectInstance> oracle_params;
        if (mode == OrchestratorMode::Oracle && params[static_cast<size_t>(kind)] != nullptr)
            oracle_params = *params[static_cast<size_t>(kind)];
        result.output = run_backend(backend, result.output, oracle_params);
        result.applied.push_back(kind);
    }
    return result;
}

} // namespace remfx
