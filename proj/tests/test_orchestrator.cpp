#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "remfx/chain.hpp"
#include "remfx/loudness.hpp"
#include "remfx/metrics.hpp"
#include "remfx/orchestrator.hpp"
#include "test_helpers.hpp"

using namespace remfx;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() /
           ("remfx_orch_" + std::to_string(::getpid()) + "_" + name);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

AudioClip normalized_noise(uint64_t seed, size_t length = 48000) {
    return normalize_loudness(test_helpers::noise(seed, length, 0.5), kTargetLufs);
}

DetectorModel zero_detector() {
    DetectorModel m;
    m.hidden_dim = 4;
    m.w1.assign(4 * kFeatureDim, 0.0);
    m.b1.assign(4, 0.0);
    m.w2.assign(kNumEffects * 4, 0.0);
    m.b2.assign(kNumEffects, 0.0);
    return m;
}

} // namespace

TEST_CASE("identity registry passes audio through bit-exactly") {
    const BackendRegistry reg = identity_registry();
    const AudioClip x = normalized_noise(1, 24000);
    for (size_t i = 0; i < kNumEffects; ++i) {
        const RemovalBackend& b = reg.for_kind(static_cast<EffectKind>(i));
        CHECK(b.flavor == BackendFlavor::Identity);
        CHECK(run_backend(b, x).samples == x.samples);
    }
}

TEST_CASE("load_registry") {
    const fs::path path = temp_file("registry.json");

    SUBCASE("parses a full registry") {
        write_text(path, R"({
            "DST": {"flavor": "oracle"},
            "DRC": {"flavor": "identity"},
            "RVB": {"flavor": "identity"},
            "CHS": {"flavor": "external", "command": ["/bin/true"]},
            "DLY": {"flavor": "oracle"}
        })");
        const BackendRegistry reg = load_registry(path.string());
        CHECK(reg.for_kind(EffectKind::DST).flavor == BackendFlavor::Oracle);
        CHECK(reg.for_kind(EffectKind::DRC).flavor == BackendFlavor::Identity);
        CHECK(reg.for_kind(EffectKind::CHS).flavor == BackendFlavor::External);
        CHECK(reg.for_kind(EffectKind::CHS).command ==
              std::vector<std::string>{"/bin/true"});
        CHECK(reg.for_kind(EffectKind::DLY).flavor == BackendFlavor::Oracle);
    }
    SUBCASE("a missing kind is an error") {
        write_text(path, R"({
            "DST": {"flavor": "identity"},
            "DRC": {"flavor": "identity"},
            "RVB": {"flavor": "identity"},
            "CHS": {"flavor": "identity"}
        })");
        CHECK_THROWS_AS(load_registry(path.string()), MissingBackend);
    }
    SUBCASE("an unknown key is an error") {
        write_text(path, R"({"EQX": {"flavor": "identity"}})");
        CHECK_THROWS_AS(load_registry(path.string()), UnknownKind);
    }
    SUBCASE("an unknown flavor is an error") {
        write_text(path, R"({"DST": {"flavor": "magic"}})");
        CHECK_THROWS_AS(load_registry(path.string()), BadCommand);
    }
    SUBCASE("oracle is only available for DST and DLY") {
        write_text(path, R"({"RVB": {"flavor": "oracle"}})");
        CHECK_THROWS_AS(load_registry(path.string()), UnsupportedOracle);
    }
    SUBCASE("external backends need a command") {
        write_text(path, R"({"CHS": {"flavor": "external"}})");
        CHECK_THROWS_AS(load_registry(path.string()), BadCommand);
    }
    fs::remove(path);
}

TEST_CASE("oracle backends recover the pre-effect signal") {
    const AudioClip x = normalized_noise(2, 48000);
    RngStream rng(60, 0);

    SUBCASE("distortion") {
        const RemovalBackend b{EffectKind::DST, BackendFlavor::Oracle, {}};
        for (int i = 0; i < 5; ++i) {
            const EffectInstance fx = sample_params(EffectKind::DST, rng);
            const AudioClip y = normalize_loudness(apply_effect(x, fx), kTargetLufs);
            const AudioClip restored = run_backend(b, y, fx);
            CHECK(si_sdr(restored, x) >= 20.0);
        }
    }
    SUBCASE("delay") {
        const RemovalBackend b{EffectKind::DLY, BackendFlavor::Oracle, {}};
        for (int i = 0; i < 5; ++i) {
            const EffectInstance fx = sample_params(EffectKind::DLY, rng);
            const AudioClip y = normalize_loudness(apply_effect(x, fx), kTargetLufs);
            const AudioClip restored = run_backend(b, y, fx);
            CHECK(si_sdr(restored, x) >= 20.0);
        }
    }
    SUBCASE("missing parameters throw") {
        const RemovalBackend b{EffectKind::DST, BackendFlavor::Oracle, {}};
        CHECK_THROWS_AS(run_backend(b, x), OracleParamsMissing);
    }
}

TEST_CASE("external backends") {
    const AudioClip x = normalized_noise(3, 24000);

    SUBCASE("a copying command is the identity") {
        const RemovalBackend b{EffectKind::CHS, BackendFlavor::External,
                               {"/bin/sh", "-c", R"(cp "$0" "$1")"}};
        CHECK(run_backend(b, x).samples == x.samples);
    }
    SUBCASE("REMFX_EFFECT carries the kind name") {
        const RemovalBackend b{
            EffectKind::RVB, BackendFlavor::External,
            {"/bin/sh", "-c", R"(test "$REMFX_EFFECT" = RVB && cp "$0" "$1")"}};
        CHECK(run_backend(b, x).samples == x.samples);
        const RemovalBackend wrong{
            EffectKind::DRC, BackendFlavor::External,
            {"/bin/sh", "-c", R"(test "$REMFX_EFFECT" = RVB && cp "$0" "$1")"}};
        CHECK_THROWS_AS(run_backend(wrong, x), BackendFailed);
    }
    SUBCASE("nonzero exit status fails") {
        const RemovalBackend b{EffectKind::CHS, BackendFlavor::External, {"/bin/false"}};
        CHECK_THROWS_AS(run_backend(b, x), BackendFailed);
    }
    SUBCASE("unreadable output fails") {
        const RemovalBackend b{EffectKind::CHS, BackendFlavor::External,
                               {"/bin/sh", "-c", R"(echo nonsense > "$1")"}};
        CHECK_THROWS_AS(run_backend(b, x), BackendFailed);
    }
    SUBCASE("a length change is rejected") {
        const fs::path short_wav = temp_file("short.wav");
        save_wav(test_helpers::noise(4, 6000, 0.5), short_wav.string());
        const RemovalBackend b{EffectKind::CHS, BackendFlavor::External,
                               {"/bin/sh", "-c", "cp " + short_wav.string() + R"( "$1")"}};
        CHECK_THROWS_AS(run_backend(b, x), LengthChanged);
        fs::remove(short_wav);
    }
}

TEST_CASE("mode names") {
    CHECK(orchestrator_mode_from_name("all") == OrchestratorMode::All);
    CHECK(orchestrator_mode_from_name("oracle") == OrchestratorMode::Oracle);
    CHECK(orchestrator_mode_from_name("detect") == OrchestratorMode::Detect);
    CHECK_THROWS_AS(orchestrator_mode_from_name("everything"), ModeMisconfigured);
}

TEST_CASE("All mode runs every backend in a seed-stable order") {
    const AudioClip x = normalized_noise(5, 24000);
    const BackendRegistry reg = identity_registry();

    const ComposeResult a = compose_and_run(x, OrchestratorMode::All, reg, nullptr, 0.5,
                                            nullptr, BackendOrdering::Random, 7);
    const ComposeResult b = compose_and_run(x, OrchestratorMode::All, reg, nullptr, 0.5,
                                            nullptr, BackendOrdering::Random, 7);
    CHECK(a.applied.size() == kNumEffects);
    CHECK(a.applied == b.applied);
    CHECK(a.output.samples == x.samples); // identity backends

    // some other seed yields a different permutation
    bool differs = false;
    for (uint64_t seed = 0; seed < 20 && !differs; ++seed) {
        const ComposeResult c = compose_and_run(x, OrchestratorMode::All, reg, nullptr, 0.5,
                                                nullptr, BackendOrdering::Random, seed);
        differs = c.applied != a.applied;
    }
    CHECK(differs);

    CHECK_THROWS_AS(compose_and_run(x, OrchestratorMode::All, reg, nullptr, 0.5, nullptr,
                                    BackendOrdering::GroundTruth, 0),
                    ModeMisconfigured);
}

TEST_CASE("Oracle mode") {
    const AudioClip x = normalized_noise(6, 24000);
    const BackendRegistry reg = identity_registry();
    RngStream rng(61, 0);
    EffectChain chain;
    chain.instances.push_back(sample_params(EffectKind::DST, rng));
    chain.instances.push_back(sample_params(EffectKind::RVB, rng));
    chain.instances.push_back(sample_params(EffectKind::DLY, rng));

    SUBCASE("ground-truth ordering removes in reverse application order") {
        const ComposeResult r =
            compose_and_run(x, OrchestratorMode::Oracle, reg, nullptr, 0.5, &chain,
                            BackendOrdering::GroundTruth, 0);
        CHECK(r.applied == std::vector<EffectKind>{EffectKind::DLY, EffectKind::RVB,
                                                   EffectKind::DST});
    }
    SUBCASE("random ordering touches exactly the chain kinds") {
        const ComposeResult r = compose_and_run(x, OrchestratorMode::Oracle, reg, nullptr,
                                                0.5, &chain, BackendOrdering::Random, 3);
        std::vector<EffectKind> sorted = r.applied;
        std::sort(sorted.begin(), sorted.end());
        CHECK(sorted == std::vector<EffectKind>{EffectKind::DST, EffectKind::RVB,
                                                EffectKind::DLY});
    }
    SUBCASE("parameters reach oracle backends") {
        BackendRegistry oracle_reg = identity_registry();
        oracle_reg.backends[static_cast<size_t>(EffectKind::DST)] = {
            EffectKind::DST, BackendFlavor::Oracle, {}};
        EffectChain single;
        single.instances.push_back(sample_params(EffectKind::DST, rng));
        const AudioClip y = apply_chain(x, single);
        const ComposeResult r =
            compose_and_run(y, OrchestratorMode::Oracle, oracle_reg, nullptr, 0.5, &single,
                            BackendOrdering::GroundTruth, 0);
        CHECK(si_sdr(r.output, x) >= 20.0);
    }
    SUBCASE("missing chain throws") {
        CHECK_THROWS_AS(compose_and_run(x, OrchestratorMode::Oracle, reg), ModeMisconfigured);
    }
}

TEST_CASE("Detect mode") {
    const AudioClip x = normalized_noise(7, 24000);
    const DetectorModel det = zero_detector(); // every probability is exactly 0.5

    SUBCASE("empty detection bypasses bit-exactly") {
        // mark every backend external-and-broken: a bypass must not touch them
        BackendRegistry reg = identity_registry();
        for (auto& b : reg.backends) {
            b.flavor = BackendFlavor::External;
            b.command = {"/bin/false"};
        }
        const ComposeResult r =
            compose_and_run(x, OrchestratorMode::Detect, reg, &det, 0.6);
        CHECK(r.applied.empty());
        CHECK(r.output.samples == x.samples);
    }
    SUBCASE("inclusive threshold selects everything at exactly 0.5") {
        const ComposeResult r =
            compose_and_run(x, OrchestratorMode::Detect, identity_registry(), &det, 0.5);
        CHECK(r.applied.size() == kNumEffects);
    }
    SUBCASE("missing detector throws") {
        CHECK_THROWS_AS(compose_and_run(x, OrchestratorMode::Detect, identity_registry()),
                        ModeMisconfigured);
    }
}
