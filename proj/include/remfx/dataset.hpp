#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "remfx/chain.hpp"
#include "remfx/metrics.hpp"
#include "remfx/orchestrator.hpp"
#include "remfx/sources.hpp"

#include <nlohmann/json_fwd.hpp>

namespace remfx {

// One JSONL manifest row. Paths are relative to the dataset root (the
// manifest's directory).
struct ExampleRecord {
    uint64_t id = 0;
    uint64_t seed = 0;
    SourceSpec source;
    EffectChain chain;
    std::string input_path;
    std::string target_path;
    double input_lufs = 0.0;
    double target_lufs = 0.0;
    size_t n_effects = 0;
};

nlohmann::ordered_json example_record_to_json(const ExampleRecord& rec);
ExampleRecord example_record_from_json(const nlohmann::json& j);

std::vector<ExampleRecord> read_manifest(const std::string& path);
void write_manifest(const std::vector<ExampleRecord>& records, const std::string& path);

struct GenerateOptions {
    std::string out_dir;
    size_t train_count = 8000;
    size_t val_count = 1000;
    size_t test_count = 1000;
    size_t n_effects_max = 5;
    uint64_t dataset_seed = 0;
    std::optional<EffectKind> fxaug; // target kind; empty = plain chains
    size_t jobs = 1;
};

// Writes <out_dir>/{train,val,test}.jsonl plus per-split WAV pairs.
// Deterministic for a given seed, independent of jobs.
void generate_dataset(const GenerateOptions& opts);

struct ExampleEval {
    uint64_t id = 0;
    size_t n_effects = 0;
    std::vector<EffectKind> chain_kinds;
    MetricPair input;  // input vs target
    MetricPair output; // orchestrator output vs target
};

struct BucketAggregate {
    size_t count = 0;
    double input_si_sdr = 0.0; // means; may be +inf or NaN (empty bucket)
    double input_stft = 0.0;
    double output_si_sdr = 0.0;
    double output_stft = 0.0;
    double si_sdri = 0.0;
    double stfti = 0.0;
};

struct QuarantinedExample {
    uint64_t id = 0;
    std::string error;
};

struct EvalReport {
    std::vector<ExampleEval> examples;
    std::array<BucketAggregate, 6> by_n{}; // N = 0..5
    BucketAggregate overall;
    std::vector<QuarantinedExample> quarantined;
};

struct EvaluateOptions {
    OrchestratorMode mode = OrchestratorMode::Detect;
    double threshold = 0.5;
    uint64_t ordering_seed = 0;
    size_t jobs = 1;
};

// Per-example failures are quarantined, not fatal; quarantined rows do
// not enter the aggregates.
EvalReport evaluate(const std::string& manifest_path, const BackendRegistry& registry,
                    const DetectorModel* detector, const EvaluateOptions& opts);

nlohmann::json eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

// Table-style view: SI-SDR / STFT per N = 0..5 plus AVG; "Inf" is
// rendered literally, empty buckets as an em dash.
std::string render_report_text(const EvalReport& report);

} // namespace remfx
