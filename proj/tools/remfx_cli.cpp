// remfx: dataset synthesis, detector training, and compositional
// effect removal from the command line.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "remfx/dataset.hpp"
#include "remfx/detector.hpp"
#include "remfx/loudness.hpp"
#include "remfx/orchestrator.hpp"

namespace {

using namespace remfx;

BackendRegistry registry_or_identity(const std::string& config_path) {
    return config_path.empty() ? identity_registry() : load_registry(config_path);
}

Labels labels_of(const EffectChain& chain) {
    Labels labels{};
    for (const EffectInstance& fx : chain.instances)
        labels[static_cast<size_t>(fx.kind())] = 1.0f;
    return labels;
}

std::vector<MelExample> load_mel_examples(const std::string& manifest_path) {
    const std::vector<ExampleRecord> records = read_manifest(manifest_path);
    const auto root = std::filesystem::path(manifest_path).parent_path();
    const SpectralConfig cfg = detector_spectral_config();
    std::vector<MelExample> out;
    out.reserve(records.size());
    for (const ExampleRecord& rec : records) {
        const AudioClip clip = load_wav((root / rec.input_path).string());
        out.push_back({log_mel_features(clip, cfg), labels_of(rec.chain)});
    }
    return out;
}

int cmd_generate(const GenerateOptions& opts) {
    generate_dataset(opts);
    std::cout << "wrote manifests under " << opts.out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& manifest, const std::string& val_manifest,
              const std::string& out_path, TrainConfig cfg) {
    std::cerr << "loading training mels from " << manifest << "\n";
    const std::vector<MelExample> data = load_mel_examples(manifest);
    std::cerr << "training on " << data.size() << " examples, " << cfg.epochs << " epochs\n";
    TrainResult result = train(data, cfg);
    save_model(result.model, out_path);
    std::cout << "model written to " << out_path << "\n";
    if (!result.loss_curve.empty())
        std::cout << "final training loss: " << result.loss_curve.back() << "\n";

    if (!val_manifest.empty()) {
        const std::vector<MelExample> val = load_mel_examples(val_manifest);
        std::vector<FeatureExample> val_features;
        for (const MelExample& ex : val) val_features.push_back({pool_features(ex.mel), ex.labels});
        const ClasswiseAccuracy acc = classwise_accuracy(result.model, val_features, 0.5);
        std::cout << "val accuracy:";
        for (size_t c = 0; c < kNumEffects; ++c)
            std::cout << " " << effect_kind_name(static_cast<EffectKind>(c)) << "="
                      << acc.per_class[c];
        std::cout << " AVG=" << acc.mean << "\n";
    }
    return 0;
}

int cmd_detect(const std::string& model_path, const std::string& in_path, double threshold) {
    const DetectorModel model = load_model(model_path);
    const AudioClip clip = load_wav(in_path);
    const std::vector<EffectKind> detected = predict_effects(model, clip, threshold);
    if (detected.empty()) {
        std::cout << "none\n";
    } else {
        for (size_t i = 0; i < detected.size(); ++i)
            std::cout << (i ? " " : "") << effect_kind_name(detected[i]);
        std::cout << "\n";
    }
    return 0;
}

int cmd_remove(const std::string& mode_name, const std::string& model_path,
               const std::string& config_path, const std::string& chain_json,
               const std::string& in_path, const std::string& out_path, double threshold,
               uint64_t seed) {
    const OrchestratorMode mode = orchestrator_mode_from_name(mode_name);
    const BackendRegistry registry = registry_or_identity(config_path);

    DetectorModel model;
    const DetectorModel* detector = nullptr;
    if (mode == OrchestratorMode::Detect) {
        if (model_path.empty()) throw ModeMisconfigured("detect mode needs --model");
        model = load_model(model_path);
        detector = &model;
    }
    EffectChain chain;
    const EffectChain* true_chain = nullptr;
    if (mode == OrchestratorMode::Oracle) {
        if (chain_json.empty()) throw ModeMisconfigured("oracle mode needs --chain");
        chain = effect_chain_from_json(nlohmann::json::parse(chain_json));
        true_chain = &chain;
    }

    const AudioClip input = load_wav(in_path);
    const BackendOrdering ordering = mode == OrchestratorMode::Oracle
                                         ? BackendOrdering::GroundTruth
                                         : BackendOrdering::Random;
    const ComposeResult result =
        compose_and_run(input, mode, registry, detector, threshold, true_chain, ordering, seed);
    save_wav(result.output, out_path);

    std::cout << "applied:";
    if (result.applied.empty()) std::cout << " none (bypass)";
    for (EffectKind k : result.applied) std::cout << " " << effect_kind_name(k);
    std::cout << "\n";
    return 0;
}

int cmd_evaluate(const std::string& manifest, const std::string& mode_name,
                 const std::string& config_path, const std::string& model_path,
                 const std::string& out_path, double threshold, uint64_t seed, size_t jobs) {
    EvaluateOptions opts;
    opts.mode = orchestrator_mode_from_name(mode_name);
    opts.threshold = threshold;
    opts.ordering_seed = seed;
    opts.jobs = jobs;

    DetectorModel model;
    const DetectorModel* detector = nullptr;
    if (opts.mode == OrchestratorMode::Detect) {
        if (model_path.empty()) throw ModeMisconfigured("detect mode needs --model");
        model = load_model(model_path);
        detector = &model;
    }
    const EvalReport report =
        evaluate(manifest, registry_or_identity(config_path), detector, opts);
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw IoFailure("cannot open " + out_path + " for writing");
        out << eval_report_to_json(report).dump(2) << "\n";
    }
    std::cout << render_report_text(report);
    return 0;
}

int cmd_report(const std::string& in_path, const std::string& format) {
    std::ifstream in(in_path);
    if (!in) throw IoFailure("cannot open " + in_path);
    nlohmann::json j;
    in >> j;
    const EvalReport report = eval_report_from_json(j);
    if (format == "json")
        std::cout << eval_report_to_json(report).dump(2) << "\n";
    else
        std::cout << render_report_text(report);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"RemFX-style effect dataset synthesis, detection, and removal"};
    app.require_subcommand(1);

    uint64_t seed = 0;
    size_t jobs = 1;
    app.add_option("--seed", seed, "global seed")->capture_default_str();
    app.add_option("--jobs", jobs, "worker threads")->capture_default_str();

    // generate
    GenerateOptions gen;
    std::string fxaug_kind;
    auto* generate = app.add_subcommand("generate", "synthesize a dataset with manifests");
    generate->add_option("--out", gen.out_dir, "output directory")->required();
    generate->add_option("--train", gen.train_count)->capture_default_str();
    generate->add_option("--val", gen.val_count)->capture_default_str();
    generate->add_option("--test", gen.test_count)->capture_default_str();
    generate->add_option("--n-effects-max", gen.n_effects_max)->capture_default_str();
    generate->add_option("--fxaug", fxaug_kind, "FXAug target kind (DST/DRC/RVB/CHS/DLY)");

    // train-detector
    std::string manifest, val_manifest, model_out = "detector.json";
    TrainConfig tcfg;
    auto* traind = app.add_subcommand("train-detector", "train the effect detector");
    traind->add_option("--manifest", manifest, "training manifest (JSONL)")->required();
    traind->add_option("--val-manifest", val_manifest, "held-out manifest for accuracy");
    traind->add_option("--out", model_out, "model output path")->capture_default_str();
    traind->add_option("--epochs", tcfg.epochs)->capture_default_str();
    traind->add_option("--batch-size", tcfg.batch_size)->capture_default_str();
    traind->add_option("--lr", tcfg.lr)->capture_default_str();
    bool no_spec_augment = false;
    traind->add_flag("--no-spec-augment", no_spec_augment, "disable SpecAugment masking");

    // detect
    std::string model_path, in_path, out_path;
    double threshold = 0.5;
    auto* detect = app.add_subcommand("detect", "report detected effects for a clip");
    detect->add_option("--model", model_path)->required();
    detect->add_option("--in", in_path)->required();
    detect->add_option("--threshold", threshold)->capture_default_str();

    // remove
    std::string mode_name = "detect", config_path, chain_json;
    std::string rm_model, rm_in, rm_out;
    double rm_threshold = 0.5;
    auto* removec = app.add_subcommand("remove", "remove detected effects from a clip");
    removec->add_option("--mode", mode_name, "detect | oracle | all")->capture_default_str();
    removec->add_option("--model", rm_model, "detector model (detect mode)");
    removec->add_option("--config", config_path, "backend registry JSON");
    removec->add_option("--chain", chain_json, "true chain JSON (oracle mode)");
    removec->add_option("--in", rm_in)->required();
    removec->add_option("--out", rm_out)->required();
    removec->add_option("--threshold", rm_threshold)->capture_default_str();

    // evaluate
    std::string ev_manifest, ev_mode = "detect", ev_config, ev_model, ev_out;
    double ev_threshold = 0.5;
    auto* evaluatec = app.add_subcommand("evaluate", "run the per-N evaluation harness");
    evaluatec->add_option("--manifest", ev_manifest)->required();
    evaluatec->add_option("--mode", ev_mode, "detect | oracle | all")->capture_default_str();
    evaluatec->add_option("--config", ev_config, "backend registry JSON");
    evaluatec->add_option("--model", ev_model, "detector model (detect mode)");
    evaluatec->add_option("--out", ev_out, "report JSON output path");
    evaluatec->add_option("--threshold", ev_threshold)->capture_default_str();

    // report
    std::string rp_in, rp_format = "text";
    auto* reportc = app.add_subcommand("report", "render a saved report JSON");
    reportc->add_option("--in", rp_in)->required();
    reportc->add_option("--format", rp_format, "text | json")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (generate->parsed()) {
            gen.dataset_seed = seed;
            gen.jobs = jobs;
            if (!fxaug_kind.empty()) gen.fxaug = effect_kind_from_name(fxaug_kind);
            return cmd_generate(gen);
        }
        if (traind->parsed()) {
            tcfg.seed = seed;
            tcfg.use_spec_augment = !no_spec_augment;
            return cmd_train(manifest, val_manifest, model_out, tcfg);
        }
        if (detect->parsed()) return cmd_detect(model_path, in_path, threshold);
        if (removec->parsed())
            return cmd_remove(mode_name, rm_model, config_path, chain_json, rm_in, rm_out,
                              rm_threshold, seed);
        if (evaluatec->parsed())
            return cmd_evaluate(ev_manifest, ev_mode, ev_config, ev_model, ev_out, ev_threshold,
                                seed, jobs);
        if (reportc->parsed()) return cmd_report(rp_in, rp_format);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
