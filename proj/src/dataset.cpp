#include "remfx/dataset.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "remfx/loudness.hpp"
#include "remfx/rng.hpp"

namespace remfx {

namespace {

namespace fs = std::filesystem;

const char* kSplitNames[3] = {"train", "val", "test"};

std::string zero_pad(uint64_t v, int width) {
    std::ostringstream os;
    os.width(width);
    os.fill('0');
    os << v;
    return os.str();
}

// parallel for over [0, n) with deterministic per-index work
void parallel_for(size_t n, size_t jobs, const std::function<void(size_t)>& body) {
    jobs = std::max<size_t>(1, jobs);
    if (jobs == 1) {
        for (size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (size_t t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

ExampleRecord build_example(const GenerateOptions& opts, size_t split, uint64_t id) {
    const uint64_t stream = (static_cast<uint64_t>(split) << 48) | id;
    for (uint64_t attempt = 0;; ++attempt) {
        RngStream rng = RngStream(opts.dataset_seed, stream).derive(attempt);
        SourceSpec spec;
        spec.family = static_cast<SourceFamily>(id % 4); // round-robin over families
        spec.seed = rng.next_u64();
        try {
            const AudioClip source =
                normalize_loudness(synthesize_source(spec, kClipSamples), kTargetLufs);

            ExampleRecord rec;
            rec.id = id;
            rec.seed = spec.seed;
            rec.source = spec;

            AudioClip input, target;
            if (opts.fxaug) {
                FxAugExample ex = sample_fxaug_example(source, *opts.fxaug, rng);
                input = std::move(ex.input);
                target = std::move(ex.target);
                rec.chain = std::move(ex.distractors);
                rec.chain.instances.push_back(ex.target_instance);
            } else {
                rec.chain = sample_chain(opts.n_effects_max, rng);
                target = source;
                input = apply_chain(source, rec.chain);
            }
            rec.n_effects = rec.chain.size();

            const std::string base = kSplitNames[split];
            rec.input_path = base + "/input_" + zero_pad(id, 6) + ".wav";
            rec.target_path = base + "/target_" + zero_pad(id, 6) + ".wav";
            rec.input_lufs = measure_integrated_loudness(input).lufs;
            rec.target_lufs = measure_integrated_loudness(target).lufs;

            save_wav(input, (fs::path(opts.out_dir) / rec.input_path).string());
            save_wav(target, (fs::path(opts.out_dir) / rec.target_path).string());
            return rec;
        } catch (const GatedSilence& e) {
            std::cerr << "generate: " << kSplitNames[split] << "/" << id
                      << " gated to silence (attempt " << attempt << "), resampling: "
                      << e.what() << "\n";
        }
    }
}

bool is_inf(double v) { return std::isinf(v) && v > 0.0; }

nlohmann::json metric_value(double v) {
    if (is_inf(v)) return "Inf";
    if (std::isnan(v)) return nullptr;
    return v;
}

double metric_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::nan("");
    if (j.is_string()) return std::numeric_limits<double>::infinity();
    return j.get<double>();
}

nlohmann::json bucket_to_json(const BucketAggregate& b) {
    return {{"count", b.count},
            {"input_si_sdr", metric_value(b.input_si_sdr)},
            {"input_stft", metric_value(b.input_stft)},
            {"output_si_sdr", metric_value(b.output_si_sdr)},
            {"output_stft", metric_value(b.output_stft)},
            {"si_sdri", metric_value(b.si_sdri)},
            {"stfti", metric_value(b.stfti)}};
}

BucketAggregate bucket_from_json(const nlohmann::json& j) {
    BucketAggregate b;
    b.count = j.at("count").get<size_t>();
    b.input_si_sdr = metric_from_json(j.at("input_si_sdr"));
    b.input_stft = metric_from_json(j.at("input_stft"));
    b.output_si_sdr = metric_from_json(j.at("output_si_sdr"));
    b.output_stft = metric_from_json(j.at("output_stft"));
    b.si_sdri = metric_from_json(j.at("si_sdri"));
    b.stfti = metric_from_json(j.at("stfti"));
    return b;
}

void aggregate(const std::vector<const ExampleEval*>& rows, BucketAggregate& out) {
    out.count = rows.size();
    if (rows.empty()) {
        out.input_si_sdr = out.input_stft = out.output_si_sdr = out.output_stft =
            out.si_sdri = out.stfti = std::nan("");
        return;
    }
    double in_sdr = 0.0, in_stft = 0.0, out_sdr = 0.0, out_stft = 0.0;
    for (const ExampleEval* e : rows) {
        in_sdr += e->input.si_sdr_db;
        in_stft += e->input.mr_stft;
        out_sdr += e->output.si_sdr_db;
        out_stft += e->output.mr_stft;
    }
    const double n = static_cast<double>(rows.size());
    out.input_si_sdr = in_sdr / n;
    out.input_stft = in_stft / n;
    out.output_si_sdr = out_sdr / n;
    out.output_stft = out_stft / n;
    out.si_sdri = improvement(out.output_si_sdr, out.input_si_sdr, Direction::HigherBetter);
    out.stfti = improvement(out.output_stft, out.input_stft, Direction::LowerBetter);
}

std::string format_metric(double v, int precision) {
    if (is_inf(v)) return "Inf";
    if (std::isnan(v)) return "—";
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(precision);
    os << v;
    return os.str();
}

} // namespace

nlohmann::ordered_json example_record_to_json(const ExampleRecord& rec) {
    nlohmann::ordered_json source = {{"family", source_family_name(rec.source.family)},
                                     {"seed", rec.source.seed}};
    if (rec.source.family == SourceFamily::Ingest) source["path"] = rec.source.path;
    return nlohmann::ordered_json{{"id", rec.id},
                                  {"seed", rec.seed},
                                  {"source", source},
                                  {"chain", effect_chain_to_json(rec.chain)},
                                  {"input_path", rec.input_path},
                                  {"target_path", rec.target_path},
                                  {"input_lufs", rec.input_lufs},
                                  {"target_lufs", rec.target_lufs},
                                  {"n_effects", rec.n_effects}};
}

ExampleRecord example_record_from_json(const nlohmann::json& j) {
    ExampleRecord rec;
    rec.id = j.at("id").get<uint64_t>();
    rec.seed = j.at("seed").get<uint64_t>();
    rec.source.family = source_family_from_name(j.at("source").at("family").get<std::string>());
    rec.source.seed = j.at("source").at("seed").get<uint64_t>();
    if (j.at("source").contains("path")) rec.source.path = j["source"]["path"].get<std::string>();
    rec.chain = effect_chain_from_json(j.at("chain"));
    rec.input_path = j.at("input_path").get<std::string>();
    rec.target_path = j.at("target_path").get<std::string>();
    rec.input_lufs = j.at("input_lufs").get<double>();
    rec.target_lufs = j.at("target_lufs").get<double>();
    rec.n_effects = j.at("n_effects").get<size_t>();
    return rec;
}

std::vector<ExampleRecord> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open manifest " + path);
    std::vector<ExampleRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(example_record_from_json(nlohmann::json::parse(line)));
    }
    return records;
}

void write_manifest(const std::vector<ExampleRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoFailure("cannot open manifest " + path + " for writing");
    for (const ExampleRecord& rec : records)
        out << example_record_to_json(rec).dump() << "\n";
}

void generate_dataset(const GenerateOptions& opts) {
    const size_t counts[3] = {opts.train_count, opts.val_count, opts.test_count};
    for (size_t split = 0; split < 3; ++split) {
        fs::create_directories(fs::path(opts.out_dir) / kSplitNames[split]);
        std::vector<ExampleRecord> records(counts[split]);
        parallel_for(counts[split], opts.jobs,
                     [&](size_t i) { records[i] = build_example(opts, split, i); });
        write_manifest(records,
                       (fs::path(opts.out_dir) / (std::string(kSplitNames[split]) + ".jsonl"))
                           .string());
    }
}

EvalReport evaluate(const std::string& manifest_path, const BackendRegistry& registry,
                    const DetectorModel* detector, const EvaluateOptions& opts) {
    const std::vector<ExampleRecord> records = read_manifest(manifest_path);
    const fs::path root = fs::path(manifest_path).parent_path();

    struct Slot {
        bool ok = false;
        ExampleEval eval;
        std::string error;
    };
    std::vector<Slot> slots(records.size());

    parallel_for(records.size(), opts.jobs, [&](size_t i) {
        const ExampleRecord& rec = records[i];
        Slot& slot = slots[i];
        try {
            const AudioClip input = load_wav((root / rec.input_path).string());
            const AudioClip target = load_wav((root / rec.target_path).string());

            const BackendOrdering ordering = opts.mode == OrchestratorMode::Oracle
                                                 ? BackendOrdering::GroundTruth
                                                 : BackendOrdering::Random;
            const ComposeResult composed =
                compose_and_run(input, opts.mode, registry, detector, opts.threshold,
                                &rec.chain, ordering, opts.ordering_seed + rec.id);

            slot.eval.id = rec.id;
            slot.eval.n_effects = rec.n_effects;
            for (const EffectInstance& fx : rec.chain.instances)
                slot.eval.chain_kinds.push_back(fx.kind());
            slot.eval.input = {si_sdr(input, target), mr_stft_error(input, target)};
            slot.eval.output = {si_sdr(composed.output, target),
                                mr_stft_error(composed.output, target)};
            slot.ok = true;
        } catch (const std::exception& e) {
            slot.error = e.what();
        }
    });

    EvalReport report;
    for (size_t i = 0; i < records.size(); ++i) {
        if (slots[i].ok)
            report.examples.push_back(std::move(slots[i].eval));
        else
            report.quarantined.push_back({records[i].id, slots[i].error});
    }

    std::array<std::vector<const ExampleEval*>, 6> by_n;
    std::vector<const ExampleEval*> all;
    for (const ExampleEval& e : report.examples) {
        all.push_back(&e);
        if (e.n_effects < by_n.size()) by_n[e.n_effects].push_back(&e);
    }
    for (size_t n = 0; n < by_n.size(); ++n) aggregate(by_n[n], report.by_n[n]);
    aggregate(all, report.overall);
    return report;
}

nlohmann::json eval_report_to_json(const EvalReport& report) {
    nlohmann::json examples = nlohmann::json::array();
    for (const ExampleEval& e : report.examples) {
        nlohmann::json kinds = nlohmann::json::array();
        for (EffectKind k : e.chain_kinds) kinds.push_back(effect_kind_name(k));
        examples.push_back({{"id", e.id},
                            {"n_effects", e.n_effects},
                            {"chain_kinds", kinds},
                            {"input_si_sdr", metric_value(e.input.si_sdr_db)},
                            {"input_stft", metric_value(e.input.mr_stft)},
                            {"output_si_sdr", metric_value(e.output.si_sdr_db)},
                            {"output_stft", metric_value(e.output.mr_stft)}});
    }
    nlohmann::json buckets = nlohmann::json::array();
    for (const BucketAggregate& b : report.by_n) buckets.push_back(bucket_to_json(b));
    nlohmann::json quarantined = nlohmann::json::array();
    for (const QuarantinedExample& q : report.quarantined)
        quarantined.push_back({{"id", q.id}, {"error", q.error}});
    return {{"examples", examples},
            {"by_n", buckets},
            {"overall", bucket_to_json(report.overall)},
            {"quarantined", quarantined}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
    EvalReport report;
    for (const auto& e : j.at("examples")) {
        ExampleEval ev;
        ev.id = e.at("id").get<uint64_t>();
        ev.n_effects = e.at("n_effects").get<size_t>();
        for (const auto& k : e.at("chain_kinds"))
            ev.chain_kinds.push_back(effect_kind_from_name(k.get<std::string>()));
        ev.input = {metric_from_json(e.at("input_si_sdr")), metric_from_json(e.at("input_stft"))};
        ev.output = {metric_from_json(e.at("output_si_sdr")),
                     metric_from_json(e.at("output_stft"))};
        report.examples.push_back(std::move(ev));
    }
    for (size_t n = 0; n < report.by_n.size(); ++n)
        report.by_n[n] = bucket_from_json(j.at("by_n").at(n));
    report.overall = bucket_from_json(j.at("overall"));
    for (const auto& q : j.at("quarantined"))
        report.quarantined.push_back(
            {q.at("id").get<uint64_t>(), q.at("error").get<std::string>()});
    return report;
}

std::string render_report_text(const EvalReport& report) {
    std::ostringstream os;
    auto cell = [&](const std::string& s) { os << s << "\t"; };

    cell("metric");
    for (size_t n = 0; n < 6; ++n) {
        cell("N=" + std::to_string(n) + " SI-SDR");
        cell("N=" + std::to_string(n) + " STFT");
    }
    cell("AVG SI-SDR");
    cell("AVG STFT");
    os << "\n";

    auto row = [&](const std::string& label, auto input_getter) {
        cell(label);
        for (const BucketAggregate& b : report.by_n) {
            const auto [sdr, stft] = input_getter(b);
            cell(format_metric(sdr, 2));
            cell(format_metric(stft, 3));
        }
        const auto [sdr, stft] = input_getter(report.overall);
        cell(format_metric(sdr, 2));
        cell(format_metric(stft, 3));
        os << "\n";
    };
    row("Input", [](const BucketAggregate& b) {
        return std::pair<double, double>(b.input_si_sdr, b.input_stft);
    });
    row("Output", [](const BucketAggregate& b) {
        return std::pair<double, double>(b.output_si_sdr, b.output_stft);
    });
    row("Improvement", [](const BucketAggregate& b) {
        return std::pair<double, double>(b.si_sdri, b.stfti);
    });

    os << "examples: " << report.examples.size()
       << "  quarantined: " << report.quarantined.size() << "\n";
    for (const QuarantinedExample& q : report.quarantined)
        os << "  quarantined id " << q.id << ": " << q.error << "\n";
    return os.str();
}

} // namespace remfx
