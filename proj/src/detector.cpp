#include "remfx/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numeric>

#include <nlohmann/json.hpp>

namespace remfx {

namespace {

double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

FeatureVector standardize(const DetectorModel& model, const FeatureVector& f) {
    if (model.feat_mean.empty()) return f;
    FeatureVector out(f.size());
    for (size_t i = 0; i < f.size(); ++i)
        out[i] = (f[i] - model.feat_mean[i]) / model.feat_std[i];
    return out;
}

std::string base64_encode(const unsigned char* data, size_t len) {
    static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (size_t i = 0; i < len; i += 3) {
        uint32_t v = static_cast<uint32_t>(data[i]) << 16;
        if (i + 1 < len) v |= static_cast<uint32_t>(data[i + 1]) << 8;
        if (i + 2 < len) v |= data[i + 2];
        out.push_back(tbl[(v >> 18) & 63]);
        out.push_back(tbl[(v >> 12) & 63]);
        out.push_back(i + 1 < len ? tbl[(v >> 6) & 63] : '=');
        out.push_back(i + 2 < len ? tbl[v & 63] : '=');
    }
    return out;
}

std::vector<unsigned char> base64_decode(const std::string& s) {
    auto val = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<unsigned char> out;
    uint32_t buf = 0;
    int bits = 0;
    for (char c : s) {
        if (c == '=') break;
        const int v = val(c);
        if (v < 0) continue;
        buf = (buf << 6) | static_cast<uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<unsigned char>((buf >> bits) & 0xFF));
        }
    }
    return out;
}

std::string tensor_blob(const std::vector<double>& t) {
    std::vector<float> f32(t.begin(), t.end());
    return base64_encode(reinterpret_cast<const unsigned char*>(f32.data()),
                         f32.size() * sizeof(float));
}

std::vector<double> blob_tensor(const std::string& b64, size_t expected) {
    const std::vector<unsigned char> bytes = base64_decode(b64);
    if (bytes.size() != expected * sizeof(float))
        throw std::runtime_error("model tensor blob has wrong size");
    std::vector<float> f32(expected);
    std::memcpy(f32.data(), bytes.data(), bytes.size());
    return {f32.begin(), f32.end()};
}

} // namespace

SpectralConfig detector_spectral_config() {
    SpectralConfig cfg;
    cfg.fft_size = 2048;
    cfg.hop_size = 1024;
    cfg.mel_bands = kDetectorMelBands;
    return cfg;
}

DetectorModel init_model(size_t in_dim, size_t hidden_dim, size_t out_dim, RngStream& rng) {
    DetectorModel m;
    m.in_dim = in_dim;
    m.hidden_dim = hidden_dim;
    m.out_dim = out_dim;
    const double s1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    m.w1.resize(hidden_dim * in_dim);
    for (double& w : m.w1) w = rng.uniform(-s1, s1);
    m.b1.assign(hidden_dim, 0.0);
    m.w2.resize(out_dim * hidden_dim);
    for (double& w : m.w2) w = rng.uniform(-s2, s2);
    m.b2.assign(out_dim, 0.0);
    return m;
}

FeatureVector pool_features(const RealMatrix& mel) {
    const size_t bands = mel.rows, frames = mel.cols;
    FeatureVector f(3 * bands);
    for (size_t m = 0; m < bands; ++m) {
        double mean = 0.0;
        for (size_t t = 0; t < frames; ++t) mean += mel.at(m, t);
        mean /= static_cast<double>(frames);

        double var = 0.0;
        for (size_t t = 0; t < frames; ++t) {
            const double d = mel.at(m, t) - mean;
            var += d * d;
        }
        var /= static_cast<double>(frames);

        double flux = 0.0;
        for (size_t t = 1; t < frames; ++t) flux += std::abs(mel.at(m, t) - mel.at(m, t - 1));
        flux = frames > 1 ? flux / static_cast<double>(frames - 1) : 0.0;

        f[m] = mean;
        f[bands + m] = std::sqrt(var);
        f[2 * bands + m] = flux;
    }
    return f;
}

FeatureVector extract_features(const AudioClip& clip) {
    return pool_features(log_mel_features(clip, detector_spectral_config()));
}

void spec_augment(RealMatrix& mel, RngStream& rng) {
    const double floor = std::log(kLogEps);
    const size_t max_time = mel.cols / 10;
    const size_t n_time = rng.uniform_int(3);
    for (size_t i = 0; i < n_time; ++i) {
        const size_t w = rng.uniform_int(max_time + 1);
        if (w == 0) continue;
        const size_t start = rng.uniform_int(mel.cols - w + 1);
        for (size_t m = 0; m < mel.rows; ++m)
            for (size_t t = start; t < start + w; ++t) mel.at(m, t) = floor;
    }
    const size_t max_freq = std::min<size_t>(8, mel.rows);
    const size_t n_freq = rng.uniform_int(3);
    for (size_t i = 0; i < n_freq; ++i) {
        const size_t w = rng.uniform_int(max_freq + 1);
        if (w == 0) continue;
        const size_t start = rng.uniform_int(mel.rows - w + 1);
        for (size_t m = start; m < start + w; ++m)
            for (size_t t = 0; t < mel.cols; ++t) mel.at(m, t) = floor;
    }
}

std::vector<double> forward(const DetectorModel& model, const FeatureVector& f) {
    const FeatureVector x = standardize(model, f);
    std::vector<double> h(model.hidden_dim);
    for (size_t i = 0; i < model.hidden_dim; ++i) {
        double acc = model.b1[i];
        const double* row = &model.w1[i * model.in_dim];
        for (size_t j = 0; j < model.in_dim; ++j) acc += row[j] * x[j];
        h[i] = std::max(0.0, acc);
    }
    std::vector<double> z(model.out_dim);
    for (size_t o = 0; o < model.out_dim; ++o) {
        double acc = model.b2[o];
        const double* row = &model.w2[o * model.hidden_dim];
        for (size_t i = 0; i < model.hidden_dim; ++i) acc += row[i] * h[i];
        z[o] = acc;
    }
    return z;
}

double bce_loss_and_grads(const DetectorModel& model, const FeatureVector& f,
                          const Labels& labels, Gradients* grads) {
    const FeatureVector x = standardize(model, f);

    std::vector<double> pre(model.hidden_dim), h(model.hidden_dim);
    for (size_t i = 0; i < model.hidden_dim; ++i) {
        double acc = model.b1[i];
        const double* row = &model.w1[i * model.in_dim];
        for (size_t j = 0; j < model.in_dim; ++j) acc += row[j] * x[j];
        pre[i] = acc;
        h[i] = std::max(0.0, acc);
    }
    std::vector<double> z(model.out_dim);
    for (size_t o = 0; o < model.out_dim; ++o) {
        double acc = model.b2[o];
        const double* row = &model.w2[o * model.hidden_dim];
        for (size_t i = 0; i < model.hidden_dim; ++i) acc += row[i] * h[i];
        z[o] = acc;
    }

    // stable BCE: max(z,0) - z*y + ln(1 + exp(-|z|)), averaged over classes
    double loss = 0.0;
    std::vector<double> dz(model.out_dim);
    for (size_t o = 0; o < model.out_dim; ++o) {
        const double y = labels[o];
        loss += std::max(z[o], 0.0) - z[o] * y + std::log1p(std::exp(-std::abs(z[o])));
        dz[o] = (sigmoid(z[o]) - y) / static_cast<double>(model.out_dim);
    }
    loss /= static_cast<double>(model.out_dim);

    if (grads != nullptr) {
        grads->w2.assign(model.out_dim * model.hidden_dim, 0.0);
        grads->b2 = dz;
        for (size_t o = 0; o < model.out_dim; ++o)
            for (size_t i = 0; i < model.hidden_dim; ++i)
                grads->w2[o * model.hidden_dim + i] = dz[o] * h[i];

        std::vector<double> dh(model.hidden_dim, 0.0);
        for (size_t o = 0; o < model.out_dim; ++o)
            for (size_t i = 0; i < model.hidden_dim; ++i)
                dh[i] += dz[o] * model.w2[o * model.hidden_dim + i];
        for (size_t i = 0; i < model.hidden_dim; ++i)
            if (pre[i] <= 0.0) dh[i] = 0.0;

        grads->w1.assign(model.hidden_dim * model.in_dim, 0.0);
        grads->b1 = dh;
        for (size_t i = 0; i < model.hidden_dim; ++i)
            for (size_t j = 0; j < model.in_dim; ++j)
                grads->w1[i * model.in_dim + j] = dh[i] * x[j];
    }
    return loss;
}

namespace {

struct AdamState {
    std::vector<double> m, v;
    explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(std::vector<double>& param, const std::vector<double>& grad, AdamState& st,
               double lr, size_t t) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (size_t i = 0; i < param.size(); ++i) {
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * grad[i];
        st.v[i] = b2 * st.v[i] + (1.0 - b2) * grad[i] * grad[i];
        param[i] -= lr * (st.m[i] / bc1) / (std::sqrt(st.v[i] / bc2) + eps);
    }
}

void accumulate(std::vector<double>& acc, const std::vector<double>& g) {
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

void scale(std::vector<double>& v, double s) {
    for (double& x : v) x *= s;
}

double squared_norm(const std::vector<double>& v) {
    return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

TrainResult run_training(const std::vector<FeatureExample>& base_features,
                         const std::vector<MelExample>* mels, const TrainConfig& cfg,
                         size_t in_dim) {
    const size_t n = base_features.size();
    if (n == 0) throw EmptyDataset("train: no examples");

    // warn on classes that never vary; training proceeds anyway
    for (size_t c = 0; c < kNumEffects; ++c) {
        bool any_pos = false, any_neg = false;
        for (const auto& ex : base_features) {
            (ex.labels[c] > 0.5f ? any_pos : any_neg) = true;
        }
        if (!any_pos || !any_neg)
            std::cerr << "warning: class " << effect_kind_name(static_cast<EffectKind>(c))
                      << " is constant across the training set\n";
    }

    RngStream init_rng = RngStream(cfg.seed, 0);
    RngStream shuffle_rng = RngStream(cfg.seed, 1);
    RngStream aug_rng = RngStream(cfg.seed, 2);

    TrainResult result;
    result.model = init_model(in_dim, kDetectorHidden, kNumEffects, init_rng);
    result.model.train_seed = cfg.seed;

    // per-feature standardizer from the clean training features
    result.model.feat_mean.assign(in_dim, 0.0);
    result.model.feat_std.assign(in_dim, 0.0);
    for (const auto& ex : base_features) {
        for (size_t i = 0; i < in_dim; ++i) result.model.feat_mean[i] += ex.features[i];
    }
    for (size_t i = 0; i < in_dim; ++i) result.model.feat_mean[i] /= static_cast<double>(n);
    for (const auto& ex : base_features) {
        for (size_t i = 0; i < in_dim; ++i) {
            const double d = ex.features[i] - result.model.feat_mean[i];
            result.model.feat_std[i] += d * d;
        }
    }
    for (size_t i = 0; i < in_dim; ++i)
        result.model.feat_std[i] = std::max(std::sqrt(result.model.feat_std[i] / n), 1e-6);

    DetectorModel& model = result.model;
    AdamState sw1(model.w1.size()), sb1(model.b1.size()), sw2(model.w2.size()),
        sb2(model.b2.size());

    const size_t batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const size_t total_steps = cfg.epochs * batches_per_epoch;
    const size_t drop1 = static_cast<size_t>(0.80 * static_cast<double>(total_steps));
    const size_t drop2 = static_cast<size_t>(0.95 * static_cast<double>(total_steps));

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    size_t step = 0;
    size_t adam_t = 0;
    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // seeded Fisher-Yates shuffle
        for (size_t i = n - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);

        // fresh SpecAugment masks each epoch
        std::vector<FeatureVector> epoch_features;
        if (mels != nullptr && cfg.use_spec_augment) {
            epoch_features.resize(n);
            for (size_t j = 0; j < n; ++j) {
                RealMatrix masked = (*mels)[j].mel;
                spec_augment(masked, aug_rng);
                epoch_features[j] = pool_features(masked);
            }
        }
        auto features_of = [&](size_t j) -> const FeatureVector& {
            return epoch_features.empty() ? base_features[j].features : epoch_features[j];
        };

        for (size_t b = 0; b < batches_per_epoch; ++b, ++step) {
            const size_t lo = b * cfg.batch_size;
            const size_t hi = std::min(lo + cfg.batch_size, n);
            const double inv = 1.0 / static_cast<double>(hi - lo);

            Gradients acc{std::vector<double>(model.w1.size(), 0.0),
                          std::vector<double>(model.b1.size(), 0.0),
                          std::vector<double>(model.w2.size(), 0.0),
                          std::vector<double>(model.b2.size(), 0.0)};
            Gradients g;
            double batch_loss = 0.0;
            for (size_t i = lo; i < hi; ++i) {
                const size_t j = order[i];
                batch_loss += bce_loss_and_grads(model, features_of(j),
                                                 base_features[j].labels, &g);
                accumulate(acc.w1, g.w1);
                accumulate(acc.b1, g.b1);
                accumulate(acc.w2, g.w2);
                accumulate(acc.b2, g.b2);
            }
            batch_loss *= inv;
            scale(acc.w1, inv);
            scale(acc.b1, inv);
            scale(acc.w2, inv);
            scale(acc.b2, inv);

            const double gnorm = std::sqrt(squared_norm(acc.w1) + squared_norm(acc.b1) +
                                           squared_norm(acc.w2) + squared_norm(acc.b2));
            if (gnorm > cfg.grad_clip_norm) {
                const double s = cfg.grad_clip_norm / gnorm;
                scale(acc.w1, s);
                scale(acc.b1, s);
                scale(acc.w2, s);
                scale(acc.b2, s);
            }

            double lr = cfg.lr;
            if (step >= drop1) lr *= 0.1;
            if (step >= drop2) lr *= 0.1;

            ++adam_t;
            adam_step(model.w1, acc.w1, sw1, lr, adam_t);
            adam_step(model.b1, acc.b1, sb1, lr, adam_t);
            adam_step(model.w2, acc.w2, sw2, lr, adam_t);
            adam_step(model.b2, acc.b2, sb2, lr, adam_t);

            result.loss_curve.push_back(batch_loss);
            result.lr_curve.push_back(lr);
        }
    }
    return result;
}

} // namespace

TrainResult train(const std::vector<MelExample>& data, const TrainConfig& cfg) {
    std::vector<FeatureExample> features;
    features.reserve(data.size());
    for (const auto& ex : data) features.push_back({pool_features(ex.mel), ex.labels});
    return run_training(features, cfg.use_spec_augment ? &data : nullptr, cfg,
                        features.empty() ? kFeatureDim : features.front().features.size());
}

TrainResult train_on_features(const std::vector<FeatureExample>& data, const TrainConfig& cfg,
                              size_t in_dim) {
    return run_training(data, nullptr, cfg, in_dim);
}

std::vector<EffectKind> predict_effects(const DetectorModel& model, const AudioClip& clip,
                                        double threshold) {
    const std::vector<double> z =
        forward(model, pool_features(log_mel_features(clip, model.feature_cfg)));
    std::vector<EffectKind> out;
    for (size_t o = 0; o < z.size() && o < kNumEffects; ++o)
        if (sigmoid(z[o]) >= threshold) out.push_back(static_cast<EffectKind>(o));
    return out;
}

ClasswiseAccuracy classwise_accuracy(const DetectorModel& model,
                                     const std::vector<FeatureExample>& test_set,
                                     double threshold) {
    if (test_set.empty()) throw EmptyDataset("classwise_accuracy: empty test set");
    ClasswiseAccuracy acc;
    for (const auto& ex : test_set) {
        const std::vector<double> z = forward(model, ex.features);
        for (size_t c = 0; c < kNumEffects; ++c) {
            const bool predicted = sigmoid(z[c]) >= threshold;
            const bool actual = ex.labels[c] > 0.5f;
            if (predicted == actual) acc.per_class[c] += 1.0;
        }
    }
    for (size_t c = 0; c < kNumEffects; ++c) {
        acc.per_class[c] /= static_cast<double>(test_set.size());
        acc.mean += acc.per_class[c];
    }
    acc.mean /= static_cast<double>(kNumEffects);
    return acc;
}

void save_model(const DetectorModel& model, const std::string& path) {
    nlohmann::json j;
    j["in_dim"] = model.in_dim;
    j["hidden_dim"] = model.hidden_dim;
    j["out_dim"] = model.out_dim;
    j["tensors"] = {
        {"w1", {{"shape", {model.hidden_dim, model.in_dim}}, {"data", tensor_blob(model.w1)}}},
        {"b1", {{"shape", {model.hidden_dim}}, {"data", tensor_blob(model.b1)}}},
        {"w2", {{"shape", {model.out_dim, model.hidden_dim}}, {"data", tensor_blob(model.w2)}}},
        {"b2", {{"shape", {model.out_dim}}, {"data", tensor_blob(model.b2)}}},
    };
    if (!model.feat_mean.empty()) {
        j["standardizer"] = {{"mean", tensor_blob(model.feat_mean)},
                             {"std", tensor_blob(model.feat_std)}};
    }
    j["feature"] = {{"fft_size", model.feature_cfg.fft_size},
                    {"hop_size", model.feature_cfg.hop_size},
                    {"mel_bands", model.feature_cfg.mel_bands},
                    {"fmin_hz", model.feature_cfg.fmin_hz},
                    {"fmax_hz", model.feature_cfg.fmax_hz}};
    j["train_seed"] = model.train_seed;

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

DetectorModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open " + path);
    nlohmann::json j;
    in >> j;

    DetectorModel m;
    m.in_dim = j.at("in_dim").get<size_t>();
    m.hidden_dim = j.at("hidden_dim").get<size_t>();
    m.out_dim = j.at("out_dim").get<size_t>();
    const auto& t = j.at("tensors");
    m.w1 = blob_tensor(t.at("w1").at("data").get<std::string>(), m.hidden_dim * m.in_dim);
    m.b1 = blob_tensor(t.at("b1").at("data").get<std::string>(), m.hidden_dim);
    m.w2 = blob_tensor(t.at("w2").at("data").get<std::string>(), m.out_dim * m.hidden_dim);
    m.b2 = blob_tensor(t.at("b2").at("data").get<std::string>(), m.out_dim);
    if (j.contains("standardizer")) {
        m.feat_mean = blob_tensor(j["standardizer"].at("mean").get<std::string>(), m.in_dim);
        m.feat_std = blob_tensor(j["standardizer"].at("std").get<std::string>(), m.in_dim);
    }
    const auto& fc = j.at("feature");
    m.feature_cfg.fft_size = fc.at("fft_size").get<size_t>();
    m.feature_cfg.hop_size = fc.at("hop_size").get<size_t>();
    m.feature_cfg.mel_bands = fc.at("mel_bands").get<size_t>();
    m.feature_cfg.fmin_hz = fc.at("fmin_hz").get<double>();
    m.feature_cfg.fmax_hz = fc.at("fmax_hz").get<double>();
    m.train_seed = j.value("train_seed", 0ULL);
    return m;
}

} // namespace remfx
