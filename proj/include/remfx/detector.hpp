#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "remfx/audio.hpp"
#include "remfx/effects.hpp"
#include "remfx/rng.hpp"
#include "remfx/spectral.hpp"

namespace remfx {

struct EmptyDataset : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr size_t kDetectorMelBands = 64;
constexpr size_t kFeatureDim = 3 * kDetectorMelBands; // [means | stds | flux]
constexpr size_t kDetectorHidden = 256;

SpectralConfig detector_spectral_config(); // fft 2048, hop 1024, 64 bands

using FeatureVector = std::vector<double>;
using Labels = std::array<float, kNumEffects>;

// Dense two-layer net over pooled log-mel statistics. The optional
// standardizer (per-feature mean/std from the training set) is applied
// inside forward().
struct DetectorModel {
    size_t in_dim = kFeatureDim;
    size_t hidden_dim = kDetectorHidden;
    size_t out_dim = kNumEffects;
    std::vector<double> w1; // hidden x in, row-major
    std::vector<double> b1;
    std::vector<double> w2; // out x hidden
    std::vector<double> b2;
    std::vector<double> feat_mean; // empty = identity standardizer
    std::vector<double> feat_std;
    SpectralConfig feature_cfg = detector_spectral_config();
    uint64_t train_seed = 0;
};

// uniform +-1/sqrt(fan_in) weights, zero biases
DetectorModel init_model(size_t in_dim, size_t hidden_dim, size_t out_dim, RngStream& rng);

// per-band mean, std and mean |first difference| of a log-mel matrix
FeatureVector pool_features(const RealMatrix& mel);
FeatureVector extract_features(const AudioClip& clip);

// up to 2 time masks (each <= 10% of frames) and up to 2 frequency
// masks (each <= 8 bands), filled with ln(1e-8)
void spec_augment(RealMatrix& mel, RngStream& rng);

std::vector<double> forward(const DetectorModel& model, const FeatureVector& f);

struct Gradients {
    std::vector<double> w1, b1, w2, b2;
};

// mean BCE over the five classes, logit-stable, with exact analytic
// gradients for all four tensors
double bce_loss_and_grads(const DetectorModel& model, const FeatureVector& f,
                          const Labels& labels, Gradients* grads);

struct TrainConfig {
    double lr = 3e-4;
    size_t epochs = 300;
    size_t batch_size = 64;
    double grad_clip_norm = 10.0;
    uint64_t seed = 0;
    bool use_spec_augment = true;
};

struct MelExample {
    RealMatrix mel;
    Labels labels;
};

struct FeatureExample {
    FeatureVector features;
    Labels labels;
};

struct TrainResult {
    DetectorModel model;
    std::vector<double> loss_curve; // per step
    std::vector<double> lr_curve;   // per step
};

// Adam with global-norm clipping and x0.1 lr drops at 80% and 95% of
// total steps. SpecAugment re-masks the mels each epoch when enabled.
TrainResult train(const std::vector<MelExample>& data, const TrainConfig& cfg);

// feature-level training path (no SpecAugment); also used by tests
TrainResult train_on_features(const std::vector<FeatureExample>& data, const TrainConfig& cfg,
                              size_t in_dim = kFeatureDim);

// kinds whose sigmoid(logit) >= t
std::vector<EffectKind> predict_effects(const DetectorModel& model, const AudioClip& clip,
                                        double threshold = 0.5);

struct ClasswiseAccuracy {
    std::array<double, kNumEffects> per_class{};
    double mean = 0.0;
};

ClasswiseAccuracy classwise_accuracy(const DetectorModel& model,
                                     const std::vector<FeatureExample>& test_set,
                                     double threshold);

// JSON model file with base64 little-endian float32 tensor blobs
void save_model(const DetectorModel& model, const std::string& path);
DetectorModel load_model(const std::string& path);

} // namespace remfx
