#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "remfx/audio.hpp"
#include "remfx/sources.hpp"
#include "remfx/spectral.hpp"
#include "test_helpers.hpp"

using namespace remfx;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("remfx_test_" + std::to_string(::getpid()) + "_" + name);
}

} // namespace

TEST_CASE("wav round-trip is bit-exact") {
    AudioClip clip = test_helpers::noise(1, 4321, 0.9);
    clip.samples[0] = 1.0f;
    clip.samples[1] = -1.0f;
    clip.samples[2] = 1e-30f;
    const auto path = temp_file("roundtrip.wav");
    save_wav(clip, path.string());
    const AudioClip loaded = load_wav(path.string());
    REQUIRE(loaded.samples.size() == clip.samples.size());
    CHECK(std::memcmp(loaded.samples.data(), clip.samples.data(),
                      clip.samples.size() * sizeof(float)) == 0);
    fs::remove(path);
}

TEST_CASE("wav file layout: 262144-sample clip writes 262144 float frames") {
    AudioClip clip;
    clip.samples.assign(kClipSamples, 0.25f);
    const auto path = temp_file("layout.wav");
    save_wav(clip, path.string());
    CHECK(fs::file_size(path) == 44 + kClipSamples * 4);
    fs::remove(path);
}

TEST_CASE("load_wav rejects wrong formats") {
    const auto path = temp_file("bad.wav");

    SUBCASE("wrong sample rate") {
        // patch the rate field of a valid file to 44100
        AudioClip clip = test_helpers::noise(2, 100);
        save_wav(clip, path.string());
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        const uint32_t rate = 44100;
        f.seekp(24);
        f.write(reinterpret_cast<const char*>(&rate), 4);
        f.close();
        CHECK_THROWS_AS(load_wav(path.string()), UnsupportedFormat);
        CHECK_THROWS_WITH_AS(load_wav(path.string()), doctest::Contains("44100"),
                             UnsupportedFormat);
    }
    SUBCASE("truncated header") {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << "RIFF";
        f.close();
        CHECK_THROWS_AS(load_wav(path.string()), MalformedWav);
    }
    SUBCASE("stereo") {
        AudioClip clip = test_helpers::noise(3, 100);
        save_wav(clip, path.string());
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        const uint16_t channels = 2;
        f.seekp(22);
        f.write(reinterpret_cast<const char*>(&channels), 2);
        f.close();
        CHECK_THROWS_AS(load_wav(path.string()), UnsupportedFormat);
    }
    fs::remove(path);
}

TEST_CASE("save_wav to unwritable path fails") {
    AudioClip clip = test_helpers::noise(4, 16);
    CHECK_THROWS_AS(save_wav(clip, "/nonexistent-dir/x.wav"), IoFailure);
}

TEST_CASE("synthetic sources are pure functions of (family, seed)") {
    for (SourceFamily fam : {SourceFamily::Pluck, SourceFamily::DrumHit, SourceFamily::Bass,
                             SourceFamily::VocalLike}) {
        const SourceSpec spec{fam, 42, ""};
        const AudioClip a = synthesize_source(spec, 48000);
        const AudioClip b = synthesize_source(spec, 48000);
        CHECK(a.samples == b.samples);

        const AudioClip c = synthesize_source({fam, 43, ""}, 48000);
        CHECK(a.samples != c.samples);

        float peak = 0.0f;
        for (float s : a.samples) peak = std::max(peak, std::abs(s));
        CHECK(peak <= 1.0f);
        CHECK(peak > 0.0f);
    }
}

TEST_CASE("drum hits are front-loaded") {
    const AudioClip clip = synthesize_source({SourceFamily::DrumHit, 7, ""}, kClipSamples);
    const size_t w = 4800; // 100 ms
    const double head = test_helpers::rms(clip, 0, w);
    const double tail = test_helpers::rms(clip, clip.length() - w, clip.length());
    CHECK(head > tail);
}

TEST_CASE("ingest rejects nonconforming files") {
    CHECK_THROWS_AS(synthesize_source({SourceFamily::Ingest, 0, "/no/such/file.wav"}, 100),
                    IngestFormatError);
}

TEST_CASE("stft frame count, Parseval, zeros") {
    SpectralConfig cfg;
    cfg.fft_size = 512;
    cfg.hop_size = 128;
    const AudioClip clip = test_helpers::noise(5, 4096);
    const ComplexSpectrogram spec = stft(clip, cfg);
    CHECK(spec.frames == 1 + (4096 - 512) / 128);
    CHECK(spec.bins == 257);

    // Parseval per frame with two-sided accounting
    const auto win = hann_window(cfg.fft_size);
    for (size_t f : {size_t(0), spec.frames / 2, spec.frames - 1}) {
        double time_energy = 0.0;
        for (size_t i = 0; i < cfg.fft_size; ++i) {
            const double v = clip.samples[f * cfg.hop_size + i] * win[i];
            time_energy += v * v;
        }
        double freq_energy = std::norm(spec.at(0, f)) + std::norm(spec.at(spec.bins - 1, f));
        for (size_t b = 1; b + 1 < spec.bins; ++b) freq_energy += 2.0 * std::norm(spec.at(b, f));
        freq_energy /= static_cast<double>(cfg.fft_size);
        CHECK(std::abs(time_energy - freq_energy) <= 1e-6 * freq_energy);
    }

    AudioClip zeros;
    zeros.samples.assign(2048, 0.0f);
    const ComplexSpectrogram zspec = stft(zeros, cfg);
    for (const auto& v : zspec.data) CHECK(std::abs(v) == 0.0);

    CHECK_THROWS_AS(stft(test_helpers::noise(6, 100), cfg), ClipTooShort);
}

TEST_CASE("stft of a 1 kHz sine peaks at bin 43") {
    SpectralConfig cfg;
    cfg.fft_size = 2048;
    cfg.hop_size = 1024;
    const AudioClip clip = test_helpers::sine(1000.0, 0.8, 8192);
    const ComplexSpectrogram spec = stft(clip, cfg);
    size_t argmax = 0;
    double best = 0.0;
    for (size_t b = 0; b < spec.bins; ++b) {
        const double m = std::abs(spec.at(b, 0));
        if (m > best) {
            best = m;
            argmax = b;
        }
    }
    CHECK(argmax == 43);
}

TEST_CASE("stft linearity") {
    SpectralConfig cfg;
    cfg.fft_size = 512;
    cfg.hop_size = 256;
    const AudioClip x = test_helpers::noise(7, 2048);
    AudioClip x2 = x;
    for (float& s : x2.samples) s *= 2.0f;
    const ComplexSpectrogram a = stft(x, cfg);
    const ComplexSpectrogram b = stft(x2, cfg);
    for (size_t i = 0; i < a.data.size(); ++i)
        CHECK(std::abs(b.data[i] - 2.0 * a.data[i]) <= 1e-6 * (std::abs(b.data[i]) + 1e-12));
}

TEST_CASE("log-mel features") {
    SpectralConfig cfg;
    cfg.fft_size = 2048;
    cfg.hop_size = 1024;
    cfg.mel_bands = 64;

    SUBCASE("silence floors at ln(1e-8)") {
        AudioClip silence;
        silence.samples.assign(4096, 0.0f);
        const RealMatrix mel = log_mel_features(silence, cfg);
        for (double v : mel.data) CHECK(v == doctest::Approx(std::log(1e-8)));
    }
    SUBCASE("filterbank rows have positive sum and contiguous support") {
        const RealMatrix fb = mel_filterbank(cfg, kSampleRate);
        for (size_t m = 0; m < fb.rows; ++m) {
            double sum = 0.0;
            bool in_support = false, left_support = false;
            for (size_t b = 0; b < fb.cols; ++b) {
                sum += fb.at(m, b);
                if (fb.at(m, b) > 0.0) {
                    CHECK(!left_support);
                    in_support = true;
                } else if (in_support) {
                    left_support = true;
                    in_support = false;
                }
            }
            CHECK(sum > 0.0);
        }
    }
    SUBCASE("white noise lifts every band above the floor") {
        const RealMatrix mel = log_mel_features(test_helpers::noise(8, 8192, 0.5), cfg);
        for (double v : mel.data) CHECK(v > std::log(1e-8));
    }
}
