#pragma once

#include <cstdint>
#include <string>

#include "remfx/audio.hpp"

namespace remfx {

struct IngestFormatError : AudioError {
    using AudioError::AudioError;
};

enum class SourceFamily { Pluck, DrumHit, Bass, VocalLike, Ingest };

const char* source_family_name(SourceFamily f);
SourceFamily source_family_from_name(const std::string& name);

// Seed fully determines the output for the synthetic families. Ingest
// reads a pre-converted 48 kHz mono float WAV from `path`.
struct SourceSpec {
    SourceFamily family = SourceFamily::Pluck;
    uint64_t seed = 0;
    std::string path; // ingest only
};

AudioClip synthesize_source(const SourceSpec& spec, size_t length);

} // namespace remfx
