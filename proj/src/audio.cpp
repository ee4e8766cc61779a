#include "remfx/audio.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace remfx {

namespace {

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

uint32_t read_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const unsigned char* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

} // namespace

AudioClip load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const size_t n = bytes.size();

    if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
        throw MalformedWav(path + ": not a RIFF/WAVE file");

    bool have_fmt = false;
    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    const unsigned char* data = nullptr;
    uint32_t data_len = 0;

    size_t off = 12;
    while (off + 8 <= n) {
        const char* id = reinterpret_cast<const char*>(p + off);
        uint32_t sz = read_u32(p + off + 4);
        if (off + 8 + sz > n) throw MalformedWav(path + ": truncated chunk");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (sz < 16) throw MalformedWav(path + ": fmt chunk too small");
            format = read_u16(p + off + 8);
            channels = read_u16(p + off + 10);
            rate = read_u32(p + off + 12);
            bits = read_u16(p + off + 22);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = p + off + 8;
            data_len = sz;
        }
        off += 8 + sz + (sz & 1); // chunks are word-aligned
    }

    if (!have_fmt || data == nullptr) throw MalformedWav(path + ": missing fmt or data chunk");
    if (format != 3) throw UnsupportedFormat(path + ": format tag " + std::to_string(format) + ", need IEEE float (3)");
    if (channels != 1) throw UnsupportedFormat(path + ": " + std::to_string(channels) + " channels, need mono");
    if (rate != kSampleRate) throw UnsupportedFormat(path + ": sample rate " + std::to_string(rate) + ", need 48000");
    if (bits != 32) throw UnsupportedFormat(path + ": " + std::to_string(bits) + " bits, need 32");
    if (data_len % 4 != 0) throw MalformedWav(path + ": data chunk not a whole number of frames");

    AudioClip clip;
    clip.sample_rate = kSampleRate;
    clip.samples.resize(data_len / 4);
    std::memcpy(clip.samples.data(), data, data_len);
    return clip;
}

void save_wav(const AudioClip& clip, const std::string& path) {
    const uint32_t data_len = static_cast<uint32_t>(clip.samples.size() * 4);
    std::string out;
    out.reserve(44 + data_len);
    out.append("RIFF");
    put_u32(out, 36 + data_len);
    out.append("WAVE");
    out.append("fmt ");
    put_u32(out, 16);
    put_u16(out, 3);  // IEEE float
    put_u16(out, 1);  // mono
    put_u32(out, kSampleRate);
    put_u32(out, kSampleRate * 4); // byte rate
    put_u16(out, 4);               // block align
    put_u16(out, 32);
    out.append("data");
    put_u32(out, data_len);
    const size_t header = out.size();
    out.resize(header + data_len);
    std::memcpy(out.data() + header, clip.samples.data(), data_len);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoFailure("cannot open " + path + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoFailure("short write to " + path);
}

} // namespace remfx
