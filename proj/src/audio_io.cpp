#include "timbre/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace timbre {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

struct FmtChunk {
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits_per_sample = 0;
};

void append_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void append_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate_hz, int channels, bool as_float) {
    const std::uint16_t bits = as_float ? 32 : 16;
    const std::uint16_t block_align = static_cast<std::uint16_t>(channels * bits / 8);
    const std::uint32_t data_size =
        static_cast<std::uint32_t>(samples.size() * bits / 8);

    std::string out;
    out.reserve(44 + data_size);
    out += "RIFF";
    append_u32(out, 36 + data_size);
    out += "WAVE";
    out += "fmt ";
    append_u32(out, 16);
    append_u16(out, as_float ? 3 : 1);
    append_u16(out, static_cast<std::uint16_t>(channels));
    append_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
    append_u32(out, static_cast<std::uint32_t>(sample_rate_hz) * block_align);
    append_u16(out, block_align);
    append_u16(out, bits);
    out += "data";
    append_u32(out, data_size);

    if (as_float) {
        for (double s : samples) {
            float f = static_cast<float>(s);
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            append_u32(out, u);
        }
    } else {
        for (double s : samples) {
            double clamped = std::clamp(s, -1.0, 1.0);
            long v = std::lround(clamped * 32767.0);
            append_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
        }
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw WavError(WavFault::not_found, "cannot open for writing: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

} // namespace

AudioClip load_wav(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw WavError(WavFault::not_found, "file not found: " + path.string());

    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw WavError(WavFault::corrupt, "not a RIFF/WAVE file: " + path.string());
    }

    FmtChunk fmt;
    bool have_fmt = false;
    const std::uint8_t* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        std::uint32_t size = read_u32(bytes.data() + pos + 4);
        pos += 8;
        if (pos + size > bytes.size()) {
            throw WavError(WavFault::corrupt,
                           "truncated chunk in WAV file: " + path.string());
        }
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (size < 16)
                throw WavError(WavFault::corrupt, "fmt chunk too small: " + path.string());
            fmt.format = read_u16(bytes.data() + pos);
            fmt.channels = read_u16(bytes.data() + pos + 2);
            fmt.sample_rate = read_u32(bytes.data() + pos + 4);
            fmt.bits_per_sample = read_u16(bytes.data() + pos + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = bytes.data() + pos;
            data_size = size;
        }
        pos += size + (size & 1); // chunks are word-aligned
    }

    if (!have_fmt || data == nullptr)
        throw WavError(WavFault::corrupt, "missing fmt or data chunk: " + path.string());
    if (fmt.channels == 0 || fmt.sample_rate == 0)
        throw WavError(WavFault::corrupt, "bad fmt fields: " + path.string());

    const bool pcm16 = fmt.format == 1 && fmt.bits_per_sample == 16;
    const bool pcm32 = fmt.format == 1 && fmt.bits_per_sample == 32;
    const bool f32 = fmt.format == 3 && fmt.bits_per_sample == 32;
    if (!pcm16 && !pcm32 && !f32) {
        throw WavError(WavFault::unsupported_encoding,
                       "unsupported WAV encoding (format " + std::to_string(fmt.format) +
                           ", " + std::to_string(fmt.bits_per_sample) + " bits): " +
                           path.string());
    }

    const std::size_t bytes_per_sample = fmt.bits_per_sample / 8;
    const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
    if (frame_bytes == 0 || data_size % frame_bytes != 0)
        throw WavError(WavFault::corrupt, "data chunk size mismatch: " + path.string());
    const std::size_t num_frames = data_size / frame_bytes;
    if (num_frames == 0)
        throw WavError(WavFault::corrupt, "empty data chunk: " + path.string());

    AudioClip clip;
    clip.sample_rate_hz = static_cast<int>(fmt.sample_rate);
    clip.source_id = path.stem().string();
    clip.samples.resize(num_frames);

    const double ch_scale = 1.0 / fmt.channels;
    for (std::size_t i = 0; i < num_frames; ++i) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < fmt.channels; ++c) {
            const std::uint8_t* p = data + (i * fmt.channels + c) * bytes_per_sample;
            double v;
            if (pcm16) {
                std::int16_t s;
                std::memcpy(&s, p, 2);
                v = s / 32768.0;
            } else if (pcm32) {
                std::int32_t s;
                std::memcpy(&s, p, 4);
                v = s / 2147483648.0;
            } else {
                float s;
                std::memcpy(&s, p, 4);
                v = s;
            }
            acc += v;
        }
        clip.samples[i] = std::clamp(acc * ch_scale, -1.0, 1.0);
    }
    return clip;
}

void write_wav_pcm16(const std::filesystem::path& path,
                     std::span<const double> samples, int sample_rate_hz,
                     int channels) {
    write_wav(path, samples, sample_rate_hz, channels, false);
}

void write_wav_float32(const std::filesystem::path& path,
                       std::span<const double> samples, int sample_rate_hz,
                       int channels) {
    write_wav(path, samples, sample_rate_hz, channels, true);
}

std::size_t full_frame_count(std::size_t num_samples, std::size_t frame_length,
                             std::size_t hop) {
    if (num_samples < frame_length) return 0;
    return (num_samples - frame_length) / hop + 1;
}

FrameSequence split_frames(const AudioClip& clip, std::size_t frame_length,
                           std::size_t hop, bool pad_tail) {
    if (frame_length < 1 || hop < 1)
        throw DataError("split_frames: frame_length and hop must be >= 1");
    if (clip.samples.empty()) throw DataError("split_frames: empty clip");

    const std::size_t n = clip.samples.size();
    std::size_t count = full_frame_count(n, frame_length, hop);
    if (pad_tail) {
        // a trailing partial frame exists when the full frames do not end
        // exactly at the last sample
        if (n < frame_length || (n - frame_length) % hop != 0) ++count;
    } else if (count == 0) {
        throw DataError("split_frames: clip shorter than one frame and padding disabled");
    }

    FrameSequence seq;
    seq.frame_count = count;
    seq.frame_length = frame_length;
    seq.hop = hop;
    seq.sample_rate_hz = clip.sample_rate_hz;
    seq.data.assign(count * frame_length, 0.0);

    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t start = i * hop;
        const std::size_t take = std::min(frame_length, n - std::min(n, start));
        if (start < n)
            std::copy_n(clip.samples.begin() + static_cast<std::ptrdiff_t>(start), take,
                        seq.data.begin() + static_cast<std::ptrdiff_t>(i * frame_length));
    }
    return seq;
}

std::vector<double> hamming_coefficients(std::size_t n) {
    if (n < 2) throw DataError("hamming window needs at least 2 points");
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                      static_cast<double>(n - 1));
    return w;
}

std::vector<double> hamming_window(std::span<const double> frame) {
    auto w = hamming_coefficients(frame.size());
    for (std::size_t i = 0; i < frame.size(); ++i) w[i] *= frame[i];
    return w;
}

} // namespace timbre
