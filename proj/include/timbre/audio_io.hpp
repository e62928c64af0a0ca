#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "timbre/errors.hpp"

namespace timbre {

/// Mono audio signal with amplitudes normalized to [-1, 1].
struct AudioClip {
    std::vector<double> samples;
    int sample_rate_hz = 0;
    std::string source_id;
};

enum class WavFault {
    not_found,
    unsupported_encoding,
    corrupt,
};

class WavError : public Error {
public:
    WavError(WavFault fault, const std::string& msg) : Error(msg), fault_(fault) {}
    WavFault fault() const { return fault_; }

private:
    WavFault fault_;
};

/// Loads a RIFF/WAV file. Supported encodings: PCM16, PCM32, IEEE float32.
/// Multichannel audio is downmixed to mono by per-sample channel mean.
/// Integer samples are scaled to [-1, 1]; float samples are clamped to it.
AudioClip load_wav(const std::filesystem::path& path);

/// Writes mono samples as 16-bit PCM. Samples are clamped to [-1, 1].
void write_wav_pcm16(const std::filesystem::path& path,
                     std::span<const double> samples, int sample_rate_hz,
                     int channels = 1);

/// Writes mono samples as IEEE float32.
void write_wav_float32(const std::filesystem::path& path,
                       std::span<const double> samples, int sample_rate_hz,
                       int channels = 1);

/// Fixed-length frames cut from a clip at a constant hop.
struct FrameSequence {
    std::size_t frame_count = 0;
    std::size_t frame_length = 0;
    std::size_t hop = 0;
    int sample_rate_hz = 0;
    std::vector<double> data; // frame_count x frame_length, row-major

    std::span<const double> frame(std::size_t i) const {
        return {data.data() + i * frame_length, frame_length};
    }
    std::span<double> frame(std::size_t i) {
        return {data.data() + i * frame_length, frame_length};
    }
};

/// Number of full frames: floor((num_samples - frame_length) / hop) + 1,
/// or 0 when the clip is shorter than one frame.
std::size_t full_frame_count(std::size_t num_samples, std::size_t frame_length,
                             std::size_t hop);

/// Segments a clip into overlapping frames. When pad_tail is set, a trailing
/// partial frame is zero-padded to frame_length; otherwise the tail is
/// dropped (and a clip shorter than one frame is an error).
FrameSequence split_frames(const AudioClip& clip, std::size_t frame_length,
                           std::size_t hop, bool pad_tail = true);

/// Hamming coefficients w(n) = 0.54 - 0.46*cos(2*pi*n/(N-1)), n = 0..N-1.
std::vector<double> hamming_coefficients(std::size_t n);

/// Multiplies a frame pointwise by the Hamming window of the same length.
std::vector<double> hamming_window(std::span<const double> frame);

} // namespace timbre
