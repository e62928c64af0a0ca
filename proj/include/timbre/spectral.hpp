#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "timbre/audio_io.hpp"
#include "timbre/matrix.hpp"

namespace timbre {

/// One-sided magnitude spectrogram: frame_length/2 + 1 bins per frame.
struct Spectrogram {
    std::size_t bins = 0;
    std::size_t frames = 0;
    double bin_hz = 0.0;
    int sample_rate_hz = 0;
    std::vector<double> mags; // frames x bins, row-major

    std::span<const double> frame(std::size_t f) const {
        return {mags.data() + f * bins, bins};
    }
    std::span<double> frame(std::size_t f) { return {mags.data() + f * bins, bins}; }
    double at(std::size_t f, std::size_t b) const { return mags[f * bins + b]; }
};

/// Windowed DFT magnitudes per frame. frame_length must be a power of two.
/// The Hamming window is applied internally.
Spectrogram stft(const FrameSequence& frames);

/// Elementwise squared magnitudes (energy spectrum), frames x bins.
Matrix power_spectrum(const Spectrogram& spec);

double hz_to_mel(double f_hz);
double mel_to_hz(double mel);

/// Triangular Mel filterbank sampled on the spectrogram bins. Filter peaks
/// are 1.0 at their (bin-snapped) center; adjacent filters share edges.
struct MelFilterbank {
    std::size_t num_filters = 0;
    std::size_t bins = 0;
    std::vector<double> weights;      // num_filters x bins, row-major
    std::vector<double> edges_hz;     // M + 2 mel-equispaced frequencies
    std::vector<std::size_t> edge_bins; // the same edges snapped to bins

    std::span<const double> filter(std::size_t m) const {
        return {weights.data() + m * bins, bins};
    }
};

MelFilterbank build_mel_filterbank(std::size_t num_filters, std::size_t frame_length,
                                   int sample_rate_hz, double f_min_hz,
                                   double f_max_hz);

/// Writes the spectrogram as delimited text, one row per frequency bin,
/// one column per frame (plot-ready orientation).
void dump_spectrogram(const Spectrogram& spec, std::ostream& out);

namespace detail {

/// In-place iterative radix-2 FFT. buf.size() must be a power of two.
void fft_inplace(std::span<std::complex<double>> buf);

/// Magnitudes of bins 0..n/2 of one Hamming-windowed frame.
void stft_frame(std::span<const double> frame, std::span<const double> window,
                std::span<std::complex<double>> scratch, std::span<double> out_mags);

} // namespace detail
} // namespace timbre
