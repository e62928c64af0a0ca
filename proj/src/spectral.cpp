#include "timbre/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "timbre/errors.hpp"

namespace timbre {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

} // namespace

namespace detail {

// w[j] = exp(-2*pi*i*j/n) for j < n/2; each entry evaluated directly so
// table error stays at machine epsilon
static std::vector<std::complex<double>> make_twiddles(std::size_t n) {
    std::vector<std::complex<double>> w(n / 2);
    for (std::size_t j = 0; j < n / 2; ++j)
        w[j] = std::polar(1.0, -2.0 * kPi * static_cast<double>(j) /
                                   static_cast<double>(n));
    return w;
}

static void fft_with_table(std::span<std::complex<double>> buf,
                           std::span<const std::complex<double>> twiddles) {
    const std::size_t n = buf.size();

    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(buf[i], buf[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len >> 1;
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const std::complex<double> u = buf[i + k];
                const std::complex<double> v = buf[i + k + half] * twiddles[k * stride];
                buf[i + k] = u + v;
                buf[i + k + half] = u - v;
            }
        }
    }
}

void fft_inplace(std::span<std::complex<double>> buf) {
    if (!is_power_of_two(buf.size()))
        throw DataError("fft: length must be a power of two");
    fft_with_table(buf, make_twiddles(buf.size()));
}

void stft_frame(std::span<const double> frame, std::span<const double> window,
                std::span<std::complex<double>> scratch, std::span<double> out_mags) {
    const std::size_t n = frame.size();
    thread_local std::vector<std::complex<double>> twiddles;
    thread_local std::size_t twiddle_n = 0;
    if (twiddle_n != n) {
        twiddles = make_twiddles(n);
        twiddle_n = n;
    }
    for (std::size_t i = 0; i < n; ++i) scratch[i] = frame[i] * window[i];
    fft_with_table(scratch.subspan(0, n), twiddles);
    for (std::size_t k = 0; k < out_mags.size(); ++k) out_mags[k] = std::abs(scratch[k]);
}

} // namespace detail

Spectrogram stft(const FrameSequence& frames) {
    if (frames.frame_count == 0) throw DataError("stft: empty frame sequence");
    if (!is_power_of_two(frames.frame_length))
        throw DataError("stft: frame_length must be a power of two");

    const std::size_t n = frames.frame_length;
    const std::size_t bins = n / 2 + 1;
    const auto window = hamming_coefficients(n);

    Spectrogram spec;
    spec.bins = bins;
    spec.frames = frames.frame_count;
    spec.sample_rate_hz = frames.sample_rate_hz;
    spec.bin_hz = static_cast<double>(frames.sample_rate_hz) / static_cast<double>(n);
    spec.mags.resize(bins * frames.frame_count);

#pragma omp parallel
    {
        std::vector<std::complex<double>> scratch(n);
#pragma omp for schedule(static)
        for (std::ptrdiff_t f = 0; f < static_cast<std::ptrdiff_t>(frames.frame_count);
             ++f) {
            detail::stft_frame(frames.frame(static_cast<std::size_t>(f)), window,
                               scratch, spec.frame(static_cast<std::size_t>(f)));
        }
    }
    return spec;
}

Matrix power_spectrum(const Spectrogram& spec) {
    Matrix p(spec.frames, spec.bins);
    for (std::size_t i = 0; i < spec.mags.size(); ++i)
        p.data[i] = spec.mags[i] * spec.mags[i];
    return p;
}

double hz_to_mel(double f_hz) {
    if (f_hz < 0.0) throw DataError("hz_to_mel: negative frequency");
    return 2595.0 * std::log10(1.0 + f_hz / 700.0);
}

double mel_to_hz(double mel) {
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank build_mel_filterbank(std::size_t num_filters, std::size_t frame_length,
                                   int sample_rate_hz, double f_min_hz,
                                   double f_max_hz) {
    const double nyquist = sample_rate_hz / 2.0;
    if (num_filters < 1) throw ConfigError("mel filterbank: need at least one filter");
    if (f_min_hz < 0.0 || f_min_hz >= f_max_hz || f_max_hz > nyquist)
        throw ConfigError("mel filterbank: invalid frequency range");

    MelFilterbank bank;
    bank.num_filters = num_filters;
    bank.bins = frame_length / 2 + 1;
    bank.weights.assign(num_filters * bank.bins, 0.0);

    const double mel_lo = hz_to_mel(f_min_hz);
    const double mel_hi = hz_to_mel(f_max_hz);
    const double mel_step = (mel_hi - mel_lo) / static_cast<double>(num_filters + 1);
    const double bin_hz =
        static_cast<double>(sample_rate_hz) / static_cast<double>(frame_length);

    bank.edges_hz.resize(num_filters + 2);
    bank.edge_bins.resize(num_filters + 2);
    for (std::size_t i = 0; i < num_filters + 2; ++i) {
        bank.edges_hz[i] = mel_to_hz(mel_lo + mel_step * static_cast<double>(i));
        long b = std::lround(bank.edges_hz[i] / bin_hz);
        bank.edge_bins[i] =
            std::min(static_cast<std::size_t>(std::max(b, 0l)), bank.bins - 1);
    }
    // keep snapped edges strictly increasing so every triangle has width
    for (std::size_t i = 1; i < bank.edge_bins.size(); ++i) {
        if (bank.edge_bins[i] <= bank.edge_bins[i - 1])
            bank.edge_bins[i] = std::min(bank.edge_bins[i - 1] + 1, bank.bins - 1);
    }

    for (std::size_t m = 0; m < num_filters; ++m) {
        const std::size_t lo = bank.edge_bins[m];
        const std::size_t center = bank.edge_bins[m + 1];
        const std::size_t hi = bank.edge_bins[m + 2];
        double* row = bank.weights.data() + m * bank.bins;
        for (std::size_t b = lo; b <= center; ++b) {
            row[b] = static_cast<double>(b - lo) / static_cast<double>(center - lo);
        }
        for (std::size_t b = center; b <= hi; ++b) {
            row[b] = static_cast<double>(hi - b) / static_cast<double>(hi - center);
        }
        row[center] = 1.0;
    }
    return bank;
}

void dump_spectrogram(const Spectrogram& spec, std::ostream& out) {
    char buf[40];
    for (std::size_t b = 0; b < spec.bins; ++b) {
        for (std::size_t f = 0; f < spec.frames; ++f) {
            std::snprintf(buf, sizeof(buf), "%.9g", spec.at(f, b));
            if (f) out << '\t';
            out << buf;
        }
        out << '\n';
    }
}

} // namespace timbre
