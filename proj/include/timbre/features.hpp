#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "timbre/audio_io.hpp"
#include "timbre/matrix.hpp"
#include "timbre/spectral.hpp"

namespace timbre {

/// Which descriptors to extract and with what analysis parameters.
/// The default configuration yields the 36-dimensional fused vector:
/// time 4 + frequency 8 + cepstral 24.
struct FeatureConfig {
    int sample_rate_hz = 44100;
    std::size_t frame_length = 1024; // ~23 ms at 44.1 kHz, power of two
    std::size_t hop = 512;

    bool time_domain = true;
    bool frequency_domain = true;
    bool cepstral_domain = true;
    bool autocorr_domain = false;

    std::size_t mfcc_count = 12;  // L
    std::size_t mel_filters = 40; // M
    double rolloff_percentile = 0.85;
    std::size_t hpss_kernel = 17;
    double hpss_power = 2.0;
    double log_floor = 1e-10;

    std::size_t dimension() const;
    void validate() const;
};

FeatureConfig load_feature_config(const std::filesystem::path& path);
void save_feature_config(const FeatureConfig& cfg, const std::filesystem::path& path);

/// Ordered column names matching the fused vector layout for this config.
std::vector<std::string> feature_names(const FeatureConfig& cfg);

// ---- per-frame descriptors ------------------------------------------------

/// Magnitude-weighted mean bin index of the normalized spectrum.
/// All-zero input yields 0.
double spectral_centroid(std::span<const double> mags);

/// Magnitude-weighted standard deviation (in bins) around the centroid.
double spectral_spread(std::span<const double> mags, double centroid);

/// Smallest bin index whose cumulative magnitude reaches the given fraction
/// of the total. All-zero input yields 0.
std::size_t spectral_rolloff(std::span<const double> mags, double percentile = 0.85);

/// Half the summed absolute sign changes; sgn(0) counts as positive.
double zero_crossing_rate(std::span<const double> frame);

double rms_energy(std::span<const double> frame);

/// Mel-frequency cepstral coefficients C_1..C_L of one power-spectrum frame:
/// filter energies, floored, logged, then cosine-transformed.
std::vector<double> mfcc(std::span<const double> power_bins, const MelFilterbank& bank,
                         std::size_t count = 12, double log_floor = 1e-10);

/// Median-filtering harmonic/percussive decomposition with soft masks
/// H^p/(H^p+P^p) and P^p/(H^p+P^p). Windows are truncated at the edges, so a
/// single-frame input passes through the time filter unchanged.
std::pair<Spectrogram, Spectrogram> hpss(const Spectrogram& spec,
                                         std::size_t kernel = 17, double power = 2.0);

/// Per-frame harmonic energy fraction: sum(H^2) / (sum(H^2) + sum(P^2)),
/// 0.5 where both components are silent.
std::vector<double> harmonic_ratio(const Spectrogram& harmonic,
                                   const Spectrogram& percussive);

struct AutocorrPeak {
    double lag = 0.0;      // samples
    double strength = 0.0; // normalized autocorrelation at the peak
};

/// Largest local maximum of the mean-removed, normalized autocorrelation,
/// searched over lags [2, N/2]. Returns {0, 0} when no local maximum exists.
AutocorrPeak autocorrelation_features(std::span<const double> frame);

/// Arithmetic mean and population variance of a per-frame series.
std::pair<double, double> aggregate_mean_variance(std::span<const double> series);

/// Concatenates channel vectors in fixed order time + frequency + cepstral
/// (+ extra). The first three are required; extra may be empty.
std::vector<double> fuse_channels(std::span<const double> time_channel,
                                  std::span<const double> frequency_channel,
                                  std::span<const double> cepstral_channel,
                                  std::span<const double> extra_channel = {});

// ---- clip-level extraction ------------------------------------------------

/// Per-domain mean/variance vectors for one clip. Disabled domains are empty.
struct ClipChannels {
    std::vector<double> time;      // zcr, rms            -> 4 values
    std::vector<double> frequency; // centroid, spread, rolloff, harmonic ratio -> 8
    std::vector<double> cepstral;  // mfcc 1..L           -> 2L values
    std::vector<double> autocorr;  // peak lag, strength  -> 4 values
};

ClipChannels extract_clip_channels(const AudioClip& clip, const FeatureConfig& cfg,
                                   const MelFilterbank* bank = nullptr);

/// Full pipeline for one clip: frames -> window -> STFT -> per-domain series
/// -> mean/variance -> fused vector. Deterministic for fixed input and config.
std::vector<double> extract_clip_features(const AudioClip& clip,
                                          const FeatureConfig& cfg,
                                          const MelFilterbank* bank = nullptr);

/// Extracts all clips in parallel; row i holds clip i's fused vector.
Matrix extract_batch(const std::vector<AudioClip>& clips, const FeatureConfig& cfg);

// ---- feature table I/O ------------------------------------------------

/// Extracted features for a set of clips: one row per clip plus identity.
struct FeatureTable {
    std::vector<std::string> ids;
    std::vector<std::string> labels;
    std::vector<std::string> column_names;
    Matrix features;
};

/// CSV with header: source_id,label,<feature columns...>
void write_feature_table(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable read_feature_table(const std::filesystem::path& path);

} // namespace timbre
