#include "timbre/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "text_util.hpp"
#include "timbre/errors.hpp"

namespace timbre {

namespace {

constexpr double kPi = 3.14159265358979323846;

} // namespace

// ---- config ----------------------------------------------------------------

std::size_t FeatureConfig::dimension() const {
    std::size_t d = 0;
    if (time_domain) d += 4;
    if (frequency_domain) d += 8;
    if (cepstral_domain) d += 2 * mfcc_count;
    if (autocorr_domain) d += 4;
    return d;
}

void FeatureConfig::validate() const {
    if (sample_rate_hz <= 0) throw ConfigError("sample_rate_hz must be positive");
    if (frame_length < 2 || (frame_length & (frame_length - 1)) != 0)
        throw ConfigError("frame_length must be a power of two >= 2");
    if (hop < 1) throw ConfigError("hop must be >= 1");
    if (!time_domain && !frequency_domain && !cepstral_domain && !autocorr_domain)
        throw ConfigError("no feature domain enabled");
    if (mfcc_count < 1 || mfcc_count > mel_filters)
        throw ConfigError("mfcc_count must be in [1, mel_filters]");
    if (rolloff_percentile <= 0.0 || rolloff_percentile > 1.0)
        throw ConfigError("rolloff_percentile must be in (0, 1]");
    if (hpss_kernel < 1 || hpss_kernel % 2 == 0)
        throw ConfigError("hpss_kernel must be odd");
    if (log_floor <= 0.0) throw ConfigError("log_floor must be positive");
}

FeatureConfig load_feature_config(const std::filesystem::path& path) {
    FeatureConfig cfg;
    for (const auto& [key, value] : textutil::read_kv_file(path)) {
        if (key == "sample_rate_hz")
            cfg.sample_rate_hz = static_cast<int>(textutil::parse_long(value, key.c_str()));
        else if (key == "frame_length")
            cfg.frame_length =
                static_cast<std::size_t>(textutil::parse_long(value, key.c_str()));
        else if (key == "hop")
            cfg.hop = static_cast<std::size_t>(textutil::parse_long(value, key.c_str()));
        else if (key == "time_domain")
            cfg.time_domain = textutil::parse_long(value, key.c_str()) != 0;
        else if (key == "frequency_domain")
            cfg.frequency_domain = textutil::parse_long(value, key.c_str()) != 0;
        else if (key == "cepstral_domain")
            cfg.cepstral_domain = textutil::parse_long(value, key.c_str()) != 0;
        else if (key == "autocorr_domain")
            cfg.autocorr_domain = textutil::parse_long(value, key.c_str()) != 0;
        else if (key == "mfcc_count")
            cfg.mfcc_count =
                static_cast<std::size_t>(textutil::parse_long(value, key.c_str()));
        else if (key == "mel_filters")
            cfg.mel_filters =
                static_cast<std::size_t>(textutil::parse_long(value, key.c_str()));
        else if (key == "rolloff_percentile")
            cfg.rolloff_percentile = textutil::parse_double(value, key.c_str());
        else if (key == "hpss_kernel")
            cfg.hpss_kernel =
                static_cast<std::size_t>(textutil::parse_long(value, key.c_str()));
        else if (key == "hpss_power")
            cfg.hpss_power = textutil::parse_double(value, key.c_str());
        else if (key == "log_floor")
            cfg.log_floor = textutil::parse_double(value, key.c_str());
        else
            throw ConfigError("unknown feature config key: " + key);
    }
    cfg.validate();
    return cfg;
}

void save_feature_config(const FeatureConfig& cfg, const std::filesystem::path& path) {
    auto f = textutil::open_out(path);
    f << "sample_rate_hz " << cfg.sample_rate_hz << "\n"
      << "frame_length " << cfg.frame_length << "\n"
      << "hop " << cfg.hop << "\n"
      << "time_domain " << (cfg.time_domain ? 1 : 0) << "\n"
      << "frequency_domain " << (cfg.frequency_domain ? 1 : 0) << "\n"
      << "cepstral_domain " << (cfg.cepstral_domain ? 1 : 0) << "\n"
      << "autocorr_domain " << (cfg.autocorr_domain ? 1 : 0) << "\n"
      << "mfcc_count " << cfg.mfcc_count << "\n"
      << "mel_filters " << cfg.mel_filters << "\n"
      << "rolloff_percentile " << textutil::format_double(cfg.rolloff_percentile) << "\n"
      << "hpss_kernel " << cfg.hpss_kernel << "\n"
      << "hpss_power " << textutil::format_double(cfg.hpss_power) << "\n"
      << "log_floor " << textutil::format_double(cfg.log_floor) << "\n";
}

std::vector<std::string> feature_names(const FeatureConfig& cfg) {
    std::vector<std::string> names;
    auto add = [&](const std::string& base) {
        names.push_back(base + "_mean");
        names.push_back(base + "_var");
    };
    if (cfg.time_domain) {
        add("zcr");
        add("rms");
    }
    if (cfg.frequency_domain) {
        add("centroid");
        add("spread");
        add("rolloff");
        add("harmonic_ratio");
    }
    if (cfg.cepstral_domain) {
        for (std::size_t i = 1; i <= cfg.mfcc_count; ++i) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "mfcc%02zu", i);
            add(buf);
        }
    }
    if (cfg.autocorr_domain) {
        add("acorr_lag");
        add("acorr_strength");
    }
    return names;
}

// ---- per-frame descriptors ---------------------------------------------------

double spectral_centroid(std::span<const double> mags) {
    double total = 0.0;
    for (double m : mags) total += m;
    if (total <= 0.0) return 0.0;
    double c = 0.0;
    for (std::size_t k = 0; k < mags.size(); ++k)
        c += static_cast<double>(k) * mags[k];
    return c / total;
}

double spectral_spread(std::span<const double> mags, double centroid) {
    double total = 0.0;
    for (double m : mags) total += m;
    if (total <= 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < mags.size(); ++k) {
        const double d = static_cast<double>(k) - centroid;
        acc += d * d * mags[k];
    }
    return std::sqrt(acc / total);
}

std::size_t spectral_rolloff(std::span<const double> mags, double percentile) {
    if (percentile <= 0.0 || percentile > 1.0)
        throw DataError("spectral_rolloff: percentile must be in (0, 1]");
    double total = 0.0;
    for (double m : mags) total += m;
    if (total <= 0.0) return 0;
    // small slack so an exact fraction (e.g. 85/100) is not missed to rounding
    const double threshold = percentile * total - 1e-12 * total;
    double cum = 0.0;
    for (std::size_t k = 0; k < mags.size(); ++k) {
        cum += mags[k];
        if (cum >= threshold) return k;
    }
    return mags.size() - 1;
}

double zero_crossing_rate(std::span<const double> frame) {
    if (frame.size() < 2) throw DataError("zero_crossing_rate: frame too short");
    auto sgn = [](double x) { return x >= 0.0 ? 1 : -1; };
    int crossings2 = 0;
    for (std::size_t n = 1; n < frame.size(); ++n)
        crossings2 += std::abs(sgn(frame[n]) - sgn(frame[n - 1]));
    return 0.5 * crossings2;
}

double rms_energy(std::span<const double> frame) {
    if (frame.empty()) throw DataError("rms_energy: empty frame");
    double acc = 0.0;
    for (double x : frame) acc += x * x;
    return std::sqrt(acc / static_cast<double>(frame.size()));
}

std::vector<double> mfcc(std::span<const double> power_bins, const MelFilterbank& bank,
                         std::size_t count, double log_floor) {
    if (power_bins.size() != bank.bins)
        throw DataError("mfcc: power spectrum bins do not match filterbank");
    if (count > bank.num_filters)
        throw DataError("mfcc: more coefficients requested than filters");

    const std::size_t m_filters = bank.num_filters;
    std::vector<double> log_energy(m_filters);
    for (std::size_t m = 0; m < m_filters; ++m) {
        const double* w = bank.weights.data() + m * bank.bins;
        // triangles have contiguous support; restrict the dot product to it
        const std::size_t lo = bank.edge_bins[m];
        const std::size_t hi = std::min(bank.edge_bins[m + 2], bank.bins - 1);
        double e = 0.0;
        for (std::size_t b = lo; b <= hi; ++b) e += w[b] * power_bins[b];
        log_energy[m] = std::log(std::max(e, log_floor));
    }

    std::vector<double> coeffs(count);
    for (std::size_t n = 1; n <= count; ++n) {
        double acc = 0.0;
        for (std::size_t k = 1; k <= m_filters; ++k) {
            acc += log_energy[k - 1] *
                   std::cos(kPi * (static_cast<double>(k) - 0.5) *
                            static_cast<double>(n) / static_cast<double>(m_filters));
        }
        coeffs[n - 1] = acc;
    }
    return coeffs;
}

// ---- HPSS -----------------------------------------------------------------

namespace hpss_detail {

// median over window [i-k/2, i+k/2] ∩ [0,n) of contiguous values
double truncated_median(const double* v, std::size_t n, std::size_t i,
                        std::size_t kernel, std::vector<double>& tmp) {
    const std::size_t half = kernel / 2;
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(i + half, n - 1);
    tmp.assign(v + lo, v + hi + 1);
    const std::size_t mid = tmp.size() / 2;
    std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(mid),
                     tmp.end());
    return tmp[mid];
}

void time_median_for_bin(const Spectrogram& spec, std::size_t b, std::size_t kernel,
                         std::vector<double>& column, std::vector<double>& tmp,
                         std::vector<double>& out) {
    column.resize(spec.frames);
    for (std::size_t f = 0; f < spec.frames; ++f) column[f] = spec.at(f, b);
    for (std::size_t f = 0; f < spec.frames; ++f)
        out[f * spec.bins + b] =
            truncated_median(column.data(), spec.frames, f, kernel, tmp);
}

void freq_median_for_frame(const Spectrogram& spec, std::size_t f, std::size_t kernel,
                           std::vector<double>& tmp, std::vector<double>& out) {
    const double* row = spec.mags.data() + f * spec.bins;
    for (std::size_t b = 0; b < spec.bins; ++b)
        out[f * spec.bins + b] = truncated_median(row, spec.bins, b, kernel, tmp);
}

void apply_masks(const Spectrogram& spec, const std::vector<double>& h_med,
                 const std::vector<double>& p_med, double power, Spectrogram& harm,
                 Spectrogram& perc) {
    harm = spec;
    perc = spec;
    for (std::size_t i = 0; i < spec.mags.size(); ++i) {
        const double hp = std::pow(h_med[i], power);
        const double pp = std::pow(p_med[i], power);
        const double denom = hp + pp;
        double mh = 0.5, mp = 0.5;
        if (denom > 0.0) {
            mh = hp / denom;
            mp = pp / denom;
        }
        harm.mags[i] = spec.mags[i] * mh;
        perc.mags[i] = spec.mags[i] * mp;
    }
}

} // namespace hpss_detail

std::pair<Spectrogram, Spectrogram> hpss(const Spectrogram& spec, std::size_t kernel,
                                         double power) {
    if (spec.frames < 1) throw DataError("hpss: empty spectrogram");
    if (kernel < 1 || kernel % 2 == 0) throw ConfigError("hpss: kernel must be odd");

    std::vector<double> h_med(spec.mags.size());
    std::vector<double> p_med(spec.mags.size());

#pragma omp parallel
    {
        std::vector<double> column, tmp;
#pragma omp for schedule(static) nowait
        for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(spec.bins); ++b)
            hpss_detail::time_median_for_bin(spec, static_cast<std::size_t>(b), kernel,
                                             column, tmp, h_med);
#pragma omp for schedule(static)
        for (std::ptrdiff_t f = 0; f < static_cast<std::ptrdiff_t>(spec.frames); ++f)
            hpss_detail::freq_median_for_frame(spec, static_cast<std::size_t>(f),
                                               kernel, tmp, p_med);
    }

    std::pair<Spectrogram, Spectrogram> out;
    hpss_detail::apply_masks(spec, h_med, p_med, power, out.first, out.second);
    return out;
}

std::vector<double> harmonic_ratio(const Spectrogram& harmonic,
                                   const Spectrogram& percussive) {
    if (harmonic.frames != percussive.frames || harmonic.bins != percussive.bins)
        throw DataError("harmonic_ratio: shape mismatch");
    std::vector<double> ratio(harmonic.frames);
    for (std::size_t f = 0; f < harmonic.frames; ++f) {
        double eh = 0.0, ep = 0.0;
        const double* h = harmonic.mags.data() + f * harmonic.bins;
        const double* p = percussive.mags.data() + f * percussive.bins;
        for (std::size_t b = 0; b < harmonic.bins; ++b) {
            eh += h[b] * h[b];
            ep += p[b] * p[b];
        }
        ratio[f] = (eh + ep > 0.0) ? eh / (eh + ep) : 0.5;
    }
    return ratio;
}

// ---- autocorrelation ---------------------------------------------------------

AutocorrPeak autocorrelation_features(std::span<const double> frame) {
    const std::size_t n = frame.size();
    if (n < 4) throw DataError("autocorrelation_features: frame too short");

    double mean = 0.0;
    for (double x : frame) mean += x;
    mean /= static_cast<double>(n);

    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) centered[i] = frame[i] - mean;

    const std::size_t max_lag = n / 2;
    double r0 = 0.0;
    for (double x : centered) r0 += x * x;
    if (r0 <= 1e-300) return {0.0, 0.0};

    std::vector<double> r(max_lag + 1);
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        double acc = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) acc += centered[i] * centered[i + lag];
        r[lag] = acc / r0;
    }

    // largest local maximum at lag >= 2; the trivial lag-0/1 peak is excluded
    AutocorrPeak best;
    bool found = false;
    for (std::size_t lag = 2; lag + 1 <= max_lag; ++lag) {
        if (r[lag] > r[lag - 1] && r[lag] >= r[lag + 1]) {
            if (!found || r[lag] > best.strength) {
                best.lag = static_cast<double>(lag);
                best.strength = r[lag];
                found = true;
            }
        }
    }
    if (!found) return {0.0, 0.0};
    return best;
}

// ---- aggregation & fusion ----------------------------------------------------

std::pair<double, double> aggregate_mean_variance(std::span<const double> series) {
    if (series.empty()) throw DataError("aggregate_mean_variance: empty series");
    double mean = 0.0;
    for (double x : series) mean += x;
    mean /= static_cast<double>(series.size());
    double var = 0.0;
    for (double x : series) var += (x - mean) * (x - mean);
    var /= static_cast<double>(series.size());
    return {mean, var};
}

std::vector<double> fuse_channels(std::span<const double> time_channel,
                                  std::span<const double> frequency_channel,
                                  std::span<const double> cepstral_channel,
                                  std::span<const double> extra_channel) {
    if (time_channel.empty() || frequency_channel.empty() || cepstral_channel.empty())
        throw DataError("fuse_channels: required channel is empty");
    std::vector<double> fused;
    fused.reserve(time_channel.size() + frequency_channel.size() +
                  cepstral_channel.size() + extra_channel.size());
    fused.insert(fused.end(), time_channel.begin(), time_channel.end());
    fused.insert(fused.end(), frequency_channel.begin(), frequency_channel.end());
    fused.insert(fused.end(), cepstral_channel.begin(), cepstral_channel.end());
    fused.insert(fused.end(), extra_channel.begin(), extra_channel.end());
    return fused;
}

// ---- clip-level extraction -----------------------------------------------------

namespace {

void append_mean_var(std::vector<double>& out, std::span<const double> series) {
    auto [mean, var] = aggregate_mean_variance(series);
    out.push_back(mean);
    out.push_back(var);
}

} // namespace

ClipChannels extract_clip_channels(const AudioClip& clip, const FeatureConfig& cfg,
                                   const MelFilterbank* bank) {
    cfg.validate();
    if (clip.sample_rate_hz != cfg.sample_rate_hz)
        throw DataError("clip '" + clip.source_id + "' sample rate " +
                        std::to_string(clip.sample_rate_hz) +
                        " Hz differs from configured " +
                        std::to_string(cfg.sample_rate_hz) + " Hz (no resampling)");

    const FrameSequence frames = split_frames(clip, cfg.frame_length, cfg.hop, true);
    const std::size_t nf = frames.frame_count;

    ClipChannels out;

    if (cfg.time_domain) {
        std::vector<double> zcr(nf), rms(nf);
        for (std::size_t f = 0; f < nf; ++f) {
            zcr[f] = zero_crossing_rate(frames.frame(f));
            rms[f] = rms_energy(frames.frame(f));
        }
        append_mean_var(out.time, zcr);
        append_mean_var(out.time, rms);
    }

    if (cfg.frequency_domain || cfg.cepstral_domain) {
        const Spectrogram spec = stft(frames);

        if (cfg.frequency_domain) {
            std::vector<double> centroid(nf), spread(nf), rolloff(nf);
            for (std::size_t f = 0; f < nf; ++f) {
                const auto mags = spec.frame(f);
                centroid[f] = spectral_centroid(mags);
                spread[f] = spectral_spread(mags, centroid[f]);
                rolloff[f] = static_cast<double>(
                    spectral_rolloff(mags, cfg.rolloff_percentile));
            }
            auto [harm, perc] = hpss(spec, cfg.hpss_kernel, cfg.hpss_power);
            const std::vector<double> ratio = harmonic_ratio(harm, perc);

            append_mean_var(out.frequency, centroid);
            append_mean_var(out.frequency, spread);
            append_mean_var(out.frequency, rolloff);
            append_mean_var(out.frequency, ratio);
        }

        if (cfg.cepstral_domain) {
            MelFilterbank local;
            const MelFilterbank* fb = bank;
            if (fb == nullptr) {
                local = build_mel_filterbank(cfg.mel_filters, cfg.frame_length,
                                             cfg.sample_rate_hz, 0.0,
                                             cfg.sample_rate_hz / 2.0);
                fb = &local;
            }
            const Matrix power = power_spectrum(spec);
            Matrix coeffs(nf, cfg.mfcc_count);
            for (std::size_t f = 0; f < nf; ++f) {
                auto c = mfcc(power.row(f), *fb, cfg.mfcc_count, cfg.log_floor);
                std::copy(c.begin(), c.end(), coeffs.row(f).begin());
            }
            std::vector<double> series(nf);
            for (std::size_t j = 0; j < cfg.mfcc_count; ++j) {
                for (std::size_t f = 0; f < nf; ++f) series[f] = coeffs.at(f, j);
                append_mean_var(out.cepstral, series);
            }
        }
    }

    if (cfg.autocorr_domain) {
        std::vector<double> lag(nf), strength(nf);
        for (std::size_t f = 0; f < nf; ++f) {
            const AutocorrPeak peak = autocorrelation_features(frames.frame(f));
            lag[f] = peak.lag;
            strength[f] = peak.strength;
        }
        append_mean_var(out.autocorr, lag);
        append_mean_var(out.autocorr, strength);
    }

    return out;
}

std::vector<double> extract_clip_features(const AudioClip& clip,
                                          const FeatureConfig& cfg,
                                          const MelFilterbank* bank) {
    const ClipChannels ch = extract_clip_channels(clip, cfg, bank);
    std::vector<double> fused;
    fused.reserve(cfg.dimension());
    for (const auto* channel : {&ch.time, &ch.frequency, &ch.cepstral, &ch.autocorr})
        fused.insert(fused.end(), channel->begin(), channel->end());
    return fused;
}

Matrix extract_batch(const std::vector<AudioClip>& clips, const FeatureConfig& cfg) {
    cfg.validate();
    Matrix out(clips.size(), cfg.dimension());
    const MelFilterbank bank =
        build_mel_filterbank(cfg.mel_filters, cfg.frame_length, cfg.sample_rate_hz,
                             0.0, cfg.sample_rate_hz / 2.0);

    std::string first_error;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(clips.size()); ++i) {
        try {
            const auto row = extract_clip_features(clips[static_cast<std::size_t>(i)],
                                                   cfg, &bank);
            std::copy(row.begin(), row.end(),
                      out.row(static_cast<std::size_t>(i)).begin());
        } catch (const std::exception& e) {
#pragma omp critical
            if (first_error.empty()) first_error = e.what();
        }
    }
    if (!first_error.empty()) throw DataError(first_error);
    return out;
}

// ---- feature table I/O ---------------------------------------------------------

void write_feature_table(const FeatureTable& table, const std::filesystem::path& path) {
    if (table.ids.size() != table.features.rows ||
        table.labels.size() != table.features.rows)
        throw DataError("write_feature_table: row metadata mismatch");
    auto f = textutil::open_out(path);
    f << "source_id,label";
    for (const auto& name : table.column_names) f << ',' << name;
    f << '\n';
    for (std::size_t r = 0; r < table.features.rows; ++r) {
        f << table.ids[r] << ',' << table.labels[r];
        for (std::size_t c = 0; c < table.features.cols; ++c)
            f << ',' << textutil::format_double(table.features.at(r, c));
        f << '\n';
    }
}

FeatureTable read_feature_table(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open feature file: " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw DataError("empty feature file: " + path.string());

    auto header = textutil::split(textutil::strip(line), ',');
    if (header.size() < 3 || header[0] != "source_id" || header[1] != "label")
        throw DataError("feature file header must start with source_id,label");

    FeatureTable table;
    table.column_names.assign(header.begin() + 2, header.end());
    const std::size_t dim = table.column_names.size();

    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(f, line)) {
        line = textutil::strip(line);
        if (line.empty()) continue;
        auto fields = textutil::split(line, ',');
        if (fields.size() != dim + 2)
            throw DataError("feature file row " + std::to_string(rows + 1) +
                            " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(dim + 2));
        table.ids.push_back(fields[0]);
        table.labels.push_back(fields[1]);
        for (std::size_t c = 0; c < dim; ++c)
            values.push_back(textutil::parse_double(fields[2 + c], "feature value"));
        ++rows;
    }
    table.features.rows = rows;
    table.features.cols = dim;
    table.features.data = std::move(values);
    return table;
}

} // namespace timbre
