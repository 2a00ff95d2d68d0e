#include "eegr/measurement.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "eegr/common.hpp"
#include "eegr/fft.hpp"

namespace eegr {

std::string measurement_kind_name(MeasurementKind k) {
    switch (k) {
        case MeasurementKind::FrequencyHz: return "frequency_hz";
        case MeasurementKind::DurationS: return "duration_s";
        case MeasurementKind::AmplitudeUv: return "amplitude_uv";
        case MeasurementKind::LateralizationIndex: return "lateralization_index";
        case MeasurementKind::TimeS: return "time_s";
    }
    return "frequency_hz";
}

MeasurementKind measurement_kind_from_name(const std::string& s) {
    if (s == "frequency_hz") return MeasurementKind::FrequencyHz;
    if (s == "duration_s") return MeasurementKind::DurationS;
    if (s == "amplitude_uv") return MeasurementKind::AmplitudeUv;
    if (s == "lateralization_index") return MeasurementKind::LateralizationIndex;
    if (s == "time_s") return MeasurementKind::TimeS;
    throw ConfigError("unknown measurement kind: " + s);
}

std::string measurement_unit(MeasurementKind k) {
    switch (k) {
        case MeasurementKind::FrequencyHz: return "Hz";
        case MeasurementKind::DurationS: return "s";
        case MeasurementKind::AmplitudeUv: return "uV";
        case MeasurementKind::LateralizationIndex: return "";
        case MeasurementKind::TimeS: return "s";
    }
    return "";
}

int canonical_decimals(MeasurementKind k) {
    switch (k) {
        case MeasurementKind::FrequencyHz: return 1;
        case MeasurementKind::DurationS: return 1;
        case MeasurementKind::AmplitudeUv: return 0;
        case MeasurementKind::LateralizationIndex: return 2;
        case MeasurementKind::TimeS: return 1;
    }
    return 1;
}

std::string canonical_format(double value, MeasurementKind k) {
    const int decimals = canonical_decimals(k);
    double scale = 1.0;
    for (int i = 0; i < decimals; ++i) scale *= 10.0;
    // nearbyint under the default FE_TONEAREST mode rounds half to even.
    const double quantized = std::nearbyint(value * scale) / scale;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, quantized);
    // avoid the "-0.0" spelling
    if (buf[0] == '-') {
        bool all_zero = true;
        for (const char* p = buf + 1; *p; ++p)
            if (*p != '0' && *p != '.') all_zero = false;
        if (all_zero) return std::string(buf + 1);
    }
    return buf;
}

FrozenMeasurement FrozenMeasurement::freeze(MeasurementKind kind, double raw_value,
                                            double confidence,
                                            std::optional<std::pair<double, double>> interval,
                                            Provenance provenance) {
    FrozenMeasurement m;
    m.kind = kind;
    m.canonical_text = canonical_format(raw_value, kind);
    m.value = std::strtod(m.canonical_text.c_str(), nullptr);
    m.unit = measurement_unit(kind);
    m.confidence = std::clamp(confidence, 0.0, 1.0);
    if (interval) {
        // the quantized value must stay inside the reported interval
        interval->first = std::min(interval->first, m.value);
        interval->second = std::max(interval->second, m.value);
    }
    m.interval = interval;
    m.provenance = std::move(provenance);
    return m;
}

PlausibilityVerdict check_plausibility(const FrozenMeasurement& m, int attempt) {
    bool ok = std::isfinite(m.value) && m.confidence >= 0.0 && m.confidence <= 1.0;
    if (ok) {
        const double parsed = std::strtod(m.canonical_text.c_str(), nullptr);
        ok = !m.canonical_text.empty() && parsed == m.value;
    }
    if (ok && m.interval)
        ok = m.interval->first <= m.value && m.value <= m.interval->second;
    if (ok) {
        switch (m.kind) {
            case MeasurementKind::FrequencyHz: ok = m.value >= 0.5 && m.value <= 80.0; break;
            case MeasurementKind::DurationS: ok = m.value > 0.0; break;
            case MeasurementKind::AmplitudeUv: ok = m.value >= 0.0; break;
            case MeasurementKind::LateralizationIndex: ok = m.value >= -1.0 && m.value <= 1.0; break;
            case MeasurementKind::TimeS: ok = m.value >= 0.0; break;
        }
    }
    if (ok) return PlausibilityVerdict::Pass;
    return attempt == 0 ? PlausibilityVerdict::ReMeasure : PlausibilityVerdict::Abstain;
}

double Psd::total_power() const {
    double sum = 0.0;
    for (double p : power) sum += p;
    return sum * bin_width_hz();
}

Psd welch_psd(const std::vector<double>& x, double rate_hz, std::size_t segments, double overlap) {
    if (segments < 1) throw std::invalid_argument("welch: segments must be >= 1");
    if (!(overlap >= 0.0) || overlap >= 1.0) throw std::invalid_argument("welch: overlap outside [0,1)");
    if (!(rate_hz > 0)) throw std::invalid_argument("welch: rate must be positive");

    const std::size_t n = x.size();
    // segment length so that `segments` segments at `overlap` tile the window
    const double denom = 1.0 + static_cast<double>(segments - 1) * (1.0 - overlap);
    const std::size_t seg_len = static_cast<std::size_t>(std::floor(static_cast<double>(n) / denom));
    if (seg_len < 8)
        throw std::invalid_argument(
            "welch: window too short for requested segment count; reduce segments");
    const std::size_t stride = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(static_cast<double>(seg_len) * (1.0 - overlap))));

    std::vector<double> window(seg_len);
    double window_power = 0.0;
    for (std::size_t i = 0; i < seg_len; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * 3.14159265358979323846 * static_cast<double>(i) /
                                         static_cast<double>(seg_len - 1));
        window_power += window[i] * window[i];
    }

    const std::size_t bins = seg_len / 2 + 1;
    std::vector<double> acc(bins, 0.0);
    std::size_t count = 0;
    std::vector<double> seg(seg_len);
    for (std::size_t start = 0; start + seg_len <= n; start += stride) {
        double mean = 0.0;
        for (std::size_t i = 0; i < seg_len; ++i) mean += x[start + i];
        mean /= static_cast<double>(seg_len);
        for (std::size_t i = 0; i < seg_len; ++i) seg[i] = (x[start + i] - mean) * window[i];
        const auto spec = rfft(seg);
        for (std::size_t k = 0; k < bins; ++k) acc[k] += std::norm(spec[k]);
        ++count;
        if (count == segments) break;
    }
    if (count == 0) throw std::invalid_argument("welch: window shorter than one segment");

    Psd psd;
    psd.rate_hz = rate_hz;
    psd.overlap = overlap;
    psd.segment_count = count;
    psd.freqs_hz.resize(bins);
    psd.power.resize(bins);
    const double scale = 1.0 / (rate_hz * window_power * static_cast<double>(count));
    for (std::size_t k = 0; k < bins; ++k) {
        psd.freqs_hz[k] = rate_hz * static_cast<double>(k) / static_cast<double>(seg_len);
        const bool interior = k != 0 && !(seg_len % 2 == 0 && k == bins - 1);
        psd.power[k] = acc[k] * scale * (interior ? 2.0 : 1.0);
    }
    return psd;
}

Psd welch_psd_mean(const std::vector<std::vector<double>>& chans,
                   const std::vector<std::size_t>& subset, double rate_hz, std::size_t segments,
                   double overlap) {
    if (subset.empty()) throw std::invalid_argument("welch mean: empty channel subset");
    Psd mean;
    for (std::size_t idx = 0; idx < subset.size(); ++idx) {
        const Psd p = welch_psd(chans.at(subset[idx]), rate_hz, segments, overlap);
        if (idx == 0) {
            mean = p;
        } else {
            for (std::size_t k = 0; k < mean.power.size(); ++k) mean.power[k] += p.power[k];
        }
    }
    for (double& p : mean.power) p /= static_cast<double>(subset.size());
    return mean;
}

std::optional<FrozenMeasurement> dominant_frequency(const Psd& psd, double band_lo_hz,
                                                    double band_hi_hz, Provenance base) {
    if (psd.freqs_hz.empty()) throw std::invalid_argument("dominant_frequency: empty PSD");
    if (band_lo_hz < psd.freqs_hz.front() - 1e-12 || band_hi_hz > psd.freqs_hz.back() + 1e-12)
        throw std::invalid_argument("dominant_frequency: band outside PSD grid");

    std::size_t best = psd.freqs_hz.size();
    double best_power = 0.0;
    std::vector<double> in_band;
    for (std::size_t k = 0; k < psd.freqs_hz.size(); ++k) {
        const double f = psd.freqs_hz[k];
        if (f < band_lo_hz || f > band_hi_hz) continue;
        in_band.push_back(psd.power[k]);
        if (psd.power[k] > best_power) {  // strict: ties keep the lower bin
            best_power = psd.power[k];
            best = k;
        }
    }
    if (best == psd.freqs_hz.size() || best_power <= 0.0) return std::nullopt;  // abstain

    // parabolic refinement on log-power over the peak and its neighbors
    const double df = psd.bin_width_hz();
    double delta = 0.0;
    if (best > 0 && best + 1 < psd.power.size() && psd.power[best - 1] > 0 &&
        psd.power[best + 1] > 0) {
        const double l = std::log(psd.power[best - 1]);
        const double c = std::log(psd.power[best]);
        const double r = std::log(psd.power[best + 1]);
        const double denom = l - 2.0 * c + r;
        if (denom < 0.0) delta = std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
    }
    const double freq = psd.freqs_hz[best] + delta * df;

    const double med = median(in_band);
    const double prominence_db = med > 0 ? 10.0 * std::log10(best_power / med) : 60.0;
    const double confidence = logistic((prominence_db - 6.0) / 3.0);

    base.method = "welch-argmax-parabolic";
    base.parameters["segments"] = static_cast<double>(psd.segment_count);
    base.parameters["overlap"] = psd.overlap;
    base.parameters["rate_hz"] = psd.rate_hz;
    base.parameters["band_lo_hz"] = band_lo_hz;
    base.parameters["band_hi_hz"] = band_hi_hz;

    return FrozenMeasurement::freeze(MeasurementKind::FrequencyHz, freq, confidence,
                                     std::make_pair(freq - 0.5 * df, freq + 0.5 * df),
                                     std::move(base));
}

std::optional<DurationMeasurement> event_duration(const std::vector<double>& x, double rate_hz,
                                                  const HysteresisConfig& cfg, Provenance base) {
    if (x.empty()) throw std::invalid_argument("event_duration: empty window");
    if (!(rate_hz > 0)) throw std::invalid_argument("event_duration: rate must be positive");

    const std::size_t hop = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.env_window_s * rate_hz)));
    const std::size_t bins = x.size() / hop;
    if (bins == 0) return std::nullopt;

    std::vector<double> env(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        double acc = 0.0;
        for (std::size_t i = b * hop; i < (b + 1) * hop; ++i) acc += x[i] * x[i];
        env[b] = std::sqrt(acc / static_cast<double>(hop));
    }

    double t_high, t_low;
    if (cfg.t_high && cfg.t_low) {
        t_high = *cfg.t_high;
        t_low = *cfg.t_low;
    } else {
        // Baseline from the margin regions (background by construction of the
        // gated crop); falls back to the lowest quartile when margins vanish.
        std::vector<double> baseline_env;
        const std::size_t margin_bins =
            static_cast<std::size_t>(std::floor(cfg.margin_s / cfg.env_window_s));
        if (margin_bins >= 2 && 2 * margin_bins < bins) {
            for (std::size_t b = 0; b < margin_bins; ++b) baseline_env.push_back(env[b]);
            for (std::size_t b = bins - margin_bins; b < bins; ++b) baseline_env.push_back(env[b]);
        } else {
            std::vector<double> sorted(env);
            std::sort(sorted.begin(), sorted.end());
            const std::size_t q = std::max<std::size_t>(1, sorted.size() / 4);
            baseline_env.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(q));
        }
        const double baseline = median(baseline_env);
        const double mad_env = robust_sigma(baseline_env);
        t_high = baseline + 4.0 * mad_env;
        t_low = baseline + 2.0 * mad_env;
    }
    if (!(t_low < t_high)) t_low = std::nextafter(t_high, -1.0);

    // hysteresis walk over the envelope
    struct Span {
        std::size_t start, end;  // [start, end) in bins
    };
    std::vector<Span> spans;
    bool active = false;
    std::size_t start = 0;
    for (std::size_t b = 0; b < bins; ++b) {
        if (!active && env[b] > t_high) {
            active = true;
            start = b;
        } else if (active && env[b] < t_low) {
            spans.push_back({start, b});
            active = false;
        }
    }
    if (active) spans.push_back({start, bins});
    if (spans.empty()) return std::nullopt;  // abstain: nothing crossed t_high

    const std::size_t gap_bins =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.merge_gap_s / cfg.env_window_s)));
    std::vector<Span> merged{spans.front()};
    for (std::size_t i = 1; i < spans.size(); ++i) {
        if (spans[i].start - merged.back().end < gap_bins) merged.back().end = spans[i].end;
        else merged.push_back(spans[i]);
    }

    const Span* longest = &merged.front();
    for (const Span& s : merged)
        if (s.end - s.start > longest->end - longest->start) longest = &s;

    const double start_s = static_cast<double>(longest->start) * cfg.env_window_s;
    const double end_s = static_cast<double>(longest->end) * cfg.env_window_s;

    double peak_env = 0.0;
    for (std::size_t b = longest->start; b < longest->end; ++b) peak_env = std::max(peak_env, env[b]);
    const double spread = std::max(t_high - t_low, 1e-12);
    const double confidence = logistic((peak_env - t_high) / spread);

    base.method = "hysteresis-duration";
    base.parameters["env_window_s"] = cfg.env_window_s;
    base.parameters["merge_gap_s"] = cfg.merge_gap_s;
    base.parameters["t_high"] = t_high;
    base.parameters["t_low"] = t_low;
    base.parameters["rate_hz"] = rate_hz;

    DurationMeasurement out;
    out.event_start_s = start_s;
    out.event_end_s = end_s;
    out.t_high = t_high;
    out.t_low = t_low;
    out.duration = FrozenMeasurement::freeze(
        MeasurementKind::DurationS, end_s - start_s, confidence,
        std::make_pair(end_s - start_s - cfg.env_window_s, end_s - start_s + cfg.env_window_s),
        std::move(base));
    return out;
}

FrozenMeasurement event_amplitude(const std::vector<double>& x, Provenance base) {
    if (x.empty()) throw std::invalid_argument("event_amplitude: empty crop");
    const double amp = robust_sigma(x);
    base.method = "robust-mad-amplitude";
    base.parameters["mad_scale"] = 1.4826;
    base.parameters["sample_count"] = static_cast<double>(x.size());
    return FrozenMeasurement::freeze(MeasurementKind::AmplitudeUv, amp, 0.9, std::nullopt,
                                     std::move(base));
}

std::optional<FrozenMeasurement> lateralization(const std::vector<std::vector<double>>& chans,
                                                double rate_hz, double band_lo_hz,
                                                double band_hi_hz, const MontageGraph& montage,
                                                Provenance base) {
    const auto left = montage.channels_of(Hemisphere::Left);
    const auto right = montage.channels_of(Hemisphere::Right);
    if (left.empty() || right.empty())
        throw std::invalid_argument("lateralization: montage must assign both hemispheres");

    auto mean_band_power = [&](const std::vector<std::size_t>& side) {
        double acc = 0.0;
        for (std::size_t c : side) {
            const Psd p = welch_psd(chans.at(c), rate_hz, 8, 0.5);
            double band = 0.0;
            for (std::size_t k = 0; k < p.freqs_hz.size(); ++k)
                if (p.freqs_hz[k] >= band_lo_hz && p.freqs_hz[k] <= band_hi_hz)
                    band += p.power[k] * p.bin_width_hz();
            acc += band;
        }
        return acc / static_cast<double>(side.size());
    };

    const double p_left = mean_band_power(left);
    const double p_right = mean_band_power(right);
    if (p_left + p_right <= 0.0) return std::nullopt;  // abstain

    const double index = (p_left - p_right) / (p_left + p_right);

    base.method = "hemispheric-bandpower-ratio";
    base.parameters["band_lo_hz"] = band_lo_hz;
    base.parameters["band_hi_hz"] = band_hi_hz;
    base.parameters["rate_hz"] = rate_hz;
    base.parameters["left_count"] = static_cast<double>(left.size());
    base.parameters["right_count"] = static_cast<double>(right.size());

    return FrozenMeasurement::freeze(MeasurementKind::LateralizationIndex, index, 0.9, std::nullopt,
                                     std::move(base));
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace eegr
