#include "eegr/gating.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "eegr/common.hpp"
#include "eegr/measurement.hpp"

namespace eegr {
namespace {

struct ChannelFeatures {
    std::vector<double> energy_z;
    std::vector<double> kurtosis;
    std::vector<double> prominence_db;  // indexed by slot (nearest spectral window)
};

double excess_kurtosis(const double* x, std::size_t n) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x[i];
    mean /= static_cast<double>(n);
    double m2 = 0.0, m4 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - mean;
        const double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    if (m2 <= 0.0) return 0.0;
    return m4 / (m2 * m2) - 3.0;
}

ChannelFeatures channel_features(const std::vector<double>& x, double rate, std::size_t n_slots,
                                 const GatingConfig& cfg) {
    ChannelFeatures f;
    f.energy_z.resize(n_slots, 0.0);
    f.kurtosis.resize(n_slots, 0.0);
    f.prominence_db.resize(n_slots, 0.0);

    const std::size_t win = static_cast<std::size_t>(std::llround(cfg.feature_window_s * rate));
    const std::size_t hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.hop_s * rate)));

    std::vector<double> rms(n_slots, 0.0);
    for (std::size_t s = 0; s < n_slots; ++s) {
        const std::size_t i0 = s * hop;
        double acc = 0.0;
        for (std::size_t i = i0; i < i0 + win; ++i) acc += x[i] * x[i];
        rms[s] = std::sqrt(acc / static_cast<double>(win));
        f.kurtosis[s] = excess_kurtosis(x.data() + i0, win);
    }

    // robust per-channel baseline over the whole recording
    const double base = median(std::vector<double>(rms));
    const double sigma = std::max(robust_sigma(rms), 1e-12);
    for (std::size_t s = 0; s < n_slots; ++s) f.energy_z[s] = (rms[s] - base) / sigma;

    // spectral peak prominence on a coarser grid of long Welch windows
    const std::size_t spec_win = static_cast<std::size_t>(std::llround(cfg.spectral_window_s * rate));
    if (spec_win >= 64 && x.size() >= spec_win) {
        const std::size_t seg = static_cast<std::size_t>(std::llround(cfg.spectral_segment_s * rate));
        const std::size_t segments =
            seg > 0 && spec_win >= seg ? (spec_win - seg) / std::max<std::size_t>(1, seg / 2) + 1 : 1;
        const std::size_t spec_hop =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.spectral_hop_s * rate)));
        const std::size_t n_spec = (x.size() - spec_win) / spec_hop + 1;

        std::vector<double> prom(n_spec, 0.0);
        std::vector<double> seg_buf;
        for (std::size_t w = 0; w < n_spec; ++w) {
            seg_buf.assign(x.begin() + static_cast<std::ptrdiff_t>(w * spec_hop),
                           x.begin() + static_cast<std::ptrdiff_t>(w * spec_hop + spec_win));
            const Psd psd = welch_psd(seg_buf, rate, segments, 0.5);
            double peak = 0.0;
            std::vector<double> in_band;
            for (std::size_t k = 0; k < psd.freqs_hz.size(); ++k) {
                if (psd.freqs_hz[k] < cfg.spectral_band_lo_hz ||
                    psd.freqs_hz[k] > cfg.spectral_band_hi_hz)
                    continue;
                in_band.push_back(psd.power[k]);
                peak = std::max(peak, psd.power[k]);
            }
            if (in_band.size() >= 4) {
                const double med = median(std::move(in_band));
                if (med > 0 && peak > 0) prom[w] = 10.0 * std::log10(peak / med);
            }
        }
        // assign each hop slot the prominence of the spectral window covering it
        for (std::size_t s = 0; s < n_slots; ++s) {
            const double t = static_cast<double>(s * hop) / rate;
            std::size_t w = static_cast<std::size_t>(std::floor(t / cfg.spectral_hop_s));
            w = std::min(w, n_spec - 1);
            f.prominence_db[s] = prom[w];
        }
    }
    return f;
}

struct Core {
    double start_s;
    double end_s;
    TriggerFeatures trigger;
    std::vector<bool> channels;
};

}  // namespace

void GatingConfig::validate() const {
    if (!(w_min_s > 0) || !(w_max_s >= w_min_s)) throw ConfigError("gating: bad window range");
    if (margin_s < 0 || merge_gap_s < 0) throw ConfigError("gating: negative margin/gap");
    if (!(hop_s > 0) || !(feature_window_s >= hop_s)) throw ConfigError("gating: bad feature grid");
    if (!std::isfinite(energy_z_threshold) || !std::isfinite(kurtosis_threshold) ||
        !std::isfinite(peak_prominence_db))
        throw ConfigError("gating: thresholds must be finite");
}

std::size_t GatingConfig::effective_consensus_k(std::size_t channel_count) const {
    if (consensus_k > 0) return consensus_k;
    const std::size_t by_fraction =
        static_cast<std::size_t>(std::ceil(static_cast<double>(channel_count) / 8.0));
    return std::max<std::size_t>(2, by_fraction);
}

std::vector<EventWindow> detect_candidates(const Recording& rec, const GatingConfig& cfg) {
    cfg.validate();
    const double rate = rec.low_rate_hz;
    const double duration = rec.duration_s();
    if (duration < std::max(cfg.feature_window_s, cfg.w_min_s)) return {};

    const std::size_t win = static_cast<std::size_t>(std::llround(cfg.feature_window_s * rate));
    const std::size_t hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.hop_s * rate)));
    if (rec.low_sample_count() < win || win == 0) return {};
    const std::size_t n_slots = (rec.low_sample_count() - win) / hop + 1;

    const std::size_t c_count = rec.channel_count();
    const std::size_t k = cfg.effective_consensus_k(c_count);

    std::vector<ChannelFeatures> feats;
    feats.reserve(c_count);
    for (std::size_t c = 0; c < c_count; ++c)
        feats.push_back(channel_features(rec.samples_low[c], rate, n_slots, cfg));

    std::vector<std::size_t> vote_count(n_slots, 0);
    std::vector<std::vector<bool>> votes(c_count, std::vector<bool>(n_slots, false));
    for (std::size_t c = 0; c < c_count; ++c) {
        for (std::size_t s = 0; s < n_slots; ++s) {
            const bool v = feats[c].energy_z[s] > cfg.energy_z_threshold ||
                           feats[c].kurtosis[s] > cfg.kurtosis_threshold ||
                           feats[c].prominence_db[s] > cfg.peak_prominence_db;
            votes[c][s] = v;
            if (v) ++vote_count[s];
        }
    }

    // cluster consensus slots into core intervals
    std::vector<Core> cores;
    for (std::size_t s = 0; s < n_slots; ++s) {
        if (vote_count[s] < k) continue;
        const double t0 = static_cast<double>(s * hop) / rate;
        const double t1 = t0 + cfg.feature_window_s;
        if (!cores.empty() && t0 - cores.back().end_s < cfg.merge_gap_s) {
            cores.back().end_s = t1;
        } else {
            Core core;
            core.start_s = t0;
            core.end_s = t1;
            core.channels.assign(c_count, false);
            cores.push_back(std::move(core));
        }
        Core& core = cores.back();
        for (std::size_t c = 0; c < c_count; ++c) {
            if (!votes[c][s]) continue;
            core.channels[c] = true;
            core.trigger.energy_z = std::max(core.trigger.energy_z, feats[c].energy_z[s]);
            core.trigger.kurtosis = std::max(core.trigger.kurtosis, feats[c].kurtosis[s]);
            core.trigger.spectral_peak_prominence_db =
                std::max(core.trigger.spectral_peak_prominence_db, feats[c].prominence_db[s]);
        }
    }

    // enforce the core length range, then add margins
    std::vector<EventWindow> windows;
    for (const Core& core : cores) {
        std::vector<std::pair<double, double>> pieces;
        double len = core.end_s - core.start_s;
        if (len < cfg.w_min_s) {
            double lo = std::max(0.0, core.start_s - (cfg.w_min_s - len) / 2.0);
            double hi = std::min(duration, lo + cfg.w_min_s);
            lo = std::max(0.0, hi - cfg.w_min_s);
            pieces.emplace_back(lo, hi);
        } else if (len > cfg.w_max_s) {
            const std::size_t n_pieces = static_cast<std::size_t>(std::ceil(len / cfg.w_max_s));
            const double piece = len / static_cast<double>(n_pieces);
            for (std::size_t i = 0; i < n_pieces; ++i)
                pieces.emplace_back(core.start_s + piece * static_cast<double>(i),
                                    core.start_s + piece * static_cast<double>(i + 1));
        } else {
            pieces.emplace_back(core.start_s, core.end_s);
        }
        for (const auto& [lo, hi] : pieces) {
            EventWindow w;
            w.t_start_s = std::max(0.0, lo - cfg.margin_s);
            w.t_end_s = std::min(duration, hi + cfg.margin_s);
            w.trigger = core.trigger;
            for (std::size_t c = 0; c < c_count; ++c)
                if (core.channels[c]) w.consensus_channels.push_back(c);
            windows.push_back(std::move(w));
        }
    }

    // trim residual overlaps introduced by margins at the midpoint
    for (std::size_t i = 1; i < windows.size(); ++i) {
        if (windows[i].t_start_s < windows[i - 1].t_end_s) {
            const double mid = 0.5 * (windows[i].t_start_s + windows[i - 1].t_end_s);
            windows[i - 1].t_end_s = mid;
            windows[i].t_start_s = mid;
        }
    }
    return windows;
}

std::vector<EventWindow> merge_windows(std::vector<EventWindow> windows, double merge_gap_s) {
    if (windows.empty()) return windows;
    std::sort(windows.begin(), windows.end(),
              [](const EventWindow& a, const EventWindow& b) { return a.t_start_s < b.t_start_s; });
    std::vector<EventWindow> out;
    out.push_back(windows.front());
    for (std::size_t i = 1; i < windows.size(); ++i) {
        EventWindow& prev = out.back();
        EventWindow& cur = windows[i];
        if (cur.t_start_s - prev.t_end_s < merge_gap_s) {
            prev.t_end_s = std::max(prev.t_end_s, cur.t_end_s);
            prev.trigger.energy_z = std::max(prev.trigger.energy_z, cur.trigger.energy_z);
            prev.trigger.kurtosis = std::max(prev.trigger.kurtosis, cur.trigger.kurtosis);
            prev.trigger.spectral_peak_prominence_db = std::max(
                prev.trigger.spectral_peak_prominence_db, cur.trigger.spectral_peak_prominence_db);
            std::vector<std::size_t> merged;
            std::set_union(prev.consensus_channels.begin(), prev.consensus_channels.end(),
                           cur.consensus_channels.begin(), cur.consensus_channels.end(),
                           std::back_inserter(merged));
            prev.consensus_channels = std::move(merged);
        } else {
            out.push_back(cur);
        }
    }
    return out;
}

HighRateCrop crop_high_rate(const Recording& rec, const EventWindow& w) {
    if (!(w.t_end_s > w.t_start_s)) throw std::invalid_argument("crop: empty window");

    HighRateCrop crop;
    const bool high = rec.has_high_stream();
    crop.low_rate_fallback = !high;
    crop.rate_hz = high ? *rec.high_rate_hz : rec.low_rate_hz;
    const auto& stream = high ? rec.samples_high : rec.samples_low;
    const std::size_t total = stream.front().size();

    std::size_t n = static_cast<std::size_t>(std::llround((w.t_end_s - w.t_start_s) * crop.rate_hz));
    n = std::min<std::size_t>(std::max<std::size_t>(n, 1), total);
    std::size_t i0 = static_cast<std::size_t>(std::max<long long>(0, std::llround(w.t_start_s * crop.rate_hz)));
    if (i0 + n > total) i0 = total - n;
    crop.t_start_s = static_cast<double>(i0) / crop.rate_hz;

    crop.samples.reserve(stream.size());
    for (const auto& ch : stream)
        crop.samples.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(i0),
                                  ch.begin() + static_cast<std::ptrdiff_t>(i0 + n));
    return crop;
}

}  // namespace eegr
