#pragma once

#include <cstddef>
#include <vector>

#include "eegr/recording.hpp"

namespace eegr {

struct GatingConfig {
    double w_min_s = 2.0;
    double w_max_s = 10.0;
    double margin_s = 2.0;
    double energy_z_threshold = 4.0;
    double kurtosis_threshold = 5.0;
    double peak_prominence_db = 6.0;
    std::size_t consensus_k = 0;  // 0 = auto: max(2, ceil(C/8))
    double merge_gap_s = 2.0;

    // feature extraction grid
    double hop_s = 0.25;
    double feature_window_s = 1.0;
    double spectral_window_s = 10.0;   // Welch span for the prominence feature
    double spectral_segment_s = 2.0;   // Welch segment length within that span
    double spectral_hop_s = 1.0;       // prominence recomputed on this coarser grid
    double spectral_band_lo_hz = 0.5;
    double spectral_band_hi_hz = 80.0;

    void validate() const;
    std::size_t effective_consensus_k(std::size_t channel_count) const;
};

struct TriggerFeatures {
    double energy_z = 0.0;
    double kurtosis = 0.0;
    double spectral_peak_prominence_db = 0.0;
};

struct EventWindow {
    double t_start_s = 0.0;
    double t_end_s = 0.0;
    TriggerFeatures trigger;  // strongest values over the triggering region
    std::vector<std::size_t> consensus_channels;
};

// Per-channel sliding features (RMS z-score against a whole-recording
// median/MAD baseline, excess kurtosis, Welch peak prominence); a channel
// votes when any feature crosses its threshold, a window is emitted when at
// least consensus_k channels vote in the same slot. Nearby cores merge,
// margins are added and clamped, residual overlaps are trimmed.
std::vector<EventWindow> detect_candidates(const Recording& rec, const GatingConfig& cfg);

// Merges overlapping or near (< merge_gap_s) windows; idempotent.
std::vector<EventWindow> merge_windows(std::vector<EventWindow> windows, double merge_gap_s);

struct HighRateCrop {
    std::vector<std::vector<double>> samples;  // [channel][sample]
    double rate_hz = 0.0;
    double t_start_s = 0.0;
    bool low_rate_fallback = false;
};

// X^(H)[:, t_s:t_e] with n = round((t_end - t_start) * high_rate_hz); falls
// back to the low-rate stream (flagged) when no high stream exists.
HighRateCrop crop_high_rate(const Recording& rec, const EventWindow& w);

}  // namespace eegr
