#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eegr/recording.hpp"

namespace eegr {

enum class MeasurementKind {
    FrequencyHz,
    DurationS,
    AmplitudeUv,
    LateralizationIndex,
    TimeS,  // event onsets; timestamps are frozen like any other value
};

std::string measurement_kind_name(MeasurementKind k);
MeasurementKind measurement_kind_from_name(const std::string& s);
std::string measurement_unit(MeasurementKind k);  // "" for unitless kinds

// Everything needed to re-run the computation that produced a value.
struct Provenance {
    std::string method;
    double window_start_s = 0.0;
    double window_end_s = 0.0;
    std::vector<std::size_t> channels;
    std::map<std::string, double> parameters;
    std::string algorithm_version = "v1";
};

// Decimal places of the canonical copy-contract string, round-half-even.
int canonical_decimals(MeasurementKind k);

// Formats with the kind's decimal count; the parsed-back double defines the
// frozen value, so text and value round-trip exactly.
std::string canonical_format(double value, MeasurementKind k);

struct FrozenMeasurement {
    MeasurementKind kind = MeasurementKind::FrequencyHz;
    double value = 0.0;
    std::string unit;
    double confidence = 0.0;
    std::optional<std::pair<double, double>> interval;
    Provenance provenance;
    std::string canonical_text;

    // Quantizes raw_value to the canonical grid and fills value, unit and
    // canonical_text consistently.
    static FrozenMeasurement freeze(MeasurementKind kind, double raw_value, double confidence,
                                    std::optional<std::pair<double, double>> interval,
                                    Provenance provenance);
};

enum class PlausibilityVerdict { Pass, ReMeasure, Abstain };

// Tri-state plausibility gate. attempt 0 is the first try; a violation on a
// later attempt abstains instead of asking for re-measurement.
PlausibilityVerdict check_plausibility(const FrozenMeasurement& m, int attempt = 0);

// ---------------------------------------------------------------------------
// Welch spectral estimation

struct Psd {
    std::vector<double> freqs_hz;  // uniform grid 0..Nyquist
    std::vector<double> power;     // uV^2/Hz, one-sided
    std::size_t segment_count = 0;
    std::string window_kind = "hann";
    double overlap = 0.5;
    double rate_hz = 0.0;

    double bin_width_hz() const { return freqs_hz.size() > 1 ? freqs_hz[1] - freqs_hz[0] : 0.0; }
    double total_power() const;  // integral of the density over the grid
};

// Hann-windowed averaged periodograms with per-segment mean removal and
// window-power normalization; the density integrates to the signal variance.
// Throws when the window is too short for the requested segment count.
Psd welch_psd(const std::vector<double>& x, double rate_hz, std::size_t segments = 8,
              double overlap = 0.5);

// Mean of per-channel Welch PSDs over a channel subset of a crop.
Psd welch_psd_mean(const std::vector<std::vector<double>>& chans,
                   const std::vector<std::size_t>& subset, double rate_hz,
                   std::size_t segments = 8, double overlap = 0.5);

// ---------------------------------------------------------------------------
// Measurement operations (values frozen with provenance)

// Arg-max bin inside the band refined by parabolic interpolation on
// log-power. Ties resolve to the lower frequency. Returns nothing when the
// band carries no power (abstention).
std::optional<FrozenMeasurement> dominant_frequency(const Psd& psd, double band_lo_hz,
                                                    double band_hi_hz, Provenance base = {});

struct HysteresisConfig {
    double env_window_s = 0.25;     // RMS sub-window (also the hop)
    double merge_gap_s = 0.5;       // sub-events closer than this merge
    std::optional<double> t_high;   // explicit thresholds override the auto rule
    std::optional<double> t_low;
    double margin_s = 0.0;          // leading/trailing baseline region of the crop
};

struct DurationMeasurement {
    FrozenMeasurement duration;
    double event_start_s = 0.0;  // relative to the crop start
    double event_end_s = 0.0;
    double t_high = 0.0;
    double t_low = 0.0;
};

// RMS envelope in env_window_s bins; event enters above t_high, exits below
// t_low, nearby sub-events merge; the longest merged event wins. Without an
// explicit threshold pair, t_high/t_low sit 4 and 2 robust sigmas above the
// baseline estimated from the crop margins. Abstains when nothing crosses.
std::optional<DurationMeasurement> event_duration(const std::vector<double>& x, double rate_hz,
                                                  const HysteresisConfig& cfg, Provenance base = {});

// 1.4826 * median(|x - median(x)|) in microvolts.
FrozenMeasurement event_amplitude(const std::vector<double>& x, Provenance base = {});

// Hemispheric band-power asymmetry (P_L - P_R) / (P_L + P_R); midline
// channels excluded. Abstains when both hemispheres carry zero power.
std::optional<FrozenMeasurement> lateralization(const std::vector<std::vector<double>>& chans,
                                                double rate_hz, double band_lo_hz,
                                                double band_hi_hz, const MontageGraph& montage,
                                                Provenance base = {});

double logistic(double x);

}  // namespace eegr
