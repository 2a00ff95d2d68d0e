#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eegr/recording.hpp"

namespace eegr {

enum class EventShape { Sine, SpikeWave };
enum class ArtifactKind { Eog, Emg, LineNoise };

std::string event_shape_name(EventShape s);
EventShape event_shape_from_name(const std::string& s);
std::string artifact_kind_name(ArtifactKind k);
ArtifactKind artifact_kind_from_name(const std::string& s);

struct SynthEvent {
    double onset_s = 0.0;
    double duration_s = 0.0;
    double frequency_hz = 0.0;
    double amplitude_uv = 0.0;  // peak amplitude of the normalized waveform
    std::vector<std::size_t> channels;
    EventShape shape = EventShape::Sine;
};

struct SynthArtifact {
    ArtifactKind kind = ArtifactKind::LineNoise;
    double onset_s = 0.0;
    double duration_s = 0.0;
    double gain = 1.0;
    double frequency_hz = 60.0;  // line noise only
};

struct NoiseModel {
    double white_sigma_uv = 0.0;
    double pink_fraction = 0.0;  // fraction of noise power with a 1/f spectrum
};

struct SynthSpec {
    double duration_s = 0.0;
    double low_rate_hz = 256.0;
    std::optional<double> high_rate_hz;
    std::vector<std::string> channel_names;  // see default_channel_names
    NoiseModel noise;
    std::vector<SynthEvent> events;
    std::vector<SynthArtifact> artifacts;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GroundTruthEvent {
    std::string id;
    double onset_s = 0.0;
    double duration_s = 0.0;
    double frequency_hz = 0.0;
    double amplitude_uv = 0.0;
    double robust_amplitude_uv = 0.0;  // robust scale of the clean waveform
    std::vector<std::size_t> channels;
    EventShape shape = EventShape::Sine;
    std::optional<double> lateralization_index;
};

struct GroundTruth {
    double duration_s = 0.0;
    std::uint64_t seed = 0;
    NoiseModel noise;
    std::vector<GroundTruthEvent> events;
    std::vector<SynthArtifact> artifacts;
};

// 10-20 style names; hemisphere is recoverable from the suffix digit.
std::vector<std::string> default_channel_names(std::size_t n);

// Spelled-out identifier for index i: "ev-a", "ev-b", ..., "ev-aa".
// Used everywhere an id must not introduce digits into narrative text.
std::string alpha_id(const std::string& prefix, std::size_t i);

// Deterministic for a fixed spec: every sample is a pure function of
// (seed, channel, sample index). Samples are quantized to float32 so the
// container round trip is exact.
std::pair<Recording, GroundTruth> synthesize(const SynthSpec& spec);

// Robust scale (1.4826 * MAD) of the unit-amplitude event waveform; the
// clean event's robust amplitude is amplitude_uv times this.
double waveform_robust_scale(EventShape shape);

}  // namespace eegr
