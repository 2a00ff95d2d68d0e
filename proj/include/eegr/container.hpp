#pragma once

#include <string>

#include "eegr/recording.hpp"
#include "eegr/synth.hpp"

namespace eegr {

// Recording container: one raw binary per stream (magic "EEGR", version u16,
// channel count u16, rate f64, sample count u64, channel-major little-endian
// float32) plus a JSON sidecar naming channels, montage and stream files.
// write_recording returns the sidecar path (<dir>/<stem>.json).
std::string write_recording(const Recording& rec, const std::string& dir, const std::string& stem);

// Reads a container from its sidecar path, or a headered CSV (time column
// plus one column per channel) when the path ends in .csv.
Recording read_recording(const std::string& path);

Recording read_recording_csv(const std::string& path);

// Montage as a standalone JSON document (hemispheres, edges, distances).
std::string montage_to_json(const MontageGraph& montage, const std::vector<std::string>& channels);
MontageGraph montage_from_json(const std::string& text, const std::vector<std::string>& channels);
MontageGraph read_montage_file(const std::string& path, const std::vector<std::string>& channels);

std::string ground_truth_to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(const std::string& text);
GroundTruth read_ground_truth_file(const std::string& path);

SynthSpec synth_spec_from_json(const std::string& text);
SynthSpec read_synth_spec_file(const std::string& path);
std::string synth_spec_to_json(const SynthSpec& spec);

}  // namespace eegr
