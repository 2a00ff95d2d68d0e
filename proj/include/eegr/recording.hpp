#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace eegr {

enum class Hemisphere { Left, Right, Midline };

std::string hemisphere_name(Hemisphere h);
Hemisphere hemisphere_from_name(const std::string& s);

// Channel adjacency graph with a hemisphere assignment per channel.
struct MontageGraph {
    std::size_t node_count = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // undirected, first < second
    std::vector<Hemisphere> hemisphere;                      // one per node
    std::vector<double> distances;                           // optional, parallel to edges

    void validate() const;

    std::vector<std::size_t> channels_of(Hemisphere h) const;

    // Symmetric adjacency indicator, used as the default attention bias.
    std::vector<double> adjacency_matrix() const;

    // 10-20 naming convention: odd suffix digit = left, even = right,
    // trailing 'z' = midline. Edges chain each hemisphere in order and pair
    // homologous left/right channels.
    static MontageGraph infer_from_names(const std::vector<std::string>& names);
};

struct ClinicalTolerances {
    double eps_f_hz = 0.1;
    double eps_d_s = 0.5;
    double eps_a_uv = 5.0;

    void validate() const;
};

// Synchronized dual-rate multi-channel sample container. Samples are in
// microvolts, channel-major. Streams share start_time; sample k of a stream
// at rate r lies at start_time + k/r.
struct Recording {
    std::vector<std::string> channels;
    double low_rate_hz = 0.0;
    std::optional<double> high_rate_hz;
    std::vector<std::vector<double>> samples_low;   // [channel][sample]
    std::vector<std::vector<double>> samples_high;  // empty when no high stream
    double start_time_s = 0.0;
    MontageGraph montage;
    std::vector<std::string> processing_log;  // provenance notes (preprocess etc.)

    std::size_t channel_count() const { return channels.size(); }
    std::size_t low_sample_count() const { return samples_low.empty() ? 0 : samples_low.front().size(); }
    std::size_t high_sample_count() const { return samples_high.empty() ? 0 : samples_high.front().size(); }
    double duration_s() const {
        return low_rate_hz > 0 ? static_cast<double>(low_sample_count()) / low_rate_hz : 0.0;
    }
    bool has_high_stream() const { return high_rate_hz.has_value(); }

    // Enforces the container invariants: C >= 1, T_L >= 1, rate ordering,
    // rectangular sample matrices, all samples finite.
    void validate() const;
};

}  // namespace eegr
