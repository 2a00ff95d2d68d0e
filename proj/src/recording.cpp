#include "eegr/recording.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "eegr/common.hpp"

namespace eegr {

std::string hemisphere_name(Hemisphere h) {
    switch (h) {
        case Hemisphere::Left: return "left";
        case Hemisphere::Right: return "right";
        case Hemisphere::Midline: return "midline";
    }
    return "midline";
}

Hemisphere hemisphere_from_name(const std::string& s) {
    if (s == "left") return Hemisphere::Left;
    if (s == "right") return Hemisphere::Right;
    if (s == "midline") return Hemisphere::Midline;
    throw ConfigError("unknown hemisphere: " + s);
}

void MontageGraph::validate() const {
    if (hemisphere.size() != node_count)
        throw std::invalid_argument("montage: hemisphere map must cover every node");
    for (const auto& [a, b] : edges) {
        if (a >= node_count || b >= node_count)
            throw std::invalid_argument("montage: edge references invalid node");
        if (a == b) throw std::invalid_argument("montage: self-loop edge");
    }
    if (!distances.empty() && distances.size() != edges.size())
        throw std::invalid_argument("montage: distances must parallel edges");
}

std::vector<std::size_t> MontageGraph::channels_of(Hemisphere h) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < hemisphere.size(); ++i)
        if (hemisphere[i] == h) out.push_back(i);
    return out;
}

std::vector<double> MontageGraph::adjacency_matrix() const {
    std::vector<double> adj(node_count * node_count, 0.0);
    for (const auto& [a, b] : edges) {
        adj[a * node_count + b] = 1.0;
        adj[b * node_count + a] = 1.0;
    }
    return adj;
}

MontageGraph MontageGraph::infer_from_names(const std::vector<std::string>& names) {
    MontageGraph g;
    g.node_count = names.size();
    g.hemisphere.resize(names.size(), Hemisphere::Midline);

    for (std::size_t i = 0; i < names.size(); ++i) {
        const std::string& name = names[i];
        if (name.empty()) continue;
        char last = static_cast<char>(std::tolower(static_cast<unsigned char>(name.back())));
        if (last == 'z') {
            g.hemisphere[i] = Hemisphere::Midline;
        } else if (std::isdigit(static_cast<unsigned char>(last))) {
            int digit = last - '0';
            g.hemisphere[i] = (digit % 2 == 1) ? Hemisphere::Left : Hemisphere::Right;
        }
    }

    auto chain = [&](const std::vector<std::size_t>& side) {
        for (std::size_t i = 1; i < side.size(); ++i)
            g.edges.emplace_back(std::min(side[i - 1], side[i]), std::max(side[i - 1], side[i]));
    };
    auto left = g.channels_of(Hemisphere::Left);
    auto right = g.channels_of(Hemisphere::Right);
    auto mid = g.channels_of(Hemisphere::Midline);
    chain(left);
    chain(right);
    chain(mid);
    for (std::size_t i = 0; i < std::min(left.size(), right.size()); ++i)
        g.edges.emplace_back(std::min(left[i], right[i]), std::max(left[i], right[i]));
    return g;
}

void ClinicalTolerances::validate() const {
    if (!(eps_f_hz > 0) || !(eps_d_s > 0) || !(eps_a_uv > 0))
        throw ConfigError("clinical tolerances must be strictly positive");
}

void Recording::validate() const {
    if (channels.empty()) throw std::invalid_argument("recording: needs at least one channel");
    if (!(low_rate_hz > 0)) throw std::invalid_argument("recording: low rate must be positive");
    if (samples_low.size() != channels.size())
        throw std::invalid_argument("recording: low stream channel count mismatch");
    const std::size_t t_low = samples_low.front().size();
    if (t_low == 0) throw std::invalid_argument("recording: empty low stream");
    for (const auto& ch : samples_low)
        if (ch.size() != t_low) throw std::invalid_argument("recording: ragged low stream");

    if (high_rate_hz) {
        if (!(*high_rate_hz > low_rate_hz))
            throw std::invalid_argument("recording: high rate must exceed low rate");
        if (samples_high.size() != channels.size())
            throw std::invalid_argument("recording: high stream channel count mismatch");
        const std::size_t t_high = samples_high.front().size();
        for (const auto& ch : samples_high)
            if (ch.size() != t_high) throw std::invalid_argument("recording: ragged high stream");
    } else if (!samples_high.empty()) {
        throw std::invalid_argument("recording: high samples present without a high rate");
    }

    auto all_finite = [](const std::vector<std::vector<double>>& chans) {
        for (const auto& ch : chans)
            for (double v : ch)
                if (!std::isfinite(v)) return false;
        return true;
    };
    if (!all_finite(samples_low) || !all_finite(samples_high))
        throw std::invalid_argument("recording: non-finite sample");

    montage.validate();
    if (montage.node_count != channels.size())
        throw std::invalid_argument("recording: montage does not cover channels");
}

double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty range");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (v[mid - 1] + hi);
}

double robust_sigma(const std::vector<double>& v) {
    const double med = median(std::vector<double>(v));
    std::vector<double> dev(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) dev[i] = std::abs(v[i] - med);
    return 1.4826 * median(std::move(dev));
}

}  // namespace eegr
