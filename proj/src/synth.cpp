#include "eegr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "eegr/common.hpp"
#include "eegr/fft.hpp"
#include "eegr/rng.hpp"

namespace eegr {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kRampS = 0.1;  // cosine on/off ramp inside the event

// Substream tags; stream id = tag<<40 | extra<<20 | channel.
enum StreamTag : std::uint64_t {
    kWhiteLow = 1,
    kPinkLow = 2,
    kWhiteHigh = 3,
    kPinkHigh = 4,
    kEventPhase = 5,
    kEmgNoise = 6,
};

std::uint64_t stream_id(StreamTag tag, std::size_t channel, std::size_t extra = 0) {
    return (static_cast<std::uint64_t>(tag) << 40) |
           (static_cast<std::uint64_t>(extra & 0xFFFFF) << 20) |
           static_cast<std::uint64_t>(channel & 0xFFFFF);
}

// Unit-peak waveform at phase theta. SpikeWave stacks two in-band harmonics
// on the fundamental for a sharper, spike-like cycle.
double waveform(EventShape shape, double theta) {
    switch (shape) {
        case EventShape::Sine:
            return std::sin(theta);
        case EventShape::SpikeWave: {
            const double v = std::sin(theta) + 0.4 * std::sin(2.0 * theta + 0.5) +
                             0.2 * std::sin(3.0 * theta + 1.0);
            return v / 1.43733;  // max |v| over a period, computed numerically
        }
    }
    return 0.0;
}

double event_envelope(double t, double onset, double duration) {
    const double rel = t - onset;
    if (rel < 0.0 || rel > duration) return 0.0;
    const double ramp = std::min(kRampS, duration / 2.0);
    if (rel < ramp) return 0.5 - 0.5 * std::cos(kTwoPi / 2.0 * rel / ramp);
    if (rel > duration - ramp) return 0.5 - 0.5 * std::cos(kTwoPi / 2.0 * (duration - rel) / ramp);
    return 1.0;
}

// White noise shaped to a 1/f power spectrum, normalized to unit std.
std::vector<double> pink_noise(CounterRng& rng, std::size_t n) {
    std::vector<double> white(n);
    for (double& v : white) v = rng.gaussian();
    if (n < 4) return white;

    auto spec = rfft(white);
    spec[0] = 0.0;
    for (std::size_t k = 1; k < spec.size(); ++k) spec[k] /= std::sqrt(static_cast<double>(k));
    auto shaped = irfft(spec, n);

    double mean = 0.0;
    for (double v : shaped) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : shaped) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double scale = var > 0 ? 1.0 / std::sqrt(var) : 0.0;
    for (double& v : shaped) v = (v - mean) * scale;
    return shaped;
}

bool is_frontal(const std::string& name) {
    return !name.empty() && (name[0] == 'F' || name[0] == 'f');
}

// Triangle wave in [-1, 1] with a slow rise and fast fall.
double eog_wave(double t, double freq) {
    double phase = t * freq - std::floor(t * freq);
    return phase < 0.7 ? (phase / 0.7) * 2.0 - 1.0 : (1.0 - (phase - 0.7) / 0.3) * 2.0 - 1.0;
}

}  // namespace

std::string event_shape_name(EventShape s) {
    return s == EventShape::Sine ? "sine" : "spike_wave";
}

EventShape event_shape_from_name(const std::string& s) {
    if (s == "sine") return EventShape::Sine;
    if (s == "spike_wave") return EventShape::SpikeWave;
    throw ConfigError("unknown event shape: " + s);
}

std::string artifact_kind_name(ArtifactKind k) {
    switch (k) {
        case ArtifactKind::Eog: return "eog";
        case ArtifactKind::Emg: return "emg";
        case ArtifactKind::LineNoise: return "line_noise";
    }
    return "line_noise";
}

ArtifactKind artifact_kind_from_name(const std::string& s) {
    if (s == "eog") return ArtifactKind::Eog;
    if (s == "emg") return ArtifactKind::Emg;
    if (s == "line_noise") return ArtifactKind::LineNoise;
    throw ConfigError("unknown artifact kind: " + s);
}

std::vector<std::string> default_channel_names(std::size_t n) {
    static const std::vector<std::string> k1020 = {
        "Fp1", "Fp2", "F3", "F4", "C3", "C4", "P3", "P4", "O1",
        "O2",  "F7",  "F8", "T3", "T4", "T5", "T6", "Fz", "Cz"};
    std::vector<std::string> names;
    names.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i < k1020.size()) names.push_back(k1020[i]);
        else names.push_back("X" + std::to_string(i + 1));
    }
    return names;
}

std::string alpha_id(const std::string& prefix, std::size_t i) {
    std::string suffix;
    std::size_t v = i;
    do {
        suffix.insert(suffix.begin(), static_cast<char>('a' + v % 26));
        v = v / 26;
    } while (v-- > 0);
    return prefix + "-" + suffix;
}

double waveform_robust_scale(EventShape shape) {
    // Dense sampling over whole periods; deterministic.
    const std::size_t n = 200000;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = waveform(shape, kTwoPi * 10.0 * static_cast<double>(i) / static_cast<double>(n));
    return robust_sigma(w);
}

void SynthSpec::validate() const {
    if (!(duration_s > 0)) throw ConfigError("synth: duration must be positive");
    if (!(low_rate_hz > 0)) throw ConfigError("synth: low rate must be positive");
    if (high_rate_hz && !(*high_rate_hz > low_rate_hz))
        throw ConfigError("synth: high rate must exceed low rate");
    if (channel_names.empty()) throw ConfigError("synth: needs at least one channel");
    if (noise.white_sigma_uv < 0) throw ConfigError("synth: negative noise sigma");
    if (noise.pink_fraction < 0 || noise.pink_fraction > 1)
        throw ConfigError("synth: pink fraction outside [0,1]");
    for (const auto& ev : events) {
        if (ev.onset_s < 0 || ev.duration_s <= 0 || ev.onset_s + ev.duration_s > duration_s)
            throw ConfigError("synth: event outside recording bounds");
        if (ev.frequency_hz <= 0 || ev.amplitude_uv < 0)
            throw ConfigError("synth: event frequency/amplitude invalid");
        if (ev.channels.empty()) throw ConfigError("synth: event affects no channel");
        for (std::size_t c : ev.channels)
            if (c >= channel_names.size()) throw ConfigError("synth: event channel out of range");
    }
    for (const auto& a : artifacts) {
        if (a.onset_s < 0 || a.duration_s <= 0 || a.onset_s + a.duration_s > duration_s)
            throw ConfigError("synth: artifact outside recording bounds");
    }
}

std::pair<Recording, GroundTruth> synthesize(const SynthSpec& spec) {
    spec.validate();
    const std::size_t c_count = spec.channel_names.size();

    Recording rec;
    rec.channels = spec.channel_names;
    rec.low_rate_hz = spec.low_rate_hz;
    rec.high_rate_hz = spec.high_rate_hz;
    rec.montage = MontageGraph::infer_from_names(spec.channel_names);

    // channels affected per event, for fast lookup
    std::vector<std::vector<bool>> affected(spec.events.size(), std::vector<bool>(c_count, false));
    for (std::size_t e = 0; e < spec.events.size(); ++e)
        for (std::size_t c : spec.events[e].channels) affected[e][c] = true;

    std::vector<double> phases(spec.events.size() * c_count, 0.0);
    for (std::size_t e = 0; e < spec.events.size(); ++e)
        for (std::size_t c = 0; c < c_count; ++c) {
            CounterRng rng(spec.seed, stream_id(kEventPhase, c, e));
            phases[e * c_count + c] = rng.uniform(0.0, kTwoPi);
        }

    const double sigma_white = spec.noise.white_sigma_uv * std::sqrt(1.0 - spec.noise.pink_fraction);
    const double sigma_pink = spec.noise.white_sigma_uv * std::sqrt(spec.noise.pink_fraction);

    auto render_stream = [&](double rate, StreamTag white_tag, StreamTag pink_tag) {
        const std::size_t t_count = static_cast<std::size_t>(std::llround(spec.duration_s * rate));
        std::vector<std::vector<double>> chans(c_count, std::vector<double>(t_count, 0.0));

        // EMG bursts share one band-limited noise source per artifact/channel,
        // precomputed over the burst extent at this rate.
        for (std::size_t c = 0; c < c_count; ++c) {
            auto& x = chans[c];

            if (sigma_white > 0) {
                CounterRng rng(spec.seed, stream_id(white_tag, c));
                for (std::size_t i = 0; i < t_count; ++i) x[i] += sigma_white * rng.gaussian();
            }
            if (sigma_pink > 0 && t_count >= 4) {
                CounterRng rng(spec.seed, stream_id(pink_tag, c));
                auto pink = pink_noise(rng, t_count);
                for (std::size_t i = 0; i < t_count; ++i) x[i] += sigma_pink * pink[i];
            }

            for (std::size_t e = 0; e < spec.events.size(); ++e) {
                if (!affected[e][c]) continue;
                const auto& ev = spec.events[e];
                const double phase = phases[e * c_count + c];
                const std::size_t i0 =
                    static_cast<std::size_t>(std::max(0.0, std::floor(ev.onset_s * rate)));
                const std::size_t i1 = std::min<std::size_t>(
                    t_count, static_cast<std::size_t>(std::ceil((ev.onset_s + ev.duration_s) * rate)) + 1);
                for (std::size_t i = i0; i < i1; ++i) {
                    const double t = static_cast<double>(i) / rate;
                    const double env = event_envelope(t, ev.onset_s, ev.duration_s);
                    if (env == 0.0) continue;
                    x[i] += ev.amplitude_uv * env *
                            waveform(ev.shape, kTwoPi * ev.frequency_hz * (t - ev.onset_s) + phase);
                }
            }

            for (std::size_t a = 0; a < spec.artifacts.size(); ++a) {
                const auto& art = spec.artifacts[a];
                const std::size_t i0 =
                    static_cast<std::size_t>(std::max(0.0, std::floor(art.onset_s * rate)));
                const std::size_t i1 = std::min<std::size_t>(
                    t_count,
                    static_cast<std::size_t>(std::ceil((art.onset_s + art.duration_s) * rate)) + 1);
                switch (art.kind) {
                    case ArtifactKind::Eog: {
                        if (!is_frontal(spec.channel_names[c])) break;
                        for (std::size_t i = i0; i < i1; ++i) {
                            const double t = static_cast<double>(i) / rate;
                            const double env = event_envelope(t, art.onset_s, art.duration_s);
                            x[i] += 120.0 * art.gain * env * eog_wave(t - art.onset_s, 0.8);
                        }
                        break;
                    }
                    case ArtifactKind::Emg: {
                        CounterRng rng(spec.seed, stream_id(kEmgNoise, c, a));
                        // 20-80 Hz texture: difference of white noise kills the
                        // lowest band, then a soft sinusoidal carrier spread.
                        double prev = rng.gaussian();
                        for (std::size_t i = i0; i < i1; ++i) {
                            const double t = static_cast<double>(i) / rate;
                            const double env = event_envelope(t, art.onset_s, art.duration_s);
                            const double g = rng.gaussian();
                            const double hf = (g - prev) * 0.7071;
                            prev = g;
                            x[i] += 30.0 * art.gain * env * hf *
                                    (0.6 + 0.4 * std::sin(kTwoPi * 35.0 * t));
                        }
                        break;
                    }
                    case ArtifactKind::LineNoise: {
                        for (std::size_t i = i0; i < i1; ++i) {
                            const double t = static_cast<double>(i) / rate;
                            const double env = event_envelope(t, art.onset_s, art.duration_s);
                            x[i] += 20.0 * art.gain * env * std::sin(kTwoPi * art.frequency_hz * t);
                        }
                        break;
                    }
                }
            }

            // Quantize to the container's float32 grid so file round trips
            // are lossless.
            for (double& v : x) v = static_cast<double>(static_cast<float>(v));
        }
        return chans;
    };

    rec.samples_low = render_stream(spec.low_rate_hz, kWhiteLow, kPinkLow);
    if (spec.high_rate_hz)
        rec.samples_high = render_stream(*spec.high_rate_hz, kWhiteHigh, kPinkHigh);
    rec.validate();

    GroundTruth truth;
    truth.duration_s = spec.duration_s;
    truth.seed = spec.seed;
    truth.noise = spec.noise;
    truth.artifacts = spec.artifacts;
    for (std::size_t e = 0; e < spec.events.size(); ++e) {
        const auto& ev = spec.events[e];
        GroundTruthEvent g;
        g.id = alpha_id("gt", e);
        g.onset_s = ev.onset_s;
        g.duration_s = ev.duration_s;
        g.frequency_hz = ev.frequency_hz;
        g.amplitude_uv = ev.amplitude_uv;
        g.robust_amplitude_uv = ev.amplitude_uv * waveform_robust_scale(ev.shape);
        g.channels = ev.channels;
        g.shape = ev.shape;
        std::size_t n_left = 0, n_right = 0;
        for (std::size_t c : ev.channels) {
            if (rec.montage.hemisphere[c] == Hemisphere::Left) ++n_left;
            if (rec.montage.hemisphere[c] == Hemisphere::Right) ++n_right;
        }
        if (n_left + n_right > 0)
            g.lateralization_index = (static_cast<double>(n_left) - static_cast<double>(n_right)) /
                                     static_cast<double>(n_left + n_right);
        truth.events.push_back(std::move(g));
    }
    std::sort(truth.events.begin(), truth.events.end(),
              [](const GroundTruthEvent& a, const GroundTruthEvent& b) { return a.onset_s < b.onset_s; });

    return {std::move(rec), std::move(truth)};
}

}  // namespace eegr
