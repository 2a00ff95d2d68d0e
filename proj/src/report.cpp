#include "eegr/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "eegr/common.hpp"
#include "eegr/synth.hpp"

namespace eegr {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<std::pair<std::string, MeasurementKind>> kFindingFields = {
    {"onset_s", MeasurementKind::TimeS},
    {"duration_s", MeasurementKind::DurationS},
    {"dominant_frequency_hz", MeasurementKind::FrequencyHz},
    {"amplitude_uv", MeasurementKind::AmplitudeUv},
    {"lateralization", MeasurementKind::LateralizationIndex},
};

MeasurementKind field_kind(const std::string& field) {
    for (const auto& [name, kind] : kFindingFields)
        if (name == field) return kind;
    throw ConfigError("template placeholder names no schema field: " + field);
}

std::string field_label(const std::string& field) {
    if (field == "onset_s") return "event onset";
    if (field == "duration_s") return "event duration";
    if (field == "dominant_frequency_hz") return "dominant frequency";
    if (field == "amplitude_uv") return "amplitude";
    if (field == "lateralization") return "lateralization index";
    return field;
}

const std::optional<FrozenMeasurement>* finding_field(const Finding& f, const std::string& name) {
    static thread_local std::optional<FrozenMeasurement> onset_box;
    if (name == "onset_s") {
        onset_box = f.onset;
        return &onset_box;
    }
    if (name == "duration_s") return &f.duration;
    if (name == "dominant_frequency_hz") return &f.frequency;
    if (name == "amplitude_uv") return &f.amplitude;
    if (name == "lateralization") return &f.lateralization;
    return nullptr;
}

// Walks every present measurement in schema order; the n-th measurement owns
// provenance entry alpha_id("p", n). Serialization and construction share
// this enumeration so ids stay stable.
template <typename Fn>
void enumerate_measurements(const ReportSchema& schema, Fn&& fn) {
    std::size_t index = 0;
    for (const Finding& f : schema.findings) {
        fn(index++, f.onset);
        if (f.duration) fn(index++, *f.duration);
        if (f.frequency) fn(index++, *f.frequency);
        if (f.amplitude) fn(index++, *f.amplitude);
        if (f.lateralization) fn(index++, *f.lateralization);
    }
}

ordered_json measurement_to_json(const FrozenMeasurement& m, const std::string& provenance_id) {
    ordered_json j;
    j["value"] = m.value;
    j["text"] = m.canonical_text;
    j["unit"] = m.unit;
    j["confidence"] = m.confidence;
    if (m.interval) j["interval"] = {m.interval->first, m.interval->second};
    else j["interval"] = nullptr;
    j["provenance_id"] = provenance_id;
    return j;
}

FrozenMeasurement measurement_from_json(const json& j, MeasurementKind kind) {
    FrozenMeasurement m;
    m.kind = kind;
    m.value = j.at("value").get<double>();
    m.canonical_text = j.at("text").get<std::string>();
    m.unit = j.at("unit").get<std::string>();
    m.confidence = j.at("confidence").get<double>();
    if (!j.at("interval").is_null()) {
        m.interval = std::make_pair(j.at("interval").at(0).get<double>(),
                                    j.at("interval").at(1).get<double>());
    }
    return m;
}

bool is_run_char(char c) { return (c >= '0' && c <= '9') || c == '.'; }

void tokenize_literal(const std::string& text, std::vector<Token>& out) {
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            out.push_back({Token::Type::Word, word, {}});
            word.clear();
        }
    };
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '\'' || c == '-') {
            word.push_back(c);
        } else {
            flush();
            out.push_back({Token::Type::Punct, std::string(1, c), {}});
        }
    }
    flush();
}

}  // namespace

std::string impression_name(Impression i) {
    switch (i) {
        case Impression::NoEvents: return "no_events";
        case Impression::EventsDetected: return "events_detected";
        case Impression::DegradedQuality: return "degraded_quality";
    }
    return "no_events";
}

Impression impression_from_name(const std::string& s) {
    if (s == "no_events") return Impression::NoEvents;
    if (s == "events_detected") return Impression::EventsDetected;
    if (s == "degraded_quality") return Impression::DegradedQuality;
    throw ConfigError("unknown impression: " + s);
}

// ---------------------------------------------------------------------------

ReportSchema build_schema(const RecordingMeta& meta, std::vector<FindingInput> inputs,
                          bool degraded_quality) {
    std::sort(inputs.begin(), inputs.end(), [](const FindingInput& a, const FindingInput& b) {
        return a.onset.value < b.onset.value;
    });

    ReportSchema schema;
    schema.recording = meta;
    schema.overall_impression = degraded_quality ? Impression::DegradedQuality
                               : inputs.empty()  ? Impression::NoEvents
                                                 : Impression::EventsDetected;

    auto require_provenance = [](const FrozenMeasurement& m) {
        if (m.provenance.method.empty())
            throw std::invalid_argument("build_schema: measurement missing provenance");
    };

    for (std::size_t i = 0; i < inputs.size(); ++i) {
        FindingInput& in = inputs[i];
        Finding f;
        f.event_id = alpha_id("ev", i);
        require_provenance(in.onset);
        f.onset = std::move(in.onset);
        auto take = [&](std::optional<FrozenMeasurement>& src, const char* name,
                        std::optional<FrozenMeasurement>& dst) {
            if (src) {
                require_provenance(*src);
                dst = std::move(src);
            } else {
                f.abstained.push_back(name);
            }
        };
        take(in.duration, "duration_s", f.duration);
        take(in.frequency, "dominant_frequency_hz", f.frequency);
        take(in.amplitude, "amplitude_uv", f.amplitude);
        take(in.lateralization, "lateralization", f.lateralization);
        f.detection_confidence = in.detection_confidence;
        schema.findings.push_back(std::move(f));
    }

    enumerate_measurements(schema, [&](std::size_t index, const FrozenMeasurement& m) {
        schema.provenance_log.push_back({alpha_id("p", index), m.provenance});
    });
    return schema;
}

std::string report_to_json(const ReportSchema& schema) {
    ordered_json j;
    j["schema_version"] = schema.schema_version;
    j["generated_at"] = schema.generated_at;
    j["recording"]["duration_s"] = schema.recording.duration_s;
    j["recording"]["channels"] = schema.recording.channels;
    j["recording"]["low_rate_hz"] = schema.recording.low_rate_hz;
    if (schema.recording.high_rate_hz) j["recording"]["high_rate_hz"] = *schema.recording.high_rate_hz;
    else j["recording"]["high_rate_hz"] = nullptr;

    std::size_t prov_index = 0;
    j["findings"] = ordered_json::array();
    for (const Finding& f : schema.findings) {
        ordered_json jf;
        jf["event_id"] = f.event_id;
        jf["onset_s"] = measurement_to_json(f.onset, alpha_id("p", prov_index++));
        auto put = [&](const char* name, const std::optional<FrozenMeasurement>& m) {
            if (m) jf[name] = measurement_to_json(*m, alpha_id("p", prov_index++));
            else jf[name] = nullptr;
        };
        put("duration_s", f.duration);
        put("dominant_frequency_hz", f.frequency);
        put("amplitude_uv", f.amplitude);
        put("lateralization", f.lateralization);
        jf["detection_confidence"] = f.detection_confidence;
        jf["abstained"] = f.abstained;
        j["findings"].push_back(std::move(jf));
    }

    j["overall_impression"] = impression_name(schema.overall_impression);
    j["narrative"] = schema.narrative;
    j["provenance_log"] = ordered_json::array();
    for (const ProvenanceEntry& e : schema.provenance_log) {
        ordered_json je;
        je["id"] = e.id;
        je["method"] = e.provenance.method;
        je["window"] = {e.provenance.window_start_s, e.provenance.window_end_s};
        je["channels"] = e.provenance.channels;
        je["parameters"] = e.provenance.parameters;
        je["algorithm_version"] = e.provenance.algorithm_version;
        j["provenance_log"].push_back(std::move(je));
    }
    return j.dump(2);
}

ReportSchema report_from_json(const std::string& text) {
    const json j = json::parse(text);
    ReportSchema schema;
    schema.schema_version = j.at("schema_version").get<std::string>();
    schema.generated_at = j.value("generated_at", "");
    schema.recording.duration_s = j.at("recording").at("duration_s").get<double>();
    schema.recording.channels = j.at("recording").at("channels").get<std::size_t>();
    schema.recording.low_rate_hz = j.at("recording").at("low_rate_hz").get<double>();
    if (!j.at("recording").at("high_rate_hz").is_null())
        schema.recording.high_rate_hz = j.at("recording").at("high_rate_hz").get<double>();

    std::map<std::string, Provenance> prov_by_id;
    for (const auto& je : j.at("provenance_log")) {
        ProvenanceEntry e;
        e.id = je.at("id").get<std::string>();
        e.provenance.method = je.at("method").get<std::string>();
        e.provenance.window_start_s = je.at("window").at(0).get<double>();
        e.provenance.window_end_s = je.at("window").at(1).get<double>();
        e.provenance.channels = je.at("channels").get<std::vector<std::size_t>>();
        for (auto it = je.at("parameters").begin(); it != je.at("parameters").end(); ++it)
            e.provenance.parameters[it.key()] = it.value().get<double>();
        e.provenance.algorithm_version = je.at("algorithm_version").get<std::string>();
        prov_by_id[e.id] = e.provenance;
        schema.provenance_log.push_back(std::move(e));
    }

    auto attach = [&](FrozenMeasurement& m, const json& jm) {
        const std::string id = jm.at("provenance_id").get<std::string>();
        auto it = prov_by_id.find(id);
        if (it != prov_by_id.end()) m.provenance = it->second;
    };

    for (const auto& jf : j.at("findings")) {
        Finding f;
        f.event_id = jf.at("event_id").get<std::string>();
        f.onset = measurement_from_json(jf.at("onset_s"), MeasurementKind::TimeS);
        attach(f.onset, jf.at("onset_s"));
        auto get = [&](const char* name, MeasurementKind kind) -> std::optional<FrozenMeasurement> {
            if (jf.at(name).is_null()) return std::nullopt;
            FrozenMeasurement m = measurement_from_json(jf.at(name), kind);
            attach(m, jf.at(name));
            return m;
        };
        f.duration = get("duration_s", MeasurementKind::DurationS);
        f.frequency = get("dominant_frequency_hz", MeasurementKind::FrequencyHz);
        f.amplitude = get("amplitude_uv", MeasurementKind::AmplitudeUv);
        f.lateralization = get("lateralization", MeasurementKind::LateralizationIndex);
        f.detection_confidence = jf.at("detection_confidence").get<double>();
        f.abstained = jf.at("abstained").get<std::vector<std::string>>();
        schema.findings.push_back(std::move(f));
    }

    schema.overall_impression = impression_from_name(j.at("overall_impression").get<std::string>());
    schema.narrative = j.at("narrative").get<std::string>();
    return schema;
}

std::vector<std::string> validate_report_json(const std::string& text) {
    std::vector<std::string> errors;
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        errors.push_back(std::string("not valid JSON: ") + e.what());
        return errors;
    }
    auto err = [&](const std::string& msg) { errors.push_back(msg); };

    static const std::vector<std::string> kTopKeys = {
        "schema_version", "generated_at", "recording", "findings",
        "overall_impression", "narrative", "provenance_log"};
    for (const auto& key : kTopKeys)
        if (!j.contains(key)) err("missing top-level key: " + key);
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(kTopKeys.begin(), kTopKeys.end(), it.key()) == kTopKeys.end())
            err("unknown top-level key: " + it.key());
    if (!errors.empty()) return errors;

    if (!j["schema_version"].is_string() || j["schema_version"] != "1.0")
        err("schema_version must be the string \"1.0\"");

    const auto& rec = j["recording"];
    if (!rec.is_object() || !rec.contains("duration_s") || !rec.contains("channels") ||
        !rec.contains("low_rate_hz") || !rec.contains("high_rate_hz"))
        err("recording block incomplete");
    else {
        if (!rec["duration_s"].is_number()) err("recording.duration_s must be a number");
        if (!rec["channels"].is_number_integer()) err("recording.channels must be an integer");
        if (!rec["low_rate_hz"].is_number()) err("recording.low_rate_hz must be a number");
        if (!rec["high_rate_hz"].is_number() && !rec["high_rate_hz"].is_null())
            err("recording.high_rate_hz must be number or null");
    }

    std::vector<std::string> prov_ids;
    if (!j["provenance_log"].is_array()) {
        err("provenance_log must be an array");
    } else {
        for (const auto& je : j["provenance_log"]) {
            for (const char* key : {"id", "method", "window", "channels", "parameters",
                                    "algorithm_version"})
                if (!je.contains(key)) err(std::string("provenance entry missing ") + key);
            if (je.contains("id")) prov_ids.push_back(je["id"].get<std::string>());
        }
    }

    static const std::vector<std::string> kFindingKeys = {
        "event_id", "onset_s", "duration_s", "dominant_frequency_hz",
        "amplitude_uv", "lateralization", "detection_confidence", "abstained"};
    static const std::vector<std::string> kNullable = {
        "duration_s", "dominant_frequency_hz", "amplitude_uv", "lateralization"};

    auto check_measurement = [&](const json& m, const std::string& where) {
        for (const char* key : {"value", "text", "unit", "confidence", "interval", "provenance_id"})
            if (!m.contains(key)) {
                err(where + " measurement missing " + key);
                return;
            }
        if (!m["value"].is_number()) err(where + ".value must be a number");
        if (!m["text"].is_string()) err(where + ".text must be a string");
        else {
            const double parsed = std::strtod(m["text"].get<std::string>().c_str(), nullptr);
            if (m["value"].is_number() && parsed != m["value"].get<double>())
                err(where + ".text does not parse back to value");
        }
        if (!m["confidence"].is_number() || m["confidence"].get<double>() < 0.0 ||
            m["confidence"].get<double>() > 1.0)
            err(where + ".confidence must lie in [0,1]");
        if (!m["interval"].is_null()) {
            if (!m["interval"].is_array() || m["interval"].size() != 2)
                err(where + ".interval must be [lo, hi] or null");
            else if (m["value"].is_number()) {
                const double v = m["value"].get<double>();
                if (v < m["interval"][0].get<double>() || v > m["interval"][1].get<double>())
                    err(where + ".interval does not contain value");
            }
        }
        if (!m["provenance_id"].is_string() ||
            std::find(prov_ids.begin(), prov_ids.end(), m["provenance_id"].get<std::string>()) ==
                prov_ids.end())
            err(where + ".provenance_id not found in provenance_log");
    };

    if (!j["findings"].is_array()) {
        err("findings must be an array");
    } else {
        double prev_onset = -1e300;
        for (const auto& jf : j["findings"]) {
            const std::string where =
                jf.contains("event_id") && jf["event_id"].is_string()
                    ? jf["event_id"].get<std::string>()
                    : "finding";
            for (const auto& key : kFindingKeys)
                if (!jf.contains(key)) err(where + " missing key " + key);
            for (auto it = jf.begin(); it != jf.end(); ++it)
                if (std::find(kFindingKeys.begin(), kFindingKeys.end(), it.key()) ==
                    kFindingKeys.end())
                    err(where + " has unknown key " + it.key());
            if (!jf.contains("onset_s")) continue;
            if (!jf["onset_s"].is_object()) {
                err(where + ".onset_s must be a measurement");
            } else {
                check_measurement(jf["onset_s"], where + ".onset_s");
                if (jf["onset_s"].contains("value") && jf["onset_s"]["value"].is_number()) {
                    const double onset = jf["onset_s"]["value"].get<double>();
                    if (onset < prev_onset) err("findings not sorted by onset");
                    prev_onset = onset;
                }
            }
            std::vector<std::string> abstained;
            if (jf.contains("abstained") && jf["abstained"].is_array())
                abstained = jf["abstained"].get<std::vector<std::string>>();
            for (const auto& key : kNullable) {
                if (!jf.contains(key)) continue;
                const bool is_null = jf[key].is_null();
                const bool listed =
                    std::find(abstained.begin(), abstained.end(), key) != abstained.end();
                if (is_null && !listed) err(where + "." + key + " null but not listed abstained");
                if (!is_null && listed) err(where + "." + key + " has a value but listed abstained");
                if (!is_null) check_measurement(jf[key], where + "." + key);
            }
            if (jf.contains("detection_confidence") &&
                (!jf["detection_confidence"].is_number() ||
                 jf["detection_confidence"].get<double>() < 0.0 ||
                 jf["detection_confidence"].get<double>() > 1.0))
                err(where + ".detection_confidence must lie in [0,1]");
        }
    }

    if (!j["overall_impression"].is_string()) {
        err("overall_impression must be a string");
    } else {
        try {
            impression_from_name(j["overall_impression"].get<std::string>());
        } catch (const std::exception&) {
            err("overall_impression not a known value");
        }
    }
    if (!j["narrative"].is_string()) err("narrative must be a string");
    return errors;
}

// ---------------------------------------------------------------------------

TemplateClause parse_clause(const std::string& text) {
    TemplateClause clause;
    clause.raw = text;
    std::string literal;
    for (std::size_t i = 0; i < text.size();) {
        if (text[i] == '{') {
            const auto close = text.find('}', i);
            if (close == std::string::npos) throw ConfigError("template: unterminated placeholder");
            const std::string body = text.substr(i + 1, close - i - 1);
            const auto colon = body.find(':');
            if (colon == std::string::npos)
                throw ConfigError("template: placeholder must be {field:kind}");
            const std::string field = body.substr(0, colon);
            const std::string kind_name = body.substr(colon + 1);
            const MeasurementKind expected = field_kind(field);
            if (measurement_kind_from_name(kind_name) != expected)
                throw ConfigError("template: placeholder kind mismatch for " + field);
            if (!literal.empty()) {
                clause.segments.push_back({false, literal, {}, MeasurementKind::FrequencyHz});
                literal.clear();
            }
            clause.segments.push_back({true, {}, field, expected});
            if (std::find(clause.required_fields.begin(), clause.required_fields.end(), field) ==
                clause.required_fields.end())
                clause.required_fields.push_back(field);
            i = close + 1;
        } else {
            if (std::isdigit(static_cast<unsigned char>(text[i])))
                throw ConfigError("template: literal digits are not allowed outside placeholders");
            literal.push_back(text[i]);
            ++i;
        }
    }
    if (!literal.empty()) clause.segments.push_back({false, literal, {}, MeasurementKind::FrequencyHz});
    return clause;
}

TemplateSet TemplateSet::builtin() {
    TemplateSet set;
    set.intro["no_events"] =
        "Continuous EEG monitoring was reviewed. No electrographic events were identified.";
    set.intro["events_detected"] =
        "Continuous EEG monitoring was reviewed. The following electrographic events were "
        "identified.";
    set.intro["degraded_quality"] =
        "Continuous EEG monitoring was reviewed. Recording quality was degraded, and findings are "
        "reported with reduced confidence.";

    auto clauses = [](std::initializer_list<const char*> texts) {
        NarrativeTemplate t;
        for (const char* s : texts) t.clauses.push_back(parse_clause(s));
        return t;
    };
    set.high = clauses({
        "An electrographic event began at {onset_s:time_s} and lasted {duration_s:duration_s}.",
        "The dominant frequency was {dominant_frequency_hz:frequency_hz} with a sustained "
        "amplitude of {amplitude_uv:amplitude_uv}.",
        "The hemispheric lateralization index was {lateralization:lateralization_index} on the "
        "left-positive convention.",
    });
    set.medium = clauses({
        "A probable electrographic event began at {onset_s:time_s} and lasted approximately "
        "{duration_s:duration_s}.",
        "Its dominant frequency was likely {dominant_frequency_hz:frequency_hz} with an estimated "
        "amplitude of {amplitude_uv:amplitude_uv}.",
        "The hemispheric lateralization index was {lateralization:lateralization_index} on the "
        "left-positive convention.",
    });
    set.low = clauses({
        "A possible event of uncertain significance was observed near {onset_s:time_s} into the "
        "recording.",
        "Signal quality limited further quantification; measurements that failed plausibility "
        "checks were withheld.",
    });
    return set;
}

TemplateSet TemplateSet::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open template file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("template file is not valid JSON: " + std::string(e.what()));
    }
    TemplateSet set;
    for (const char* key : {"no_events", "events_detected", "degraded_quality"}) {
        const std::string text = j.at("intro").at(key).get<std::string>();
        for (char c : text)
            if (std::isdigit(static_cast<unsigned char>(c)))
                throw ConfigError("template intro may not contain digits");
        set.intro[key] = text;
    }
    auto load_tier = [&](const char* tier) {
        NarrativeTemplate t;
        for (const auto& s : j.at("tiers").at(tier))
            t.clauses.push_back(parse_clause(s.get<std::string>()));
        return t;
    };
    set.high = load_tier("high");
    set.medium = load_tier("medium");
    set.low = load_tier("low");
    if (j.contains("tier_high")) set.tier_high = j["tier_high"].get<double>();
    if (j.contains("tier_medium")) set.tier_medium = j["tier_medium"].get<double>();
    return set;
}

const NarrativeTemplate& select_template(const TemplateSet& set, double confidence) {
    if (confidence >= set.tier_high) return set.high;
    if (confidence >= set.tier_medium) return set.medium;
    return set.low;
}

// ---------------------------------------------------------------------------

NarrativePlan plan_narrative(const ReportSchema& schema, const TemplateSet& templates) {
    NarrativePlan plan;
    const auto intro_it = templates.intro.find(impression_name(schema.overall_impression));
    if (intro_it == templates.intro.end())
        throw ConfigError("template set lacks intro for impression " +
                          impression_name(schema.overall_impression));
    tokenize_literal(intro_it->second, plan.tokens);

    for (std::size_t fi = 0; fi < schema.findings.size(); ++fi) {
        const Finding& f = schema.findings[fi];
        const NarrativeTemplate& tier = select_template(templates, f.detection_confidence);
        for (const TemplateClause& clause : tier.clauses) {
            bool usable = true;
            for (const std::string& field : clause.required_fields) {
                const auto* slot = finding_field(f, field);
                if (!slot || !slot->has_value()) {
                    usable = false;
                    break;
                }
            }
            if (!usable) continue;
            for (const TemplateSegment& seg : clause.segments) {
                if (!seg.is_slot) {
                    tokenize_literal(seg.text, plan.tokens);
                    continue;
                }
                const auto* slot = finding_field(f, seg.field);
                if (!slot || !slot->has_value())
                    throw ConfigError("unresolvable placeholder: " + seg.field);
                const std::string name = "f" + std::to_string(fi) + "." + seg.field;
                plan.slots[name] = {(*slot)->canonical_text, (*slot)->kind};
                plan.reference_order.push_back(name);
                plan.tokens.push_back({Token::Type::SlotOpen, {}, name});
                plan.tokens.push_back({Token::Type::Numeric, (*slot)->canonical_text, {}});
                plan.tokens.push_back({Token::Type::SlotClose, {}, {}});
            }
        }
    }
    return plan;
}

namespace {

class Emitter {
public:
    void word(const std::string& text) { append(text, false); }
    void punct(const std::string& text) { append(text, true); }
    const std::string& text() const { return out_; }

private:
    void append(const std::string& piece, bool attach) {
        if (piece.empty()) return;
        if (!out_.empty()) {
            const bool run_merge = is_run_char(out_.back()) && is_run_char(piece.front());
            if (!attach || run_merge) {
                if (out_.back() != ' ') out_ += ' ';
            }
        }
        out_ += piece;
    }

    std::string out_;
};

bool contains_digit(const std::string& s) {
    for (char c : s)
        if (c >= '0' && c <= '9') return true;
    return false;
}

}  // namespace

NarrativeResult decode_constrained(const NarrativePlan& plan, TokenStream& tokens) {
    std::map<std::string, std::size_t> needed;
    for (const std::string& name : plan.reference_order) ++needed[name];
    std::map<std::string, std::size_t> emitted;

    Emitter out;
    NarrativeResult result;

    enum class State { Outside, InSlot, Suppressed };
    State state = State::Outside;
    std::string slot_name;
    std::string slot_buffer;

    auto emit_slot = [&](const std::string& name, const std::string& buffer) {
        const SlotValue& slot = plan.slots.at(name);
        if (buffer != slot.canonical) ++result.mask_events;  // substitution: copy contract
        out.word(slot.canonical);
        const std::string unit = measurement_unit(slot.kind);
        if (!unit.empty()) out.word(unit);
        ++emitted[name];
    };

    while (auto token = tokens.next()) {
        switch (token->type) {
            case Token::Type::SlotOpen: {
                if (state == State::InSlot) {
                    ++result.mask_events;  // nested open ignored
                    break;
                }
                if (state == State::Suppressed) {
                    ++result.mask_events;
                    break;
                }
                const auto it = plan.slots.find(token->slot);
                if (it == plan.slots.end() || emitted[token->slot] >= needed[token->slot]) {
                    state = State::Suppressed;  // unknown or over-referenced slot
                    ++result.mask_events;
                } else {
                    state = State::InSlot;
                    slot_name = token->slot;
                    slot_buffer.clear();
                }
                break;
            }
            case Token::Type::SlotClose: {
                if (state == State::InSlot) {
                    emit_slot(slot_name, slot_buffer);
                    state = State::Outside;
                } else if (state == State::Suppressed) {
                    state = State::Outside;
                } else {
                    ++result.mask_events;  // stray close
                }
                break;
            }
            case Token::Type::Numeric: {
                if (state == State::InSlot) slot_buffer += token->text;
                else ++result.mask_events;  // numerics never pass outside slots
                break;
            }
            case Token::Type::Word:
            case Token::Type::Punct: {
                if (state == State::InSlot) {
                    slot_buffer += token->text;
                } else if (state == State::Suppressed) {
                    // swallowed
                } else if (contains_digit(token->text)) {
                    ++result.mask_events;  // mislabelled numeric content
                } else if (token->type == Token::Type::Word) {
                    out.word(token->text);
                } else {
                    out.punct(token->text);
                }
                break;
            }
        }
    }
    if (state == State::InSlot) {
        emit_slot(slot_name, slot_buffer);  // unterminated region still honors the contract
        ++result.mask_events;
    }

    // complete references the stream never produced
    for (const std::string& name : plan.reference_order) {
        if (emitted[name] >= needed[name]) continue;
        const SlotValue& slot = plan.slots.at(name);
        const auto dot = name.find('.');
        const std::string field = dot == std::string::npos ? name : name.substr(dot + 1);
        std::vector<Token> filler;
        tokenize_literal("For completeness, the recorded " + field_label(field) + " was",
                         filler);
        for (const Token& t : filler) {
            if (t.type == Token::Type::Word) out.word(t.text);
            else out.punct(t.text);
        }
        out.word(slot.canonical);
        const std::string unit = measurement_unit(slot.kind);
        if (!unit.empty()) out.word(unit);
        out.punct(".");
        ++emitted[name];
        ++result.mask_events;
    }

    result.text = out.text();
    return result;
}

NarrativeResult generate_narrative(const ReportSchema& schema, const TemplateSet& templates,
                                   TokenStream* tokens) {
    const NarrativePlan plan = plan_narrative(schema, templates);
    if (tokens) return decode_constrained(plan, *tokens);
    PlanTokenStream default_stream(plan);
    return decode_constrained(plan, default_stream);
}

std::vector<std::string> extract_digit_runs(const std::string& text) {
    std::vector<std::string> runs;
    std::string cur;
    bool has_digit = false;
    auto flush = [&] {
        if (!cur.empty() && has_digit) runs.push_back(cur);
        cur.clear();
        has_digit = false;
    };
    for (char c : text) {
        if (is_run_char(c)) {
            cur.push_back(c);
            if (c != '.') has_digit = true;
        } else {
            flush();
        }
    }
    flush();
    return runs;
}

std::string canonical_digit_run(const std::string& canonical) {
    std::string out;
    for (char c : canonical)
        if (c != '-') out.push_back(c);
    return out;
}

}  // namespace eegr
