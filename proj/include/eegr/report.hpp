#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eegr/gating.hpp"
#include "eegr/measurement.hpp"

namespace eegr {

// ---------------------------------------------------------------------------
// Schema

enum class Impression { NoEvents, EventsDetected, DegradedQuality };

std::string impression_name(Impression i);
Impression impression_from_name(const std::string& s);

struct RecordingMeta {
    double duration_s = 0.0;
    std::size_t channels = 0;
    double low_rate_hz = 0.0;
    std::optional<double> high_rate_hz;
};

struct Finding {
    std::string event_id;
    FrozenMeasurement onset;
    std::optional<FrozenMeasurement> duration;
    std::optional<FrozenMeasurement> frequency;
    std::optional<FrozenMeasurement> amplitude;
    std::optional<FrozenMeasurement> lateralization;
    double detection_confidence = 0.0;
    std::vector<std::string> abstained;  // schema field names
};

struct ProvenanceEntry {
    std::string id;
    Provenance provenance;
};

struct ReportSchema {
    std::string schema_version = "1.0";
    std::string generated_at;  // injectable timestamp
    RecordingMeta recording;
    std::vector<Finding> findings;  // sorted by onset
    Impression overall_impression = Impression::NoEvents;
    std::string narrative;
    std::vector<ProvenanceEntry> provenance_log;  // one entry per measurement
};

// Pre-schema finding payload: measurements that already cleared plausibility
// (present) or abstained (absent).
struct FindingInput {
    EventWindow window;
    FrozenMeasurement onset;
    std::optional<FrozenMeasurement> duration;
    std::optional<FrozenMeasurement> frequency;
    std::optional<FrozenMeasurement> amplitude;
    std::optional<FrozenMeasurement> lateralization;
    double detection_confidence = 0.0;
};

// Assembles findings (sorted by onset, alphabetic event ids, abstained list
// derived from absent fields) and a provenance entry per measurement.
// Throws when a measurement arrives without provenance.
ReportSchema build_schema(const RecordingMeta& meta, std::vector<FindingInput> inputs,
                          bool degraded_quality = false);

std::string report_to_json(const ReportSchema& schema);
ReportSchema report_from_json(const std::string& text);

// Structural validation against the normative schema; empty result = valid.
std::vector<std::string> validate_report_json(const std::string& text);

// ---------------------------------------------------------------------------
// Narrative templates

struct TemplateSegment {
    bool is_slot = false;
    std::string text;          // literal text (no digits allowed)
    std::string field;         // finding field name for slots
    MeasurementKind kind = MeasurementKind::FrequencyHz;
};

struct TemplateClause {
    std::string raw;
    std::vector<TemplateSegment> segments;
    std::vector<std::string> required_fields;  // clause drops when any is absent
};

// Parses "literal {field:kind} literal ..."; rejects digits outside
// placeholders and placeholders that name no schema field.
TemplateClause parse_clause(const std::string& text);

struct NarrativeTemplate {
    std::vector<TemplateClause> clauses;
};

struct TemplateSet {
    std::map<std::string, std::string> intro;  // by impression name; digit-free
    NarrativeTemplate high;
    NarrativeTemplate medium;
    NarrativeTemplate low;
    double tier_high = 0.8;
    double tier_medium = 0.5;

    static TemplateSet builtin();
    static TemplateSet load_file(const std::string& path);
};

const NarrativeTemplate& select_template(const TemplateSet& set, double confidence);

// ---------------------------------------------------------------------------
// Token streams and the mask-enforcing decoder

struct Token {
    enum class Type { Word, Punct, Numeric, SlotOpen, SlotClose };
    Type type = Type::Word;
    std::string text;  // payload for word/punct/numeric
    std::string slot;  // slot name for SlotOpen
};

// Pluggable narrative producer. Adversarial implementations are expected;
// the decoder enforces the copy contract regardless.
class TokenStream {
public:
    virtual ~TokenStream() = default;
    virtual std::optional<Token> next() = 0;
};

struct SlotValue {
    std::string canonical;
    MeasurementKind kind = MeasurementKind::FrequencyHz;
};

// Ordered slot references with resolved canonical text, one per placeholder
// occurrence in the realized template plan.
struct NarrativePlan {
    std::vector<Token> tokens;                  // the default producer's output
    std::map<std::string, SlotValue> slots;     // name -> canonical/kind
    std::vector<std::string> reference_order;   // slot name per reference
};

// Realizes the template set against a schema: intro for the impression, then
// the tier-selected clause list per finding with abstained clauses dropped.
// Throws when a placeholder cannot be resolved.
NarrativePlan plan_narrative(const ReportSchema& schema, const TemplateSet& templates);

// Replays a plan's own tokens; never triggers a mask event.
class PlanTokenStream : public TokenStream {
public:
    explicit PlanTokenStream(const NarrativePlan& plan) : tokens_(&plan.tokens) {}
    std::optional<Token> next() override {
        if (pos_ >= tokens_->size()) return std::nullopt;
        return (*tokens_)[pos_++];
    }

private:
    const std::vector<Token>* tokens_;
    std::size_t pos_ = 0;
};

struct NarrativeResult {
    std::string text;
    std::size_t mask_events = 0;   // rejected numerics + slot substitutions
};

// Finite-state decode of an arbitrary token stream against a plan: numeric
// tokens outside slot regions are masked, slot regions emit exactly the
// canonical text (substituting when the stream disagrees), units come from
// the slot kind, missing references are completed and duplicates suppressed.
// Every referenced canonical appears exactly once in the output.
NarrativeResult decode_constrained(const NarrativePlan& plan, TokenStream& tokens);

// plan + decode with the supplied stream (default producer when null).
NarrativeResult generate_narrative(const ReportSchema& schema, const TemplateSet& templates,
                                   TokenStream* tokens = nullptr);

// Maximal [0-9.] runs containing at least one digit.
std::vector<std::string> extract_digit_runs(const std::string& text);

// Digit-run projection of a canonical string (sign stripped).
std::string canonical_digit_run(const std::string& canonical);

}  // namespace eegr
