#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sophie/errors.hpp"

namespace sophie {

enum class Speaker { Clinician, Patient };

std::string_view to_string(Speaker s) noexcept;
// Accepts "clinician"/"patient" plus the aliases "user"/"sophie", ignoring case.
std::optional<Speaker> parse_speaker(std::string_view s);

struct Turn {
    std::size_t index = 0;
    Speaker speaker = Speaker::Patient;
    std::string text;
    std::optional<std::int64_t> start_ms;
    std::optional<std::int64_t> end_ms;

    bool timed() const noexcept { return start_ms.has_value() && end_ms.has_value(); }
    std::optional<std::int64_t> duration_ms() const noexcept;

    bool operator==(const Turn&) const = default;
};

struct Transcript {
    std::vector<Turn> turns;
    std::optional<std::string> schema_id;
    std::optional<std::string> created_at;
    // "speech" or "typing"; set by front ends that timestamp typed entry.
    std::optional<std::string> timing_source;

    bool fully_timed() const noexcept;
    bool operator==(const Transcript&) const = default;
};

enum class AnnotationKind { Lecture, Question, SuggestOpenQuestion, SuggestEmpathy };

std::string_view to_string(AnnotationKind k) noexcept;

struct Annotation {
    std::size_t turn_index = 0;
    AnnotationKind kind = AnnotationKind::Question;
    std::optional<std::string> payload;

    bool operator==(const Annotation&) const = default;
};

/// Checks every Transcript invariant. Returns an empty list iff the
/// transcript is valid; each entry names the offending turn and rule.
std::vector<Violation> validate(const Transcript& t);

/// Checks annotations against the transcript they decorate.
std::vector<Violation> validate_annotations(const Transcript& t,
                                            std::span<const Annotation> annotations);

/// Parses the transcript JSON document. Throws ParseError on malformed JSON
/// (with byte offset) and ValidationError when the document is well formed
/// but breaks the schema or a Transcript invariant. Unknown keys are ignored.
Transcript parse_transcript(std::string_view document);
Transcript transcript_from_json(const nlohmann::json& doc);

nlohmann::json transcript_to_json(const Transcript& t);
/// Deterministic rendering (sorted keys, absent optionals omitted).
std::string serialize_transcript(const Transcript& t);

std::string current_iso8601_utc();
bool is_iso8601(std::string_view s);

} // namespace sophie
