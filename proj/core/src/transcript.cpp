#include "sophie/transcript.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <regex>
#include <sstream>

namespace sophie {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string join_messages(const std::vector<Violation>& vs) {
    std::ostringstream os;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) os << "; ";
        os << describe(vs[i]);
    }
    return os.str();
}

} // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error("validation failed: " + join_messages(violations)),
      violations_(std::move(violations)) {}

LoadError::LoadError(std::string source, std::size_t line, const std::string& message)
    : Error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + message),
      source_(std::move(source)), line_(line), detail_(message) {}

std::string describe(const Violation& v) {
    std::string out;
    if (v.turn_index) out = "turn " + std::to_string(*v.turn_index) + ": ";
    out += v.message + " [" + v.rule + "]";
    return out;
}

std::string_view to_string(Speaker s) noexcept {
    return s == Speaker::Clinician ? "clinician" : "patient";
}

std::optional<Speaker> parse_speaker(std::string_view s) {
    const auto l = lower(s);
    if (l == "clinician" || l == "user") return Speaker::Clinician;
    if (l == "patient" || l == "sophie") return Speaker::Patient;
    return std::nullopt;
}

std::optional<std::int64_t> Turn::duration_ms() const noexcept {
    if (!timed()) return std::nullopt;
    return *end_ms - *start_ms;
}

bool Transcript::fully_timed() const noexcept {
    return !turns.empty() &&
           std::all_of(turns.begin(), turns.end(), [](const Turn& t) { return t.timed(); });
}

std::string_view to_string(AnnotationKind k) noexcept {
    switch (k) {
    case AnnotationKind::Lecture: return "lecture";
    case AnnotationKind::Question: return "question";
    case AnnotationKind::SuggestOpenQuestion: return "suggest_open_question";
    case AnnotationKind::SuggestEmpathy: return "suggest_empathy";
    }
    return "unknown";
}

bool is_iso8601(std::string_view s) {
    static const std::regex re(
        R"(\d{4}-\d{2}-\d{2}(T\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?)?)");
    return std::regex_match(s.begin(), s.end(), re);
}

std::string current_iso8601_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<Violation> validate(const Transcript& t) {
    std::vector<Violation> out;
    std::optional<std::size_t> last_timed;
    for (std::size_t pos = 0; pos < t.turns.size(); ++pos) {
        const Turn& turn = t.turns[pos];
        if (turn.index != pos) {
            const bool duplicate = pos > 0 && turn.index == t.turns[pos - 1].index;
            out.push_back({turn.index, "index-contiguous",
                           (duplicate ? "duplicate index " : "unexpected index ") +
                               std::to_string(turn.index) + " at position " +
                               std::to_string(pos)});
        }
        if (blank(turn.text)) {
            out.push_back({turn.index, "text-non-empty", "text is empty after trimming"});
        }
        if ((turn.start_ms && *turn.start_ms < 0) || (turn.end_ms && *turn.end_ms < 0)) {
            out.push_back({turn.index, "timestamp-non-negative", "timestamps must be >= 0"});
        }
        if (turn.timed() && *turn.end_ms < *turn.start_ms) {
            out.push_back({turn.index, "end-after-start",
                           "end_ms " + std::to_string(*turn.end_ms) + " precedes start_ms " +
                               std::to_string(*turn.start_ms)});
        }
        if (turn.start_ms) {
            if (last_timed) {
                const Turn& prev = t.turns[*last_timed];
                if (*turn.start_ms < *prev.start_ms) {
                    out.push_back({turn.index, "start-monotonic",
                                   "start_ms of turns " + std::to_string(prev.index) + " and " +
                                       std::to_string(turn.index) + " out of order"});
                }
            }
            last_timed = pos;
        }
    }
    if (t.created_at && !is_iso8601(*t.created_at)) {
        out.push_back({std::nullopt, "created-at-iso8601",
                       "created_at is not an ISO-8601 timestamp"});
    }
    return out;
}

std::vector<Violation> validate_annotations(const Transcript& t,
                                            std::span<const Annotation> annotations) {
    std::vector<Violation> out;
    for (const Annotation& a : annotations) {
        if (a.turn_index >= t.turns.size()) {
            out.push_back({a.turn_index, "annotation-turn-exists",
                           "annotation refers to a missing turn"});
            continue;
        }
        const bool clinician_only =
            a.kind == AnnotationKind::Lecture || a.kind == AnnotationKind::Question;
        if (clinician_only && t.turns[a.turn_index].speaker != Speaker::Clinician) {
            out.push_back({a.turn_index, "annotation-clinician-only",
                           std::string(to_string(a.kind)) + " annotation on a patient turn"});
        }
        const bool suggestion = a.kind == AnnotationKind::SuggestOpenQuestion ||
                                a.kind == AnnotationKind::SuggestEmpathy;
        if (suggestion && (!a.payload || blank(*a.payload))) {
            out.push_back({a.turn_index, "suggestion-payload",
                           "suggestion annotation without text"});
        }
    }
    return out;
}

Transcript transcript_from_json(const nlohmann::json& doc) {
    using nlohmann::json;
    std::vector<Violation> problems;
    auto fail = [&](std::optional<std::size_t> idx, std::string rule, std::string msg) {
        problems.push_back({idx, std::move(rule), std::move(msg)});
    };

    Transcript t;
    if (!doc.is_object()) throw ValidationError({{std::nullopt, "schema", "document is not an object"}});

    auto optional_string = [&](const char* key) -> std::optional<std::string> {
        auto it = doc.find(key);
        if (it == doc.end() || it->is_null()) return std::nullopt;
        if (!it->is_string()) {
            fail(std::nullopt, "schema", std::string(key) + " must be a string");
            return std::nullopt;
        }
        return it->get<std::string>();
    };
    t.schema_id = optional_string("schema_id");
    t.created_at = optional_string("created_at");
    t.timing_source = optional_string("timing");

    auto turns = doc.find("turns");
    if (turns == doc.end() || !turns->is_array()) {
        throw ValidationError({{std::nullopt, "schema", "missing \"turns\" array"}});
    }

    for (std::size_t pos = 0; pos < turns->size(); ++pos) {
        const json& jt = (*turns)[pos];
        if (!jt.is_object()) {
            fail(pos, "schema", "turn is not an object");
            continue;
        }
        Turn turn;
        turn.index = pos;
        if (auto it = jt.find("index"); it != jt.end()) {
            if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
                fail(pos, "schema", "index must be a non-negative integer");
            } else {
                turn.index = it->get<std::size_t>();
            }
        }
        auto sp = jt.find("speaker");
        if (sp == jt.end() || !sp->is_string()) {
            fail(pos, "schema", "speaker missing or not a string");
        } else if (auto s = parse_speaker(sp->get<std::string>())) {
            turn.speaker = *s;
        } else {
            fail(pos, "speaker-known", "unknown speaker \"" + sp->get<std::string>() + "\"");
        }
        auto tx = jt.find("text");
        if (tx == jt.end() || !tx->is_string()) {
            fail(pos, "schema", "text missing or not a string");
        } else {
            turn.text = tx->get<std::string>();
        }
        for (auto [key, slot] : {std::pair{"start_ms", &turn.start_ms}, std::pair{"end_ms", &turn.end_ms}}) {
            auto it = jt.find(key);
            if (it == jt.end() || it->is_null()) continue;
            if (!it->is_number_integer()) {
                fail(pos, "schema", std::string(key) + " must be an integer");
                continue;
            }
            *slot = it->get<std::int64_t>();
        }
        t.turns.push_back(std::move(turn));
    }

    // Schema problems are reported first; invariant checks only make sense
    // once every turn decoded.
    if (problems.empty()) problems = validate(t);
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return t;
}

Transcript parse_transcript(std::string_view document) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(document.begin(), document.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
    }
    return transcript_from_json(doc);
}

nlohmann::json transcript_to_json(const Transcript& t) {
    nlohmann::json doc = nlohmann::json::object();
    if (t.schema_id) doc["schema_id"] = *t.schema_id;
    if (t.created_at) doc["created_at"] = *t.created_at;
    if (t.timing_source) doc["timing"] = *t.timing_source;
    nlohmann::json turns = nlohmann::json::array();
    for (const Turn& turn : t.turns) {
        nlohmann::json jt = {{"speaker", to_string(turn.speaker)}, {"text", turn.text}};
        if (turn.start_ms) jt["start_ms"] = *turn.start_ms;
        if (turn.end_ms) jt["end_ms"] = *turn.end_ms;
        turns.push_back(std::move(jt));
    }
    doc["turns"] = std::move(turns);
    return doc;
}

std::string serialize_transcript(const Transcript& t) {
    return transcript_to_json(t).dump(2) + "\n";
}

} // namespace sophie
