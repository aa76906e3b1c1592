#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sophie/lexicon.hpp"
#include "sophie/pattern.hpp"
#include "sophie/text.hpp"
#include "sophie/transcript.hpp"

namespace sophie {

enum class QuestionKind { Open, Closed };

std::string_view to_string(QuestionKind k) noexcept;

struct DetectedQuestion {
    std::string sentence;
    QuestionKind kind;
    bool operator==(const DetectedQuestion&) const = default;
};

/// A sentence is a question when it ends in "?" or opens with an
/// interrogative lead (what, how, why, when, where, who, which, "tell me",
/// describe). Wh-leads, "tell me" and "describe" are Open; everything else
/// that qualifies is Closed.
std::vector<DetectedQuestion> detect_questions(std::string_view text);
std::vector<DetectedQuestion> detect_questions(const Turn& turn);

struct MetricsConfig {
    std::int64_t lecture_ms = 30000;
    std::size_t lecture_words = 75;
    SentimentTrajectory ideal = default_ideal_trajectory();

    std::size_t trajectory_bins() const noexcept { return ideal.bin_count(); }
};

struct TurnTaking {
    bool timed = false;  // totals in milliseconds when true, words otherwise
    double clinician_total = 0;
    double patient_total = 0;
    std::vector<bool> lecture;  // per turn
    std::vector<std::size_t> lecture_turn_indices;
};

TurnTaking turn_taking(const Transcript& t, const MetricsConfig& cfg = {});

// Holds a value or the reason it could not be computed.
template <typename T>
class Metric {
public:
    Metric(T value) : value_(std::move(value)) {}  // NOLINT(google-explicit-constructor)
    static Metric unavailable(std::string reason) {
        Metric m;
        m.reason_ = std::move(reason);
        return m;
    }

    bool available() const noexcept { return value_.has_value(); }
    const T& value() const { return value_.value(); }
    const T* operator->() const { return &value_.value(); }
    const std::string& reason() const noexcept { return reason_; }

    bool operator==(const Metric&) const = default;

private:
    Metric() = default;
    std::optional<T> value_;
    std::string reason_;
};

inline constexpr std::string_view kReasonNoClinicianSpeech = "no clinician speech";
inline constexpr std::string_view kReasonMissingTiming = "missing timing";
inline constexpr std::string_view kReasonZeroDuration = "zero duration";

Metric<double> speaking_rate(const Transcript& t);

struct ContentRules {
    const RuleTree* emotion_expressed = nullptr;
    const RuleTree* suggest_empathy = nullptr;
    const RuleTree* suggest_open = nullptr;

    // Looks up the trees by their fixed ids; missing trees stay null.
    static ContentRules from(const RuleBase& rules);
};

/// Suggestion annotations for clinician turns: SuggestEmpathy when the
/// preceding patient turn expresses emotion and the clinician used no
/// empathy-lexicon word; SuggestOpenQuestion when a lecture turn asks no open
/// question. At most one of each kind per turn.
std::vector<Annotation> generate_suggestions(const Transcript& t, const RuleBase& rules,
                                             const Lexicons& lexicons, const MetricsConfig& cfg = {});

struct TurnMetrics {
    std::size_t turn_index = 0;
    Speaker speaker = Speaker::Patient;
    std::string text;
    std::size_t word_count = 0;
    std::optional<std::int64_t> duration_ms;
    std::vector<DetectedQuestion> questions;
    bool is_lecture = false;
};

struct TurnTotals {
    std::string unit;  // "ms" or "words"
    double clinician = 0;
    double patient = 0;
};

struct EmpowerSection {
    Metric<int> questions_asked = Metric<int>::unavailable("");
    Metric<int> open_questions = Metric<int>::unavailable("");
    Metric<int> closed_questions = Metric<int>::unavailable("");
    Metric<TurnTotals> turn_taking = Metric<TurnTotals>::unavailable("");
    std::vector<std::size_t> lecture_turn_indices;
};

struct ExplicitSection {
    Metric<HedgeMetrics> hedge = Metric<HedgeMetrics>::unavailable("");
    Metric<double> speaking_rate_wpm = Metric<double>::unavailable("");
    std::optional<std::string> speaking_rate_timing;
    Metric<ReadingGrade> reading_level = Metric<ReadingGrade>::unavailable("");
};

struct TrajectorySet {
    Metric<SentimentTrajectory> clinician = Metric<SentimentTrajectory>::unavailable("");
    Metric<SentimentTrajectory> patient = Metric<SentimentTrajectory>::unavailable("");
    SentimentTrajectory ideal;
    Metric<double> distance = Metric<double>::unavailable("");
};

struct EmpathizeSection {
    Metric<double> pronoun_percentage = Metric<double>::unavailable("");
    Metric<double> empathy_average = Metric<double>::unavailable("");
    WordCloud empathy_cloud;
    TrajectorySet trajectory;
};

inline constexpr int kReportVersion = 1;

struct FeedbackReport {
    EmpowerSection empower;
    ExplicitSection explicit_;
    EmpathizeSection empathize;
    std::vector<Annotation> annotations;
    std::vector<TurnMetrics> per_turn;
};

/// Computes every feedback metric. Skill metrics cover clinician speech only;
/// trajectories are reported for both speakers. Metrics that cannot be
/// computed are marked unavailable and the report is still complete.
FeedbackReport compute_report(const Transcript& t, const Lexicons& lexicons, const RuleBase& rules,
                              const MetricsConfig& cfg = {});

nlohmann::json report_to_json(const FeedbackReport& r);
// Canonical bytes of a report; equal reports serialize identically.
std::string serialize_report(const FeedbackReport& r);

// Structural check of a report document against the versioned JSON layout.
std::vector<std::string> check_report_json(const nlohmann::json& doc);

// Plain-text rendering with Transcript, Empower, be Explicit and Empathize
// sections.
std::string render_text_report(const FeedbackReport& r);

} // namespace sophie
