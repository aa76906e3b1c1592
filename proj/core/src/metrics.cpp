#include "sophie/metrics.hpp"

#include <algorithm>
#include <array>

#include "sophie/errors.hpp"

namespace sophie {

namespace {

constexpr std::array<std::string_view, 7> kWhLeads = {"what", "how", "why", "when", "where", "who", "which"};
constexpr std::array<std::string_view, 15> kAuxLeads = {"do",   "does",  "did",    "is",   "are",
                                                        "was",  "were",  "can",    "could", "will",
                                                        "would", "should", "have", "has",  "had"};

bool contains(auto const& list, std::string_view word) {
    return std::find(list.begin(), list.end(), word) != list.end();
}

// "what's", "how's" and friends still lead with a wh-word.
bool wh_lead(std::string_view first) {
    if (contains(kWhLeads, first)) return true;
    const auto apos = first.find('\'');
    return apos != std::string_view::npos && contains(kWhLeads, first.substr(0, apos));
}

std::optional<std::string> first_output(const RuleTree* tree, const std::vector<std::string>& inputs) {
    if (!tree) return std::nullopt;
    for (const auto& in : inputs) {
        const auto tokens = tokenize(in);
        if (tokens.empty()) continue;
        if (auto r = transduce(*tree, tokens); r && !r->output.empty()) return r->output;
    }
    return std::nullopt;
}

constexpr std::string_view kFallbackEmpathy =
    "It sounds like this is really hard for you. I'm here with you.";
constexpr std::string_view kFallbackOpen = "What questions do you have for me so far?";

} // namespace

std::string_view to_string(QuestionKind k) noexcept {
    return k == QuestionKind::Open ? "open" : "closed";
}

std::vector<DetectedQuestion> detect_questions(std::string_view text) {
    std::vector<DetectedQuestion> out;
    for (auto& sentence : split_sentences(text)) {
        const auto tokens = tokenize(sentence);
        if (tokens.empty()) continue;
        const bool ends_with_mark = tokens.back() == kQuestionToken;
        const std::string_view first = tokens.front();
        const std::string_view second = tokens.size() > 1 ? std::string_view(tokens[1]) : std::string_view();
        const bool open_lead = wh_lead(first) || (first == "tell" && second == "me") || first == "describe";
        if (!ends_with_mark && !open_lead) continue;
        // Auxiliary leads ("do", "is", "could", ...) and unclassifiable
        // question marks both count as closed.
        out.push_back({std::move(sentence), open_lead ? QuestionKind::Open : QuestionKind::Closed});
    }
    return out;
}

std::vector<DetectedQuestion> detect_questions(const Turn& turn) {
    return detect_questions(turn.text);
}

TurnTaking turn_taking(const Transcript& t, const MetricsConfig& cfg) {
    TurnTaking tt;
    tt.timed = t.fully_timed();
    tt.lecture.assign(t.turns.size(), false);
    for (std::size_t i = 0; i < t.turns.size(); ++i) {
        const Turn& turn = t.turns[i];
        const auto words = words_only(tokenize(turn.text)).size();
        const auto duration = turn.duration_ms();
        const double amount = tt.timed ? static_cast<double>(*duration) : static_cast<double>(words);
        (turn.speaker == Speaker::Clinician ? tt.clinician_total : tt.patient_total) += amount;
        if (turn.speaker != Speaker::Clinician) continue;
        const bool lecture = duration ? *duration > cfg.lecture_ms : words > cfg.lecture_words;
        if (lecture) {
            tt.lecture[i] = true;
            tt.lecture_turn_indices.push_back(turn.index);
        }
    }
    return tt;
}

Metric<double> speaking_rate(const Transcript& t) {
    std::size_t words = 0;
    std::int64_t duration = 0;
    bool any = false;
    for (const auto& turn : t.turns) {
        if (turn.speaker != Speaker::Clinician) continue;
        any = true;
        if (!turn.timed()) return Metric<double>::unavailable(std::string(kReasonMissingTiming));
        words += words_only(tokenize(turn.text)).size();
        duration += *turn.duration_ms();
    }
    if (!any) return Metric<double>::unavailable(std::string(kReasonNoClinicianSpeech));
    if (duration <= 0) return Metric<double>::unavailable(std::string(kReasonZeroDuration));
    return static_cast<double>(words) / (static_cast<double>(duration) / 60000.0);
}

ContentRules ContentRules::from(const RuleBase& rules) {
    return {rules.find("emotion-expressed"), rules.find("suggest-empathy"), rules.find("suggest-open")};
}

std::vector<Annotation> generate_suggestions(const Transcript& t, const RuleBase& rules,
                                             const Lexicons& lexicons, const MetricsConfig& cfg) {
    const auto trees = ContentRules::from(rules);
    const auto tt = turn_taking(t, cfg);
    std::vector<Annotation> out;
    for (std::size_t i = 0; i < t.turns.size(); ++i) {
        const Turn& turn = t.turns[i];
        if (turn.speaker != Speaker::Clinician) continue;

        if (i > 0 && t.turns[i - 1].speaker == Speaker::Patient && trees.emotion_expressed) {
            const auto emotion = extract_gists(*trees.emotion_expressed, t.turns[i - 1].text);
            if (!emotion.empty()) {
                const auto tokens = tokenize(turn.text);
                const bool acknowledged = std::any_of(tokens.begin(), tokens.end(), [&](const std::string& w) {
                    return lexicons.empathy.contains(w);
                });
                if (!acknowledged) {
                    auto text = first_output(trees.suggest_empathy, emotion);
                    out.push_back({turn.index, AnnotationKind::SuggestEmpathy,
                                   text.value_or(std::string(kFallbackEmpathy))});
                }
            }
        }

        if (tt.lecture[i]) {
            const auto qs = detect_questions(turn);
            const bool asked_open = std::any_of(qs.begin(), qs.end(), [](const DetectedQuestion& q) {
                return q.kind == QuestionKind::Open;
            });
            if (!asked_open) {
                auto text = first_output(trees.suggest_open, split_sentences(turn.text));
                out.push_back({turn.index, AnnotationKind::SuggestOpenQuestion,
                               text.value_or(std::string(kFallbackOpen))});
            }
        }
    }
    return out;
}

FeedbackReport compute_report(const Transcript& t, const Lexicons& lexicons, const RuleBase& rules,
                              const MetricsConfig& cfg) {
    FeedbackReport r;
    const std::string no_speech(kReasonNoClinicianSpeech);
    const auto tt = turn_taking(t, cfg);

    std::vector<std::string> clinician_texts;
    std::vector<std::string> clinician_tokens;
    int asked = 0;
    int open = 0;
    for (std::size_t i = 0; i < t.turns.size(); ++i) {
        const Turn& turn = t.turns[i];
        TurnMetrics tm;
        tm.turn_index = turn.index;
        tm.speaker = turn.speaker;
        tm.text = turn.text;
        const auto tokens = tokenize(turn.text);
        tm.word_count = words_only(tokens).size();
        tm.duration_ms = turn.duration_ms();
        tm.is_lecture = tt.lecture[i];
        if (turn.speaker == Speaker::Clinician) {
            tm.questions = detect_questions(turn);
            for (const auto& q : tm.questions) {
                ++asked;
                if (q.kind == QuestionKind::Open) ++open;
            }
            clinician_texts.push_back(turn.text);
            clinician_tokens.insert(clinician_tokens.end(), tokens.begin(), tokens.end());
            if (!tm.questions.empty()) r.annotations.push_back({turn.index, AnnotationKind::Question, std::nullopt});
            if (tm.is_lecture) r.annotations.push_back({turn.index, AnnotationKind::Lecture, std::nullopt});
        }
        r.per_turn.push_back(std::move(tm));
    }
    const bool has_clinician = !clinician_texts.empty();

    auto& em = r.empower;
    if (has_clinician) {
        em.questions_asked = asked;
        em.open_questions = open;
        em.closed_questions = asked - open;
    } else {
        em.questions_asked = Metric<int>::unavailable(no_speech);
        em.open_questions = Metric<int>::unavailable(no_speech);
        em.closed_questions = Metric<int>::unavailable(no_speech);
    }
    em.turn_taking = TurnTotals{tt.timed ? "ms" : "words", tt.clinician_total, tt.patient_total};
    em.lecture_turn_indices = tt.lecture_turn_indices;

    auto& ex = r.explicit_;
    try {
        ex.hedge = hedge_metrics(clinician_tokens, lexicons.hedges);
    } catch (const UndefinedMetric&) {
        ex.hedge = Metric<HedgeMetrics>::unavailable(no_speech);
    }
    ex.speaking_rate_wpm = speaking_rate(t);
    if (t.timing_source) ex.speaking_rate_timing = *t.timing_source;
    try {
        ex.reading_level = reading_grade(clinician_texts);
    } catch (const UndefinedMetric&) {
        ex.reading_level = Metric<ReadingGrade>::unavailable(no_speech);
    }

    auto& ez = r.empathize;
    try {
        ez.pronoun_percentage = pronoun_metrics(clinician_tokens, lexicons.pronouns);
    } catch (const UndefinedMetric&) {
        ez.pronoun_percentage = Metric<double>::unavailable(no_speech);
    }
    const auto empathy = empathy_metrics(clinician_tokens, lexicons.empathy);
    if (empathy.average) {
        ez.empathy_average = *empathy.average;
    } else {
        ez.empathy_average = Metric<double>::unavailable(
            words_only(clinician_tokens).empty() ? no_speech : std::string("no empathy-lexicon words"));
    }
    ez.empathy_cloud = empathy.cloud;

    auto trajectory_for = [&](Speaker who) -> Metric<SentimentTrajectory> {
        try {
            return sentiment_trajectory(t, who, lexicons.sentiment, cfg.trajectory_bins());
        } catch (const UndefinedMetric& e) {
            return Metric<SentimentTrajectory>::unavailable(e.what());
        }
    };
    ez.trajectory.clinician = trajectory_for(Speaker::Clinician);
    ez.trajectory.patient = trajectory_for(Speaker::Patient);
    ez.trajectory.ideal = cfg.ideal;
    if (ez.trajectory.clinician.available()) {
        ez.trajectory.distance = trajectory_distance(ez.trajectory.clinician.value(), cfg.ideal);
    } else {
        ez.trajectory.distance = Metric<double>::unavailable(ez.trajectory.clinician.reason());
    }

    auto suggestions = generate_suggestions(t, rules, lexicons, cfg);
    r.annotations.insert(r.annotations.end(), suggestions.begin(), suggestions.end());
    std::stable_sort(r.annotations.begin(), r.annotations.end(), [](const Annotation& a, const Annotation& b) {
        if (a.turn_index != b.turn_index) return a.turn_index < b.turn_index;
        return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    });
    return r;
}

} // namespace sophie
