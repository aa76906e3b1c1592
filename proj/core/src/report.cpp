#include <cstdio>
#include <sstream>

#include "sophie/metrics.hpp"

namespace sophie {

namespace {

using nlohmann::json;

json unavailable(const std::string& reason) { return {{"unavailable", reason}}; }

template <typename T, typename F>
json metric_json(const Metric<T>& m, F&& to_json) {
    return m.available() ? to_json(m.value()) : unavailable(m.reason());
}

json cloud_json(const WordCloud& c) {
    json out = json::array();
    for (const auto& [word, count] : c.entries) out.push_back({{"word", word}, {"count", count}});
    return out;
}

json bins_json(const SentimentTrajectory& t) { return t.bins; }

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string cloud_text(const WordCloud& c) {
    if (c.entries.empty()) return "(none)";
    std::string out;
    for (const auto& [word, count] : c.entries) {
        if (!out.empty()) out += ", ";
        out += word + " x" + std::to_string(count);
    }
    return out;
}

std::string bins_text(const SentimentTrajectory& t) {
    std::string out = "[";
    for (std::size_t i = 0; i < t.bins.size(); ++i) {
        if (i) out += " ";
        out += fixed(t.bins[i], 2);
    }
    return out + "]";
}

template <typename T, typename F>
std::string metric_text(const Metric<T>& m, F&& fmt) {
    return m.available() ? fmt(m.value()) : "unavailable (" + m.reason() + ")";
}

const json* find_path(const json& doc, std::initializer_list<const char*> path) {
    const json* cur = &doc;
    for (const char* key : path) {
        if (!cur->is_object()) return nullptr;
        auto it = cur->find(key);
        if (it == cur->end()) return nullptr;
        cur = &*it;
    }
    return cur;
}

} // namespace

json report_to_json(const FeedbackReport& r) {
    const auto as_int = [](int v) { return json(v); };
    const auto as_num = [](double v) { return json(v); };

    json empower = {
        {"questions_asked", metric_json(r.empower.questions_asked, as_int)},
        {"open_questions", metric_json(r.empower.open_questions, as_int)},
        {"closed_questions", metric_json(r.empower.closed_questions, as_int)},
        {"turn_taking", metric_json(r.empower.turn_taking,
                                    [](const TurnTotals& t) {
                                        return json{{"unit", t.unit},
                                                    {"clinician_total", t.clinician},
                                                    {"patient_total", t.patient}};
                                    })},
        {"lecture_turn_indices", r.empower.lecture_turn_indices},
    };

    json explicit_ = {
        {"hedge", metric_json(r.explicit_.hedge,
                              [](const HedgeMetrics& h) {
                                  return json{{"percentage", h.percentage}, {"cloud", cloud_json(h.cloud)}};
                              })},
        {"speaking_rate_wpm", metric_json(r.explicit_.speaking_rate_wpm, as_num)},
        {"reading_level", metric_json(r.explicit_.reading_level,
                                      [](const ReadingGrade& g) {
                                          return json{{"raw", g.raw}, {"display_grade", g.display_grade}};
                                      })},
    };
    if (r.explicit_.speaking_rate_timing) explicit_["speaking_rate_timing"] = *r.explicit_.speaking_rate_timing;

    const auto& tr = r.empathize.trajectory;
    json empathize = {
        {"pronoun_percentage", metric_json(r.empathize.pronoun_percentage, as_num)},
        {"empathy",
         {{"average", metric_json(r.empathize.empathy_average, as_num)},
          {"cloud", cloud_json(r.empathize.empathy_cloud)}}},
        {"sentiment_trajectory",
         {{"bin_count", tr.ideal.bin_count()},
          {"clinician", metric_json(tr.clinician, bins_json)},
          {"patient", metric_json(tr.patient, bins_json)},
          {"ideal", bins_json(tr.ideal)},
          {"distance", metric_json(tr.distance, as_num)}}},
    };

    json annotations = json::array();
    for (const auto& a : r.annotations) {
        json ja = {{"turn_index", a.turn_index}, {"kind", to_string(a.kind)}};
        if (a.payload) ja["payload"] = *a.payload;
        annotations.push_back(std::move(ja));
    }

    json per_turn = json::array();
    for (const auto& tm : r.per_turn) {
        json questions = json::array();
        for (const auto& q : tm.questions) questions.push_back({{"sentence", q.sentence}, {"kind", to_string(q.kind)}});
        json jt = {{"turn_index", tm.turn_index},
                   {"speaker", to_string(tm.speaker)},
                   {"text", tm.text},
                   {"word_count", tm.word_count},
                   {"questions", std::move(questions)},
                   {"is_lecture", tm.is_lecture}};
        if (tm.duration_ms) jt["duration_ms"] = *tm.duration_ms;
        per_turn.push_back(std::move(jt));
    }

    return {{"report_version", kReportVersion},
            {"empower", std::move(empower)},
            {"explicit", std::move(explicit_)},
            {"empathize", std::move(empathize)},
            {"annotations", std::move(annotations)},
            {"per_turn", std::move(per_turn)}};
}

std::string serialize_report(const FeedbackReport& r) { return report_to_json(r).dump(2) + "\n"; }

std::vector<std::string> check_report_json(const json& doc) {
    std::vector<std::string> problems;
    if (!doc.is_object()) return {"report is not an object"};
    const auto* version = find_path(doc, {"report_version"});
    if (!version || !version->is_number_integer() || version->get<int>() != kReportVersion) {
        problems.push_back("report_version must be " + std::to_string(kReportVersion));
    }
    const std::vector<std::pair<std::string, std::initializer_list<const char*>>> slots = {
        {"empower.questions_asked", {"empower", "questions_asked"}},
        {"empower.open_questions", {"empower", "open_questions"}},
        {"empower.turn_taking", {"empower", "turn_taking"}},
        {"explicit.hedge", {"explicit", "hedge"}},
        {"explicit.speaking_rate_wpm", {"explicit", "speaking_rate_wpm"}},
        {"explicit.reading_level", {"explicit", "reading_level"}},
        {"empathize.pronoun_percentage", {"empathize", "pronoun_percentage"}},
        {"empathize.empathy", {"empathize", "empathy"}},
        {"empathize.sentiment_trajectory", {"empathize", "sentiment_trajectory"}},
    };
    for (const auto& [name, path] : slots) {
        const json* slot = find_path(doc, path);
        if (!slot || slot->is_null()) problems.push_back("missing metric slot " + name);
    }
    if (const auto* l = find_path(doc, {"empower", "lecture_turn_indices"}); !l || !l->is_array()) {
        problems.push_back("empower.lecture_turn_indices must be an array");
    }
    for (const char* key : {"annotations", "per_turn"}) {
        if (const auto* a = find_path(doc, {key}); !a || !a->is_array()) {
            problems.push_back(std::string(key) + " must be an array");
        }
    }
    return problems;
}

std::string render_text_report(const FeedbackReport& r) {
    std::ostringstream os;
    os << "== Transcript ==\n";
    for (const auto& tm : r.per_turn) {
        os << "[" << tm.turn_index << "] " << (tm.speaker == Speaker::Clinician ? "You" : "Patient");
        for (const auto& a : r.annotations) {
            if (a.turn_index != tm.turn_index) continue;
            if (a.kind == AnnotationKind::Question) os << " [question]";
            if (a.kind == AnnotationKind::Lecture) os << " [lecture]";
        }
        os << ": " << tm.text << "\n";
        for (const auto& a : r.annotations) {
            if (a.turn_index != tm.turn_index || !a.payload) continue;
            os << "    suggestion ("
               << (a.kind == AnnotationKind::SuggestEmpathy ? "empathy" : "open question")
               << "): " << *a.payload << "\n";
        }
    }

    const auto count = [](int v) { return std::to_string(v); };
    os << "\n== Empower ==\n";
    os << "Questions asked: " << metric_text(r.empower.questions_asked, count) << "\n";
    os << "Open-ended questions: " << metric_text(r.empower.open_questions, count) << "\n";
    os << "Turn-taking: "
       << metric_text(r.empower.turn_taking,
                      [](const TurnTotals& t) {
                          return "you " + fixed(t.clinician, 0) + " " + t.unit + ", patient " +
                                 fixed(t.patient, 0) + " " + t.unit;
                      })
       << "\n";
    os << "Lecture turns: ";
    if (r.empower.lecture_turn_indices.empty()) os << "none";
    for (std::size_t i = 0; i < r.empower.lecture_turn_indices.size(); ++i) {
        os << (i ? ", " : "") << r.empower.lecture_turn_indices[i];
    }
    os << "\n";

    os << "\n== Be Explicit ==\n";
    os << "Hedge words: "
       << metric_text(r.explicit_.hedge,
                      [](const HedgeMetrics& h) { return fixed(h.percentage, 1) + "% (" + cloud_text(h.cloud) + ")"; })
       << "\n";
    os << "Speaking rate: "
       << metric_text(r.explicit_.speaking_rate_wpm, [](double v) { return fixed(v, 1) + " words/min"; });
    if (r.explicit_.speaking_rate_timing && r.explicit_.speaking_rate_wpm.available()) {
        os << " (" << *r.explicit_.speaking_rate_timing << " time)";
    }
    os << "\n";
    os << "Reading level: "
       << metric_text(r.explicit_.reading_level,
                      [](const ReadingGrade& g) {
                          return "grade " + std::to_string(g.display_grade) + " (raw " + fixed(g.raw, 2) + ")";
                      })
       << "\n";

    const auto& tr = r.empathize.trajectory;
    os << "\n== Empathize ==\n";
    os << "Personal pronouns: "
       << metric_text(r.empathize.pronoun_percentage, [](double v) { return fixed(v, 1) + "%"; }) << "\n";
    os << "Empathy score (1-7): "
       << metric_text(r.empathize.empathy_average, [](double v) { return fixed(v, 2); }) << " ("
       << cloud_text(r.empathize.empathy_cloud) << ")\n";
    os << "Sentiment trajectory:\n";
    os << "  you:     " << metric_text(tr.clinician, bins_text) << "\n";
    os << "  patient: " << metric_text(tr.patient, bins_text) << "\n";
    os << "  ideal:   " << bins_text(tr.ideal) << "\n";
    os << "  distance from ideal: " << metric_text(tr.distance, [](double v) { return fixed(v, 3); }) << "\n";
    return os.str();
}

} // namespace sophie
