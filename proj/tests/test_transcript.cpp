#include <doctest.h>

#include <random>

#include "sophie/transcript.hpp"
#include "support.hpp"

using namespace sophie;
using sophie::testing::fixture;

namespace {

std::string random_text(std::mt19937_64& rng) {
    static const std::vector<std::string> words = {"the", "cancer", "has", "spread", "how", "are", "you",
                                                   "don't", "café", "naïve", "\"quoted\"", "tab\there",
                                                   "line\nbreak", "?", "!", "ümlaut", "日本", "\\slash"};
    std::uniform_int_distribution<std::size_t> n(1, 12), w(0, words.size() - 1);
    std::string out;
    for (std::size_t i = 0, k = n(rng); i < k; ++i) out += (i ? " " : "") + words[w(rng)];
    return out;
}

Transcript random_transcript(std::mt19937_64& rng) {
    Transcript t;
    std::uniform_int_distribution<int> coin(0, 1), turns(0, 8), gap(0, 5000);
    if (coin(rng)) t.schema_id = "schema-" + std::to_string(rng() % 100);
    if (coin(rng)) t.created_at = "2024-0" + std::to_string(1 + rng() % 9) + "-15T10:20:30Z";
    if (coin(rng)) t.timing_source = coin(rng) ? "speech" : "typing";
    const bool timed = coin(rng);
    std::int64_t clock = 0;
    for (int i = 0, n = turns(rng); i < n; ++i) {
        Turn turn;
        turn.index = static_cast<std::size_t>(i);
        turn.speaker = coin(rng) ? Speaker::Clinician : Speaker::Patient;
        turn.text = random_text(rng);
        if (timed || coin(rng)) {
            clock += gap(rng);
            turn.start_ms = clock;
            if (coin(rng)) turn.end_ms = clock + gap(rng);
        }
        t.turns.push_back(turn);
    }
    return t;
}

} // namespace

TEST_CASE("minimal document parses to one untimed patient turn") {
    const auto t = parse_transcript(R"({"turns":[{"speaker":"patient","text":"Hello"}]})");
    REQUIRE(t.turns.size() == 1);
    CHECK(t.turns[0].speaker == Speaker::Patient);
    CHECK(t.turns[0].text == "Hello");
    CHECK_FALSE(t.turns[0].start_ms);
    CHECK_FALSE(t.turns[0].end_ms);
    CHECK_FALSE(t.schema_id);
}

TEST_CASE("end before start on turn 2 is a validation error citing turn 2") {
    const char* doc = R"({"turns":[
        {"speaker":"patient","text":"a","start_ms":0,"end_ms":10},
        {"speaker":"clinician","text":"b","start_ms":20,"end_ms":30},
        {"speaker":"patient","text":"c","start_ms":50,"end_ms":40}]})";
    try {
        parse_transcript(doc);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        REQUIRE(e.violations().size() == 1);
        CHECK(e.violations()[0].turn_index == 2u);
        CHECK(e.violations()[0].rule == "end-after-start");
    }
}

TEST_CASE("malformed JSON reports a byte offset") {
    try {
        parse_transcript(R"({"turns": [ {"speaker": "patient", )");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset() > 0);
    }
}

TEST_CASE("speaker aliases and case are accepted on input") {
    const auto t = parse_transcript(R"({"turns":[{"speaker":"SOPHIE","text":"a"},{"speaker":"User","text":"b"}]})");
    CHECK(t.turns[0].speaker == Speaker::Patient);
    CHECK(t.turns[1].speaker == Speaker::Clinician);
    CHECK_THROWS_AS(parse_transcript(R"({"turns":[{"speaker":"nurse","text":"a"}]})"), ValidationError);
}

TEST_CASE("unknown fields are ignored and explicit index must agree") {
    CHECK_NOTHROW(parse_transcript(R"({"x":1,"turns":[{"speaker":"patient","text":"a","mood":"ok","index":0}]})"));
    CHECK_THROWS_AS(parse_transcript(R"({"turns":[{"speaker":"patient","text":"a","index":4}]})"), ValidationError);
}

TEST_CASE("sample excerpt fixture alternates speakers starting with the patient") {
    const auto t = fixture("sample.json");
    REQUIRE(t.turns.size() == 7);
    for (std::size_t i = 0; i < t.turns.size(); ++i) {
        CHECK(t.turns[i].speaker == (i % 2 == 0 ? Speaker::Patient : Speaker::Clinician));
    }
    CHECK(validate(t).empty());
}

TEST_CASE("serialization omits absent optionals") {
    Transcript t;
    t.turns.push_back({0, Speaker::Clinician, "hi", std::nullopt, std::nullopt});
    const std::string s = serialize_transcript(t);
    CHECK(s.find("null") == std::string::npos);
    CHECK(s.find("start_ms") == std::string::npos);
    CHECK(s.find("schema_id") == std::string::npos);
    CHECK(s.back() == '\n');
}

TEST_CASE("sample excerpt round-trips") {
    const auto t = fixture("sample.json");
    CHECK(parse_transcript(serialize_transcript(t)) == t);
    const auto timed = fixture("sample_timed.json");
    CHECK(parse_transcript(serialize_transcript(timed)) == timed);
}

TEST_CASE("1000 random valid transcripts round-trip exactly") {
    std::mt19937_64 rng(20240601);
    for (int i = 0; i < 1000; ++i) {
        const Transcript t = random_transcript(rng);
        REQUIRE(validate(t).empty());
        const std::string s = serialize_transcript(t);
        const Transcript back = parse_transcript(s);
        REQUIRE(back == t);
        REQUIRE(serialize_transcript(back) == s);
    }
}

TEST_CASE("validate names index and rule") {
    Transcript t;
    for (std::size_t i = 0; i < 5; ++i) t.turns.push_back({i, Speaker::Patient, "x", std::nullopt, std::nullopt});
    CHECK(validate(t).empty());

    SUBCASE("duplicate index 3") {
        t.turns[4].index = 3;  // indices 0 1 2 3 3
        const auto vs = validate(t);
        REQUIRE(vs.size() == 1);
        CHECK(vs[0].turn_index == 3u);
        CHECK(vs[0].rule == "index-contiguous");
        CHECK(vs[0].message.find("duplicate index 3") != std::string::npos);
    }
    SUBCASE("out-of-order start_ms names the pair") {
        t.turns[1].start_ms = 500;
        t.turns[2].start_ms = 100;
        const auto vs = validate(t);
        REQUIRE(vs.size() == 1);
        CHECK(vs[0].rule == "start-monotonic");
        CHECK(vs[0].message.find("1 and 2") != std::string::npos);
    }
    SUBCASE("blank text") {
        t.turns[0].text = "  \t ";
        const auto vs = validate(t);
        REQUIRE(vs.size() == 1);
        CHECK(vs[0].rule == "text-non-empty");
        CHECK(vs[0].turn_index == 0u);
    }
    SUBCASE("bad created_at") {
        t.created_at = "yesterday";
        REQUIRE(validate(t).size() == 1);
        CHECK_FALSE(validate(t)[0].turn_index);
    }
}

TEST_CASE("parse never returns a transcript that fails validate") {
    std::mt19937_64 rng(7);
    const std::vector<std::string> pieces = {R"({"speaker":"patient","text":"a"})",
                                             R"({"speaker":"clinician","text":" "})",
                                             R"({"speaker":"patient","text":"b","start_ms":5,"end_ms":2})",
                                             R"({"speaker":"patient","text":"c","start_ms":9})",
                                             R"({"speaker":"clinician","text":"d","start_ms":1,"end_ms":3})",
                                             R"({"speaker":"clinician","text":"e","index":1})"};
    for (int i = 0; i < 500; ++i) {
        std::string doc = R"({"turns":[)";
        const auto n = rng() % 5;
        for (std::size_t k = 0; k < n; ++k) doc += (k ? "," : "") + pieces[rng() % pieces.size()];
        doc += "]}";
        try {
            const auto t = parse_transcript(doc);
            CHECK(validate(t).empty());
        } catch (const ValidationError& e) {
            CHECK_FALSE(e.violations().empty());
        }
    }
}

TEST_CASE("lecture and question annotations never attach to patient turns") {
    const auto t = fixture("sample.json");
    std::vector<Annotation> bad = {{0, AnnotationKind::Question, std::nullopt},
                                   {2, AnnotationKind::Lecture, std::nullopt},
                                   {1, AnnotationKind::SuggestEmpathy, std::nullopt},
                                   {99, AnnotationKind::Question, std::nullopt}};
    const auto vs = validate_annotations(t, bad);
    REQUIRE(vs.size() == 4);
    CHECK(vs[0].rule == "annotation-clinician-only");
    CHECK(vs[1].rule == "annotation-clinician-only");
    CHECK(vs[2].rule == "suggestion-payload");
    CHECK(vs[3].rule == "annotation-turn-exists");
    std::vector<Annotation> good = {{1, AnnotationKind::Question, std::nullopt},
                                    {3, AnnotationKind::SuggestEmpathy, "It sounds hard."}};
    CHECK(validate_annotations(t, good).empty());
}
