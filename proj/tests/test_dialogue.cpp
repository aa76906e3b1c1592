#include <doctest.h>

#include <random>
#include <set>

#include "sophie/dialogue.hpp"
#include "sophie/errors.hpp"
#include "support.hpp"

using namespace sophie;
using sophie::testing::bundled;
using sophie::testing::excerpt_clinician_lines;

namespace {

DialogueManager bundled_manager() { return DialogueManager(bundled().schemas, bundled().rules); }

struct Toy {
    std::shared_ptr<RuleBase> rules = std::make_shared<RuleBase>();
    std::shared_ptr<SchemaLibrary> schemas = std::make_shared<SchemaLibrary>();

    Toy& rule(const std::string& text) {
        rules->add(parse_rules(text));
        return *this;
    }
    Toy& schema(const std::string& json) {
        schemas->add(load_schema(json, *rules));
        return *this;
    }
    DialogueManager manager() const {
        schemas->check_references();
        return DialogueManager(schemas, rules);
    }
};

std::vector<std::string> gists_of(const SessionState& st, Speaker who) {
    std::vector<std::string> out;
    for (const auto& g : st.gist_history) {
        if (g.speaker == who) out.push_back(g.gist);
    }
    return out;
}

} // namespace

TEST_CASE("minimal schema loads") {
    Toy toy;
    toy.rule("tree: any\n* => gist: something\n");
    toy.schema(R"({"id":"m","description":"d","default_reaction":"hm",
        "episodes":[{"say":{"text":"Hi.","gist":"hello"}},
                    {"expect_user":{"interp_tree":"any","reactions":[{"gist_pattern":"*","action":{"say":{"text":"Ok.","gist":"ok"}}}]}}]})");
    CHECK(toy.schemas->at("m").episodes.size() == 2);
}

TEST_CASE("dangling references are load errors naming the reference") {
    RuleBase rules;
    try {
        load_schema(R"({"id":"x","default_reaction":"hm","episodes":[{"expect_user":{"interp_tree":"nope","reactions":[{"gist_pattern":"*","action":"continue"}]}}]})",
                    rules);
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(std::string(e.what()).find("nope") != std::string::npos);
    }
    SchemaLibrary lib;
    lib.add(load_schema(R"({"id":"x","default_reaction":"hm","episodes":[{"invoke":{"schema":"ghost"}}]})", rules));
    try {
        lib.check_references();
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }
    CHECK_THROWS_AS(load_schema("{not json", rules), LoadError);
    CHECK_THROWS_AS(load_schema(R"({"id":"x","default_reaction":"hm","episodes":[]})", rules), LoadError);
}

TEST_CASE("bundled lung-cancer-prognosis schema") {
    const auto& s = bundled().schemas->at("lung-cancer-prognosis");
    CHECK(s.episodes.size() >= 6);
    CHECK_FALSE(s.description.empty());
    for (const char* sub : {"medical-concerns", "family-plan", "emotional-support"}) CHECK(bundled().schemas->find(sub));
    CHECK_NOTHROW(bundled().schemas->check_references());
}

TEST_CASE("start_session opens with the scan-results question") {
    const auto dm = bundled_manager();
    const auto start = dm.start_session("lung-cancer-prognosis");
    REQUIRE(start.opening.size() == 1);
    CHECK(start.opening[0].speaker == Speaker::Patient);
    CHECK(start.opening[0].text.find("Could you explain what they mean?") != std::string::npos);
    CHECK(start.state.status == SessionStatus::Active);
    CHECK(gists_of(start.state, Speaker::Patient) == std::vector<std::string>{"request-test-results-explanation"});
    CHECK_THROWS_AS(dm.start_session("no-such-schema"), UsageError);

    const auto other = dm.start_session("lung-cancer-prognosis");
    CHECK(other.state.session_id != start.state.session_id);
}

TEST_CASE("pure monologue completes at start") {
    Toy toy;
    toy.schema(R"({"id":"mono","default_reaction":"hm","closing":{"text":"Bye.","gist":"closing"},
        "episodes":[{"say":{"text":"One.","gist":"one"}},{"say":{"text":"Two.","gist":"two"}}]})");
    const auto start = toy.manager().start_session("mono");
    CHECK(start.state.status == SessionStatus::Completed);
    REQUIRE(start.opening.size() == 1);
    CHECK(start.opening[0].text == "One. Two. Bye.");
    CHECK(gists_of(start.state, Speaker::Patient) == std::vector<std::string>{"one", "two", "closing"});
    CHECK(toy.schemas->at("mono").is_monologue());
}

TEST_CASE("bad-news turn draws the reaction and the prognosis question") {
    const auto dm = bundled_manager();
    auto st = dm.start_session("lung-cancer-prognosis").state;
    const auto reply = dm.process_user_turn(st, excerpt_clinician_lines()[0]);
    REQUIRE(reply.size() == 1);
    CHECK(reply[0].text.rfind("Those are not the words I wanted to hear.", 0) == 0);
    CHECK(reply[0].text.find("What does it all mean for me?") != std::string::npos);
    CHECK(gists_of(st, Speaker::Patient) ==
          std::vector<std::string>{"request-test-results-explanation", "bad-news-received", "request-prognosis-meaning"});
    CHECK(gists_of(st, Speaker::Clinician) == std::vector<std::string>{"the news is bad", "the cancer has spread"});
}

TEST_CASE("gibberish clarifies once, then defaults and advances") {
    const auto dm = bundled_manager();
    auto st = dm.start_session("lung-cancer-prognosis").state;
    const auto episode_before = st.schema_stack.back().episode;

    const auto first = dm.process_user_turn(st, "qwerty asdf");
    REQUIRE(first.size() == 1);
    CHECK(first[0].text == bundled().schemas->at("lung-cancer-prognosis").clarify_prompt);
    CHECK(st.schema_stack.back().episode == episode_before);
    CHECK(st.gist_history.back().gist == kClarifyGist);

    const auto second = dm.process_user_turn(st, "qwerty asdf");
    REQUIRE(second.size() == 1);
    CHECK(second[0].text.rfind(bundled().schemas->at("lung-cancer-prognosis").default_reaction, 0) == 0);
    CHECK(st.schema_stack.back().episode > episode_before);
}

TEST_CASE("a clarify action does not advance") {
    const auto dm = bundled_manager();
    auto st = dm.start_session("lung-cancer-prognosis").state;
    const auto reply = dm.process_user_turn(st, "Let me go over the scan with you.");
    REQUIRE(reply.size() == 1);
    CHECK(st.schema_stack.back().episode == 1);
}

TEST_CASE("processing a completed session is a state error") {
    const auto dm = bundled_manager();
    auto st = dm.start_session("lung-cancer-prognosis").state;
    dm.end_session(st);
    CHECK_THROWS_AS(dm.process_user_turn(st, "hello"), StateError);
    auto fresh = dm.start_session("lung-cancer-prognosis").state;
    CHECK_THROWS_AS(dm.process_user_turn(fresh, "   "), UsageError);
    CHECK_THROWS_AS(dm.process_user_turn(fresh, "hi", {500, 100}), UsageError);
}

TEST_CASE("end_session variants") {
    const auto dm = bundled_manager();
    SUBCASE("immediately after start") {
        auto st = dm.start_session("lung-cancer-prognosis").state;
        const auto t = dm.end_session(st);
        CHECK(t.turns.size() == 1);
        CHECK(st.status == SessionStatus::Completed);
        CHECK(validate(t).empty());
    }
    SUBCASE("after three exchanges") {
        auto st = dm.start_session("lung-cancer-prognosis").state;
        for (const auto& line : excerpt_clinician_lines()) dm.process_user_turn(st, line);
        const auto t = dm.end_session(st);
        CHECK(t.turns.size() >= 6);
        CHECK(validate(t).empty());
    }
}

TEST_CASE("scripted excerpt reproduces the figure") {
    const auto dm = bundled_manager();
    const auto expected = sophie::testing::fixture("sample.json");
    auto st = dm.start_session("lung-cancer-prognosis").state;
    for (const auto& line : excerpt_clinician_lines()) dm.process_user_turn(st, line);
    const auto t = dm.end_session(st);
    REQUIRE(t.turns.size() == expected.turns.size());
    for (std::size_t i = 0; i < t.turns.size(); ++i) {
        CHECK(t.turns[i].speaker == expected.turns[i].speaker);
        CHECK(t.turns[i].text == expected.turns[i].text);
    }
    const auto patient = gists_of(st, Speaker::Patient);
    const std::vector<std::string> key = {"bad-news-received", "request-prognosis-meaning", "anxiety-expressed",
                                          "future-concern-expressed"};
    std::vector<std::string> seen;
    for (const auto& g : patient) {
        if (std::find(key.begin(), key.end(), g) != key.end()) seen.push_back(g);
    }
    CHECK(seen == key);
}

TEST_CASE("re-invocation guard skips a schema already on the stack") {
    Toy toy;
    toy.rule("tree: any\n* => gist: said something\n");
    toy.schema(R"({"id":"a","default_reaction":"a-default","closing":{"text":"Done.","gist":"closing"},"episodes":[
        {"say":{"text":"A start.","gist":"a-start"}},
        {"expect_user":{"interp_tree":"any","reactions":[{"gist_pattern":"*","action":{"invoke":"b"}}]}},
        {"say":{"text":"A end.","gist":"a-end"}}]})");
    toy.schema(R"({"id":"b","default_reaction":"b-default","episodes":[
        {"say":{"text":"B start.","gist":"b-start"}},
        {"invoke":{"schema":"a"}},
        {"expect_user":{"interp_tree":"any","reactions":[{"gist_pattern":"*","action":{"invoke":"a"}}]}}]})");
    const auto dm = toy.manager();
    auto st = dm.start_session("a").state;
    auto r1 = dm.process_user_turn(st, "hello");
    REQUIRE(r1.size() == 1);
    CHECK(r1[0].text == "B start.");
    CHECK(st.schema_stack.size() == 2);
    auto r2 = dm.process_user_turn(st, "hello again");
    // invoke of "a" is skipped; b finishes, a resumes and finishes
    REQUIRE(r2.size() == 1);
    CHECK(r2[0].text == "A end. Done.");
    CHECK(st.status == SessionStatus::Completed);
}

TEST_CASE("invoke episode condition tests the latest clinician gists") {
    Toy toy;
    toy.rule("tree: topic\n* family * => gist: family came up\n* => gist: something else\n");
    toy.schema(R"({"id":"top","default_reaction":"hm","closing":{"text":"Bye.","gist":"closing"},"episodes":[
        {"say":{"text":"Hello.","gist":"hello"}},
        {"expect_user":{"interp_tree":"topic","reactions":[{"gist_pattern":"*","action":"continue"}]}},
        {"invoke":{"schema":"fam","condition":"family *"}},
        {"say":{"text":"Anyway.","gist":"anyway"}}]})");
    toy.schema(R"({"id":"fam","default_reaction":"hm","episodes":[{"say":{"text":"My son...","gist":"son"}}]})");
    const auto dm = toy.manager();

    auto with = dm.start_session("top").state;
    CHECK(dm.process_user_turn(with, "what about your family")[0].text == "My son... Anyway. Bye.");
    auto without = dm.start_session("top").state;
    CHECK(dm.process_user_turn(without, "nice weather")[0].text == "Anyway. Bye.");
}

TEST_CASE("continue into another expectation still answers") {
    Toy toy;
    toy.rule("tree: any\n* => gist: x\n");
    toy.schema(R"({"id":"c","default_reaction":"Go on.","episodes":[
        {"expect_user":{"interp_tree":"any","reactions":[{"gist_pattern":"*","action":"continue"}]}},
        {"expect_user":{"interp_tree":"any","reactions":[{"gist_pattern":"*","action":{"say":{"text":"Fine.","gist":"fine"}}}]}}]})");
    const auto dm = toy.manager();
    auto st = dm.start_session("c").state;
    const auto reply = dm.process_user_turn(st, "hello");
    REQUIRE(reply.size() == 1);
    CHECK(reply[0].text == "Go on.");
}

TEST_CASE("liveness, stack safety and gist bookkeeping under random input") {
    const auto dm = bundled_manager();
    const std::vector<std::string> lines = {
        "qwerty", "I have bad news.", "The cancer has spread.", "How much would you like to know?",
        "We have treatment options like chemotherapy.", "What concerns do you have?", "I understand.",
        "We can manage the pain.", "Your son could come with you.", "hmm", "The news is good.",
        "It is terminal.", "Maybe six months.", "Let's look at the scan results."};
    std::mt19937_64 rng(2024);
    for (int run = 0; run < 300; ++run) {
        auto st = dm.start_session("lung-cancer-prognosis").state;
        std::map<std::pair<std::string, std::size_t>, int> clarifies;
        for (int step = 0; step < 25 && st.status == SessionStatus::Active; ++step) {
            const auto before = st.transcript.turns.size();
            const auto gists_before = st.gist_history.size();
            const auto frame = st.schema_stack.back();
            const auto reply = dm.process_user_turn(st, lines[rng() % lines.size()]);
            REQUIRE((reply.size() == 1 || st.status == SessionStatus::Completed));
            REQUIRE(st.transcript.turns.size() >= before + 1);
            REQUIRE(st.gist_history.size() >= gists_before);
            if (st.status == SessionStatus::Active) {
                REQUIRE_FALSE(st.schema_stack.empty());
                std::set<std::string> distinct;
                for (const auto& f : st.schema_stack) distinct.insert(f.schema_id);
                REQUIRE(distinct.size() == st.schema_stack.size());
                REQUIRE(st.schema_stack.size() <= bundled().schemas->size());
            }
            if (!reply.empty() && st.gist_history.back().gist == kClarifyGist) {
                REQUIRE(++clarifies[{frame.schema_id, frame.episode}] <= 2);
            }
        }
        // every patient turn carries at least one gist
        for (const auto& turn : st.transcript.turns) {
            if (turn.speaker != Speaker::Patient) continue;
            const bool has = std::any_of(st.gist_history.begin(), st.gist_history.end(), [&](const GistRecord& g) {
                return g.speaker == Speaker::Patient && g.turn_index == turn.index;
            });
            REQUIRE(has);
        }
        REQUIRE(validate(st.transcript).empty());
    }
}

TEST_CASE("replays are deterministic") {
    const auto dm = bundled_manager();
    auto run = [&] {
        auto st = dm.start_session("lung-cancer-prognosis", std::string("fixed")).state;
        for (const auto& line : excerpt_clinician_lines()) dm.process_user_turn(st, line);
        dm.process_user_turn(st, "qwerty");
        dm.process_user_turn(st, "It is terminal, maybe six months.");
        return std::pair{st.transcript.turns, st.gist_history};
    };
    const auto first = run();
    for (int i = 0; i < 20; ++i) CHECK(run() == first);
}
