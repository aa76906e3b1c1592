#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sophie/errors.hpp"
#include "sophie/lexicon.hpp"
#include "sophie/text.hpp"
#include "support.hpp"

using namespace sophie;
using Tokens = std::vector<std::string>;

namespace {

Lexicon hedges(std::set<std::string> w) { return Lexicon::word_set(LexiconKind::HedgeSet, std::move(w)); }

Transcript two_speaker(const std::vector<std::pair<Speaker, std::string>>& turns) {
    Transcript t;
    for (const auto& [s, text] : turns) t.turns.push_back({t.turns.size(), s, text, std::nullopt, std::nullopt});
    return t;
}

} // namespace

TEST_CASE("tokenize") {
    CHECK(tokenize("I don't know.") == Tokens{"i", "don't", "know"});
    CHECK(tokenize("What concerns do you have?") == Tokens{"what", "concerns", "do", "you", "have", "?"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("Wait?! Really?? Yes.") == Tokens{"wait", "?", "really", "?", "yes"});
    CHECK(tokenize("It’s “fine” \u2014 mostly…") == Tokens{"it's", "fine", "mostly"});
    CHECK(tokenize("CAFÉ Ünd ÀÉÎ") == Tokens{"café", "ünd", "àéî"});
    CHECK(tokenize("'quoted' rock'n'roll") == Tokens{"quoted", "rock'n'roll"});
}

TEST_CASE("tokenize is idempotent on its own output") {
    std::mt19937_64 rng(11);
    const std::string alphabet = "abcXYZ '?!.,;:-\"é’";
    for (int i = 0; i < 500; ++i) {
        std::string s;
        for (int k = 0, n = static_cast<int>(rng() % 40); k < n; ++k) s += alphabet[rng() % alphabet.size()];
        const auto once = tokenize(s);
        std::string joined;
        for (const auto& t : once) joined += (joined.empty() ? "" : " ") + t;
        CHECK(tokenize(joined) == once);
    }
}

TEST_CASE("split_sentences") {
    CHECK(split_sentences("Bad news. The cancer has spread.").size() == 2);
    CHECK(split_sentences("Dr. Smith will see you.") == std::vector<std::string>{"Dr. Smith will see you."});
    CHECK(split_sentences("no terminator here") == std::vector<std::string>{"no terminator here"});
    CHECK(split_sentences("Use e.g. rest. Then i.e. sleep.").size() == 2);
    CHECK(split_sentences("He said \"stop.\" Then left!") ==
          std::vector<std::string>{"He said \"stop.\"", "Then left!"});
    CHECK(split_sentences("3.5 mg daily. Ok?") == std::vector<std::string>{"3.5 mg daily.", "Ok?"});
    CHECK(split_sentences("   ").empty());
}

TEST_CASE("count_syllables") {
    CHECK(count_syllables("cancer") == 2);
    CHECK(count_syllables("spread") == 1);
    CHECK(count_syllables("a") == 1);
    CHECK(count_syllables("hello") == 2);
    CHECK(count_syllables("the") == 1);
    CHECK(count_syllables("make") == 1);
    CHECK(count_syllables("little") == 2);
    CHECK(count_syllables("table") == 2);
    CHECK(count_syllables("rhythm") == 1);
    CHECK(count_syllables("don't") == 1);
}

TEST_CASE("reading_grade") {
    const auto g = reading_grade("The cancer has spread.");
    CHECK(g.raw == doctest::Approx(0.72).epsilon(1e-9));
    CHECK(g.display_grade == 1);
    // 0.39*1 + 11.8*2 - 15.59
    const auto h = reading_grade("Hello.");
    CHECK(h.raw == doctest::Approx(8.40).epsilon(1e-9));
    CHECK(h.display_grade == 8);
    CHECK_THROWS_AS(reading_grade(""), UndefinedMetric);
    CHECK_THROWS_AS(reading_grade("?!"), UndefinedMetric);
}

TEST_CASE("display grade rounds half up and clamps") {
    CHECK(display_grade(-3.0) == 1);
    CHECK(display_grade(0.49) == 1);
    CHECK(display_grade(4.5) == 5);
    CHECK(display_grade(4.49) == 4);
    CHECK(display_grade(30.0) == 12);
}

TEST_CASE("reading_grade agrees with the formula over its own counts") {
    std::mt19937_64 rng(3);
    const std::vector<std::string> words = {"patient", "the", "a", "treatment", "is", "complicated", "go", "table"};
    const std::vector<std::string> stops = {".", "!", "?", ""};
    for (int i = 0; i < 200; ++i) {
        std::string text;
        for (int k = 0, n = 1 + static_cast<int>(rng() % 30); k < n; ++k) {
            text += words[rng() % words.size()];
            text += rng() % 4 == 0 ? stops[rng() % stops.size()] + " " : " ";
        }
        const auto c = reading_components(std::vector<std::string>{text});
        const double direct = 0.39 * double(c.words) / double(c.sentences) + 11.8 * double(c.syllables) / double(c.words) - 15.59;
        CHECK(std::abs(reading_grade(text).raw - direct) < 1e-9);
    }
}

TEST_CASE("hedge_metrics") {
    const auto lex = hedges({"might", "possibly", "maybe"});
    const auto m = hedge_metrics(tokenize("it might possibly work"), lex);
    CHECK(m.percentage == doctest::Approx(50.0));
    CHECK(m.cloud.entries == std::vector<std::pair<std::string, std::size_t>>{{"might", 1}, {"possibly", 1}});
    CHECK(hedge_metrics(tokenize("no hedges here"), lex).percentage == 0.0);
    CHECK(hedge_metrics(tokenize("no hedges here"), lex).cloud.entries.empty());
    CHECK_THROWS_AS(hedge_metrics(tokenize("?"), lex), UndefinedMetric);

    std::set<std::string> twelve;
    std::string text;
    for (int i = 0; i < 12; ++i) {
        twelve.insert("h" + std::to_string(i));
        text += "h" + std::to_string(i) + " ";
    }
    CHECK(hedge_metrics(tokenize(text), hedges(twelve)).cloud.entries.size() == 10);
    CHECK_THROWS_AS(hedge_metrics(tokenize(text), default_pronouns()), UsageError);
}

TEST_CASE("question marks are not words") {
    const auto lex = hedges({"maybe"});
    CHECK(hedge_metrics(tokenize("maybe?"), lex).percentage == doctest::Approx(100.0));
}

TEST_CASE("pronoun_metrics with the bundled list") {
    const auto p = default_pronouns();
    CHECK(p.size() == 24);
    CHECK(pronoun_metrics(tokenize("i want you to know"), p) == doctest::Approx(40.0));
    CHECK(pronoun_metrics(tokenize("the cancer has spread"), p) == 0.0);
    CHECK(pronoun_metrics(tokenize("you you you"), p) == doctest::Approx(100.0));
    CHECK_THROWS_AS(pronoun_metrics({}, p), UndefinedMetric);
}

TEST_CASE("empathy_metrics") {
    const auto lex = Lexicon::scored(LexiconKind::Empathy, {{"care", 5.5}, {"support", 6.0}});
    const auto m = empathy_metrics(tokenize("we care and care"), lex);
    REQUIRE(m.average);
    CHECK(*m.average == doctest::Approx(5.5));
    CHECK(m.cloud.entries == std::vector<std::pair<std::string, std::size_t>>{{"care", 2}});
    CHECK_FALSE(empathy_metrics(tokenize("nothing relevant"), lex).average);

    std::map<std::string, double> twenty;
    std::string text;
    for (int i = 0; i < 20; ++i) {
        twenty["w" + std::to_string(i)] = 4.0;
        text += "w" + std::to_string(i) + " ";
    }
    CHECK(empathy_metrics(tokenize(text), Lexicon::scored(LexiconKind::Empathy, twenty)).cloud.entries.size() == 15);
}

TEST_CASE("word cloud ordering") {
    const Tokens words = {"b", "a", "c", "b", "a", "d", "b"};
    const auto c = build_word_cloud(words, 3);
    CHECK(c.entries == std::vector<std::pair<std::string, std::size_t>>{{"b", 3}, {"a", 2}, {"c", 1}});
    CHECK(c.cap == 3);
}

TEST_CASE("sentiment_score") {
    const auto lex = Lexicon::scored(LexiconKind::Sentiment, {{"good", 1.9}, {"bad", -2.5}});
    CHECK(sentiment_score({}, lex) == 0.0);
    CHECK(sentiment_score(tokenize("nothing here"), lex) == 0.0);
    CHECK(sentiment_score(tokenize("not good"), lex) == doctest::Approx(-0.44043357076016854).epsilon(1e-12));
    // negation reaches three tokens back, not four
    CHECK(sentiment_score(tokenize("never a b good"), lex) < 0);
    CHECK(sentiment_score(tokenize("never a b c good"), lex) > 0);
    CHECK(sentiment_score(tokenize("it isn't good"), lex) < 0);
    CHECK(sentiment_score(tokenize("good good"), lex) == doctest::Approx(0.7003492917357613).epsilon(1e-12));
}

TEST_CASE("sentiment stays in bounds and is monotone in positive additions") {
    const auto& lex = sophie::testing::bundled().lexicons.sentiment;
    std::vector<std::string> vocab;
    for (const auto& [w, _] : lex.scores()) vocab.push_back(w);
    vocab.insert(vocab.end(), {"not", "no", "never", "don't", "the", "and"});
    std::mt19937_64 rng(99);
    for (int i = 0; i < 2000; ++i) {
        Tokens t(rng() % 60);
        for (auto& w : t) w = vocab[rng() % vocab.size()];
        const double s = sentiment_score(t, lex);
        REQUIRE(s >= -1.0);
        REQUIRE(s <= 1.0);
        // Appending a positive word far from any negator cannot lower the score.
        Tokens more = t;
        more.insert(more.end(), {"the", "the", "the", "great"});
        REQUIRE(sentiment_score(more, lex) >= s);
    }
}

TEST_CASE("sentiment_trajectory") {
    const auto lex = Lexicon::scored(LexiconKind::Sentiment, {{"good", 1.9}, {"bad", -2.5}});
    SUBCASE("scores only in the first half") {
        const auto t = two_speaker({{Speaker::Clinician, "good good xyz xyz"}});
        const auto tr = sentiment_trajectory(t, Speaker::Clinician, lex, 2);
        CHECK(tr.bins == std::vector<double>{sentiment_score(Tokens{"good", "good"}, lex), 0.0});
    }
    SUBCASE("uniform positive text") {
        const auto t = two_speaker({{Speaker::Clinician, "good good good good good good good good good good"}});
        const auto tr = sentiment_trajectory(t, Speaker::Clinician, lex, 5);
        for (double b : tr.bins) CHECK(b == doctest::Approx(tr.bins[0]));
        CHECK(tr.bins[0] > 0);
    }
    SUBCASE("absent speaker") {
        const auto t = two_speaker({{Speaker::Patient, "good"}});
        CHECK_THROWS_AS(sentiment_trajectory(t, Speaker::Clinician, lex), UndefinedMetric);
        CHECK_THROWS_AS(sentiment_trajectory(t, Speaker::Patient, lex, 1), UsageError);
    }
    SUBCASE("high-low-high fixture follows its shape") {
        const auto t = sophie::testing::fixture("high_low_high.json");
        const auto& sl = sophie::testing::bundled().lexicons.sentiment;
        const auto tr = sentiment_trajectory(t, Speaker::Clinician, sl, 10);
        for (int i : {0, 1, 2, 7, 8, 9}) CHECK(tr.bins[i] > 0.5);
        for (int i : {3, 4, 5, 6}) CHECK(tr.bins[i] < -0.5);
    }
}

TEST_CASE("trajectory partition covers every word exactly once") {
    std::mt19937_64 rng(5);
    const std::vector<std::string> words = {"a", "b", "c", "good", "bad", "what"};
    for (int i = 0; i < 300; ++i) {
        Transcript t;
        const bool timed = rng() % 2;
        std::int64_t clock = 0;
        for (int k = 0, n = 1 + static_cast<int>(rng() % 6); k < n; ++k) {
            Turn turn{t.turns.size(), rng() % 2 ? Speaker::Clinician : Speaker::Patient, "", std::nullopt, std::nullopt};
            for (int w = 0, m = 1 + static_cast<int>(rng() % 9); w < m; ++w) turn.text += words[rng() % words.size()] + " ";
            if (timed) {
                turn.start_ms = clock;
                clock += static_cast<std::int64_t>(rng() % 4000);
                turn.end_ms = clock;
            }
            t.turns.push_back(turn);
        }
        for (Speaker who : {Speaker::Clinician, Speaker::Patient}) {
            Tokens expected;
            for (const auto& turn : t.turns) {
                if (turn.speaker != who) continue;
                for (auto& w : words_only(tokenize(turn.text))) expected.push_back(w);
            }
            const std::size_t bins = 2 + rng() % 10;
            if (expected.empty()) {
                CHECK_THROWS_AS(trajectory_partition(t, who, bins), UndefinedMetric);
                continue;
            }
            const auto parts = trajectory_partition(t, who, bins);
            REQUIRE(parts.size() == bins);
            Tokens flat;
            for (const auto& p : parts) flat.insert(flat.end(), p.begin(), p.end());
            CHECK(flat == expected);
        }
    }
}

TEST_CASE("time-based binning follows the clock") {
    Transcript t;
    t.turns.push_back({0, Speaker::Clinician, "good", 0, 1000});
    t.turns.push_back({1, Speaker::Patient, "fine okay sure yes", 1000, 9000});
    t.turns.push_back({2, Speaker::Clinician, "bad", 9000, 10000});
    const auto parts = trajectory_partition(t, Speaker::Clinician, 10);
    CHECK(parts[0] == Tokens{"good"});
    CHECK(parts[9] == Tokens{"bad"});
    for (int i = 1; i < 9; ++i) CHECK(parts[i].empty());
    // by token fraction the two words would split 5/5
    t.turns[1].end_ms.reset();
    const auto untimed = trajectory_partition(t, Speaker::Clinician, 10);
    CHECK(untimed[0] == Tokens{"good"});
    CHECK(untimed[5] == Tokens{"bad"});
}

TEST_CASE("trajectory_distance") {
    const SentimentTrajectory a{{0.1, -0.3, 0.5, 0.0}};
    CHECK(trajectory_distance(a, a) == 0.0);
    SentimentTrajectory b = a;
    for (auto& x : b.bins) x += 0.2;
    CHECK(trajectory_distance(a, b) == doctest::Approx(0.2).epsilon(1e-12));
    const SentimentTrajectory ones{std::vector<double>(10, 1.0)}, minus{std::vector<double>(10, -1.0)};
    CHECK(trajectory_distance(ones, minus) == doctest::Approx(2.0));
    CHECK_THROWS_AS(trajectory_distance(a, ones), UsageError);
    CHECK(default_ideal_trajectory().bins == std::vector<double>{0.4, 0.4, 0.4, -0.2, -0.2, -0.2, -0.2, 0.5, 0.5, 0.5});
}

TEST_CASE("lexicon files") {
    std::vector<std::string> warnings;
    const auto two = parse_lexicon("care\t5.5\nsupport\t6.0\n", LexiconKind::Empathy, "mem", &warnings);
    CHECK(two.size() == 2);
    CHECK(warnings.empty());
    try {
        parse_lexicon("# header\ncare\t5.5\nodd\t9.0\n", LexiconKind::Empathy, "mem");
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(e.line() == 3);
    }
    const auto dup = parse_lexicon("Care\t2\ncare\t3\n", LexiconKind::Empathy, "mem", &warnings);
    CHECK(dup.score("care") == 3.0);
    CHECK(warnings.size() == 1);
    const auto set = parse_lexicon("# hedges\nmaybe\nPerhaps\n\n", LexiconKind::HedgeSet, "mem");
    CHECK(set.kind() == LexiconKind::HedgeSet);
    CHECK(set.contains("perhaps"));
    CHECK_THROWS_AS(parse_lexicon("good\t5\n", LexiconKind::Sentiment, "mem"), LoadError);
    CHECK_THROWS_AS(parse_lexicon("# nothing\n", LexiconKind::PronounSet, "mem"), LoadError);
    CHECK_THROWS_AS(load_lexicon("/nonexistent/lexicon.tsv", LexiconKind::Empathy), LoadError);
}

TEST_CASE("bundled lexicons load and respect their ranges") {
    const auto& l = sophie::testing::bundled().lexicons;
    CHECK(l.sentiment.size() > 100);
    CHECK(l.empathy.size() > 20);
    for (const auto& [w, s] : l.empathy.scores()) CHECK(score_in_range(LexiconKind::Empathy, s));
    for (const char* h : {"maybe", "possibly", "perhaps", "might", "may", "could", "somewhat", "sort", "kind", "likely",
                          "probably", "almost", "apparently", "basically", "seems", "suggest", "guess", "hopefully"}) {
        CHECK(l.hedges.contains(h));
    }
    CHECK(l.pronouns.words() == default_pronouns().words());
}
