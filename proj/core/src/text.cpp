#include "sophie/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>

#include "sophie/errors.hpp"

namespace sophie {

namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one UTF-8 sequence starting at `i`; advances `i`. Malformed input
// yields kInvalid and skips a single byte.
char32_t decode(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    else { ++i; return kInvalid; }
    if (i + len > s.size()) { ++i; return kInvalid; }
    for (int k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) { ++i; return kInvalid; }
        cp = (cp << 6) | (b & 0x3F);
    }
    i += len;
    return cp;
}

void encode(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_apostrophe(char32_t cp) {
    return cp == U'\'' || cp == 0x2019 || cp == 0x02BC;
}

bool is_word_char(char32_t cp) {
    if (cp == kInvalid) return false;
    if (cp < 0x80) return std::isalnum(static_cast<int>(cp)) != 0;
    if (cp >= 0x80 && cp <= 0xBF) return false;           // Latin-1 punctuation, nbsp
    if (cp == 0xD7 || cp == 0xF7) return false;             // multiplication, division
    if (cp >= 0x2000 && cp <= 0x206F) return false;         // general punctuation
    if (cp >= 0x2190 && cp <= 0x2BFF) return false;         // arrows, symbols
    if (cp >= 0x3000 && cp <= 0x303F) return false;         // CJK punctuation
    if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
    if (cp >= 0xFF01 && cp <= 0xFF0F) return false;
    if (cp >= 0xFF1A && cp <= 0xFF20) return false;
    if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;       // emoji
    return true;
}

char32_t to_lower(char32_t cp) {
    if (cp < 0x80) return static_cast<char32_t>(std::tolower(static_cast<int>(cp)));
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    if (cp >= 0x100 && cp <= 0x17F && cp != 0x130 && cp != 0x138 && cp != 0x149 && cp != 0x17F) {
        // Latin Extended-A alternates upper/lower, with the parity switching
        // after U+0138 and U+0178.
        const bool upper_even = (cp < 0x138) || (cp > 0x149 && cp < 0x178);
        const bool is_even = cp % 2 == 0;
        if (upper_even ? is_even : !is_even) return cp + 1;
        return cp;
    }
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
    return cp;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool is_vowel(char c) {
    switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y': return true;
    default: return false;
    }
}

void require_kind(const Lexicon& lx, LexiconKind kind) {
    if (lx.kind() != kind) {
        throw UsageError("expected a " + std::string(to_string(kind)) + " lexicon, got " +
                         std::string(to_string(lx.kind())));
    }
}

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    bool question_pending = false;  // a "?" was already emitted since the last word

    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    };

    std::size_t i = 0;
    while (i < text.size()) {
        const char32_t cp = decode(text, i);
        if (is_word_char(cp)) {
            encode(to_lower(cp), current);
            question_pending = false;
            continue;
        }
        if (is_apostrophe(cp) && !current.empty() && i < text.size()) {
            std::size_t j = i;
            if (is_word_char(decode(text, j))) {
                current.push_back('\'');
                continue;
            }
        }
        flush();
        if (cp == U'?' && !question_pending) {
            tokens.emplace_back(kQuestionToken);
            question_pending = true;
        }
    }
    flush();
    return tokens;
}

std::vector<std::string> words_only(std::span<const std::string> tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (t != kQuestionToken) out.push_back(t);
    }
    return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
    static constexpr std::array<std::string_view, 7> kAbbreviations = {
        "dr", "mr", "mrs", "ms", "prof", "e.g", "i.e"};

    auto is_terminator = [](char c) { return c == '.' || c == '!' || c == '?'; };
    auto is_closer = [](char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; };

    std::vector<std::string> out;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_terminator(text[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && is_terminator(text[j])) ++j;
        const bool single_period = text[i] == '.' && j == i + 1;
        for (;;) {
            if (j < text.size() && is_closer(text[j])) { ++j; continue; }
            // Curly closing quotes (U+201D, U+2019) are three bytes.
            if (j + 2 < text.size() && static_cast<unsigned char>(text[j]) == 0xE2 &&
                static_cast<unsigned char>(text[j + 1]) == 0x80 &&
                (static_cast<unsigned char>(text[j + 2]) == 0x9D ||
                 static_cast<unsigned char>(text[j + 2]) == 0x99)) {
                j += 3;
                continue;
            }
            break;
        }
        const bool at_boundary =
            j == text.size() || std::isspace(static_cast<unsigned char>(text[j]));
        if (!at_boundary) {
            i = j;
            continue;
        }
        if (single_period) {
            std::size_t w = i;
            while (w > start && !std::isspace(static_cast<unsigned char>(text[w - 1]))) --w;
            std::string word(text.substr(w, i - w));
            while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\''))
                word.erase(word.begin());
            std::transform(word.begin(), word.end(), word.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            if (std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end()) {
                i = j;
                continue;
            }
        }
        const auto sentence = trim(text.substr(start, j - start));
        if (!sentence.empty()) out.emplace_back(sentence);
        start = j;
        i = j;
    }
    const auto rest = trim(text.substr(std::min(start, text.size())));
    if (!rest.empty()) out.emplace_back(rest);
    return out;
}

int count_syllables(std::string_view word) {
    std::string w;
    for (char c : word) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalpha(uc)) w.push_back(static_cast<char>(std::tolower(uc)));
    }
    if (w.empty()) return 1;
    int groups = 0;
    bool in_group = false;
    for (char c : w) {
        const bool v = is_vowel(c);
        if (v && !in_group) ++groups;
        in_group = v;
    }
    if (w.back() == 'e') {
        const bool consonant_le = w.size() >= 3 && w[w.size() - 2] == 'l' && !is_vowel(w[w.size() - 3]);
        if (!consonant_le) --groups;
    }
    return std::max(groups, 1);
}

ReadingComponents reading_components(std::span<const std::string> texts) {
    ReadingComponents c;
    for (const auto& text : texts) {
        for (const auto& sentence : split_sentences(text)) {
            const auto tokens = tokenize(sentence);
            const auto words = words_only(tokens);
            if (words.empty()) continue;
            ++c.sentences;
            c.words += words.size();
            for (const auto& w : words) c.syllables += static_cast<std::size_t>(count_syllables(w));
        }
    }
    return c;
}

double flesch_kincaid_grade(const ReadingComponents& c) {
    if (c.words == 0 || c.sentences == 0) throw UndefinedMetric("reading grade needs at least one word");
    const double words = static_cast<double>(c.words);
    return 0.39 * (words / static_cast<double>(c.sentences)) +
           11.8 * (static_cast<double>(c.syllables) / words) - 15.59;
}

int display_grade(double raw) noexcept {
    const double rounded = std::floor(raw + 0.5);
    return static_cast<int>(std::clamp(rounded, 1.0, 12.0));
}

ReadingGrade reading_grade(std::span<const std::string> texts) {
    const double raw = flesch_kincaid_grade(reading_components(texts));
    return {raw, display_grade(raw)};
}

ReadingGrade reading_grade(std::string_view text) {
    const std::string one(text);
    return reading_grade(std::span<const std::string>(&one, 1));
}

WordCloud build_word_cloud(std::span<const std::string> words, std::size_t cap) {
    std::map<std::string, std::size_t> counts;
    for (const auto& w : words) ++counts[w];
    WordCloud cloud;
    cloud.cap = cap;
    cloud.entries.assign(counts.begin(), counts.end());
    std::stable_sort(cloud.entries.begin(), cloud.entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (cloud.entries.size() > cap) cloud.entries.resize(cap);
    return cloud;
}

HedgeMetrics hedge_metrics(std::span<const std::string> tokens, const Lexicon& hedges) {
    require_kind(hedges, LexiconKind::HedgeSet);
    const auto words = words_only(tokens);
    if (words.empty()) throw UndefinedMetric("hedge percentage needs at least one word");
    std::vector<std::string> hits;
    for (const auto& w : words) {
        if (hedges.contains(w)) hits.push_back(w);
    }
    return {100.0 * static_cast<double>(hits.size()) / static_cast<double>(words.size()),
            build_word_cloud(hits, kHedgeCloudCap)};
}

double pronoun_metrics(std::span<const std::string> tokens, const Lexicon& pronouns) {
    require_kind(pronouns, LexiconKind::PronounSet);
    const auto words = words_only(tokens);
    if (words.empty()) throw UndefinedMetric("pronoun percentage needs at least one word");
    const auto hits = std::count_if(words.begin(), words.end(),
                                    [&](const std::string& w) { return pronouns.contains(w); });
    return 100.0 * static_cast<double>(hits) / static_cast<double>(words.size());
}

EmpathyMetrics empathy_metrics(std::span<const std::string> tokens, const Lexicon& empathy) {
    require_kind(empathy, LexiconKind::Empathy);
    std::vector<std::string> hits;
    double sum = 0.0;
    for (const auto& t : tokens) {
        if (auto s = empathy.score(t)) {
            hits.push_back(t);
            sum += *s;
        }
    }
    EmpathyMetrics m;
    m.cloud = build_word_cloud(hits, kEmpathyCloudCap);
    if (!hits.empty()) m.average = sum / static_cast<double>(hits.size());
    return m;
}

bool is_negator(std::string_view token) noexcept {
    if (token == "not" || token == "no" || token == "never") return true;
    return token.size() > 3 && token.substr(token.size() - 3) == "n't";
}

double sentiment_score(std::span<const std::string> tokens, const Lexicon& sentiment) {
    require_kind(sentiment, LexiconKind::Sentiment);
    const auto words = words_only(tokens);
    double sum = 0.0;
    for (std::size_t i = 0; i < words.size(); ++i) {
        auto valence = sentiment.score(words[i]);
        if (!valence) continue;
        bool negated = false;
        for (std::size_t back = 1; back <= kNegationWindow && back <= i; ++back) {
            if (is_negator(words[i - back])) {
                negated = true;
                break;
            }
        }
        sum += negated ? -*valence : *valence;
    }
    if (sum == 0.0) return 0.0;
    return sum / std::sqrt(sum * sum + kSentimentAlpha);
}

std::size_t position_bin(std::size_t index, std::size_t total, std::size_t bin_count) noexcept {
    if (total == 0 || bin_count == 0) return 0;
    return std::min(index * bin_count / total, bin_count - 1);
}

std::vector<std::vector<std::string>> trajectory_partition(const Transcript& t, Speaker who,
                                                           std::size_t bin_count) {
    if (bin_count < 2) throw UsageError("trajectory needs at least 2 bins");
    std::vector<std::vector<std::string>> bins(bin_count);

    struct SpeakerTurn {
        const Turn* turn;
        std::vector<std::string> words;
    };
    std::vector<SpeakerTurn> turns;
    std::size_t total = 0;
    for (const auto& turn : t.turns) {
        if (turn.speaker != who) continue;
        auto words = words_only(tokenize(turn.text));
        total += words.size();
        turns.push_back({&turn, std::move(words)});
    }
    if (total == 0) {
        throw UndefinedMetric(std::string("no ") + std::string(to_string(who)) + " speech in transcript");
    }

    std::int64_t t0 = 0;
    std::int64_t t1 = 0;
    const bool timed = t.fully_timed();
    if (timed) {
        t0 = *t.turns.front().start_ms;
        t1 = t0;
        for (const auto& turn : t.turns) {
            t0 = std::min(t0, *turn.start_ms);
            t1 = std::max(t1, *turn.end_ms);
        }
    }

    if (timed && t1 > t0) {
        const double span = static_cast<double>(t1 - t0);
        for (auto& st : turns) {
            const double start = static_cast<double>(*st.turn->start_ms);
            const double length = static_cast<double>(*st.turn->end_ms - *st.turn->start_ms);
            const double n = static_cast<double>(st.words.size());
            for (std::size_t k = 0; k < st.words.size(); ++k) {
                const double at = start + (static_cast<double>(k) + 0.5) / n * length;
                const double frac = (at - static_cast<double>(t0)) / span;
                auto bin = static_cast<std::size_t>(std::floor(frac * static_cast<double>(bin_count)));
                bins[std::min(bin, bin_count - 1)].push_back(std::move(st.words[k]));
            }
        }
        return bins;
    }

    std::size_t index = 0;
    for (auto& st : turns) {
        for (auto& w : st.words) bins[position_bin(index++, total, bin_count)].push_back(std::move(w));
    }
    return bins;
}

SentimentTrajectory sentiment_trajectory(const Transcript& t, Speaker who,
                                         const Lexicon& sentiment, std::size_t bin_count) {
    require_kind(sentiment, LexiconKind::Sentiment);
    SentimentTrajectory out;
    for (const auto& bin : trajectory_partition(t, who, bin_count)) {
        out.bins.push_back(sentiment_score(bin, sentiment));
    }
    return out;
}

double trajectory_distance(const SentimentTrajectory& a, const SentimentTrajectory& ideal) {
    if (a.bin_count() != ideal.bin_count()) {
        throw UsageError("trajectory lengths differ: " + std::to_string(a.bin_count()) + " vs " +
                         std::to_string(ideal.bin_count()));
    }
    if (a.bins.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.bins.size(); ++i) {
        const double d = a.bins[i] - ideal.bins[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(a.bins.size()));
}

SentimentTrajectory default_ideal_trajectory() {
    return {{0.4, 0.4, 0.4, -0.2, -0.2, -0.2, -0.2, 0.5, 0.5, 0.5}};
}

} // namespace sophie
