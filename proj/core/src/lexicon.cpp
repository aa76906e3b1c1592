#include "sophie/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "sophie/errors.hpp"

namespace sophie {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool has_space(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

} // namespace

std::string_view to_string(LexiconKind k) noexcept {
    switch (k) {
    case LexiconKind::Sentiment: return "sentiment";
    case LexiconKind::Empathy: return "empathy";
    case LexiconKind::HedgeSet: return "hedges";
    case LexiconKind::PronounSet: return "pronouns";
    }
    return "unknown";
}

bool score_in_range(LexiconKind kind, double score) noexcept {
    switch (kind) {
    case LexiconKind::Sentiment: return score >= -4.0 && score <= 4.0;
    case LexiconKind::Empathy: return score >= 1.0 && score <= 7.0;
    default: return false;
    }
}

bool Lexicon::is_scored() const noexcept {
    return kind_ == LexiconKind::Sentiment || kind_ == LexiconKind::Empathy;
}

Lexicon Lexicon::scored(LexiconKind kind, std::map<std::string, double> entries,
                        std::string source) {
    Lexicon lx;
    lx.kind_ = kind;
    lx.source_ = std::move(source);
    if (!lx.is_scored()) throw UsageError("lexicon kind " + std::string(to_string(kind)) + " is not scored");
    for (auto& [word, score] : entries) {
        if (!score_in_range(kind, score)) {
            throw UsageError("score " + std::to_string(score) + " for \"" + word +
                             "\" outside the " + std::string(to_string(kind)) + " range");
        }
        lx.scores_[lower(word)] = score;
    }
    return lx;
}

Lexicon Lexicon::word_set(LexiconKind kind, std::set<std::string> words, std::string source) {
    Lexicon lx;
    lx.kind_ = kind;
    lx.source_ = std::move(source);
    if (lx.is_scored()) throw UsageError("lexicon kind " + std::string(to_string(kind)) + " is scored");
    if (words.empty()) throw UsageError("word-set lexicon must not be empty");
    for (const auto& w : words) lx.words_.insert(lower(w));
    return lx;
}

bool Lexicon::contains(std::string_view word) const {
    return is_scored() ? scores_.find(word) != scores_.end() : words_.find(word) != words_.end();
}

std::optional<double> Lexicon::score(std::string_view word) const {
    if (auto it = scores_.find(word); it != scores_.end()) return it->second;
    return std::nullopt;
}

std::size_t Lexicon::size() const noexcept {
    return is_scored() ? scores_.size() : words_.size();
}

Lexicon parse_lexicon(std::string_view text, LexiconKind kind, const std::string& source,
                      std::vector<std::string>* warnings) {
    const bool scored = kind == LexiconKind::Sentiment || kind == LexiconKind::Empathy;
    std::map<std::string, double> entries;
    std::set<std::string> words;

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(start, nl - start);
        start = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        std::string_view body = trim(line);
        if (body.empty() || body.front() == '#') {
            if (nl == text.size()) break;
            continue;
        }
        auto warn_duplicate = [&](const std::string& w) {
            if (warnings) {
                warnings->push_back(source + ":" + std::to_string(line_no) + ": duplicate word \"" +
                                    w + "\", keeping last entry");
            }
        };
        if (scored) {
            const auto tab = line.find('\t');
            if (tab == std::string_view::npos) {
                throw LoadError(source, line_no, "expected word<TAB>score");
            }
            const std::string word = lower(trim(line.substr(0, tab)));
            const std::string_view num = trim(line.substr(tab + 1));
            if (word.empty() || has_space(word)) throw LoadError(source, line_no, "bad word field");
            double value = 0;
            const auto res = std::from_chars(num.data(), num.data() + num.size(), value);
            if (res.ec != std::errc{} || res.ptr != num.data() + num.size()) {
                throw LoadError(source, line_no, "bad score \"" + std::string(num) + "\"");
            }
            if (!score_in_range(kind, value)) {
                throw LoadError(source, line_no,
                                "score " + std::string(num) + " outside the " +
                                    std::string(to_string(kind)) + " range");
            }
            if (entries.count(word)) warn_duplicate(word);
            entries[word] = value;
        } else {
            const std::string word = lower(body);
            if (has_space(word)) throw LoadError(source, line_no, "expected one word per line");
            if (words.count(word)) warn_duplicate(word);
            words.insert(word);
        }
        if (nl == text.size()) break;
    }

    if (scored) return Lexicon::scored(kind, std::move(entries), source);
    if (words.empty()) throw LoadError(source, 0, "word-set lexicon is empty");
    return Lexicon::word_set(kind, std::move(words), source);
}

Lexicon load_lexicon(const std::filesystem::path& path, LexiconKind kind,
                     std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path.string(), 0, "cannot open lexicon file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_lexicon(ss.str(), kind, path.string(), warnings);
}

Lexicon default_pronouns() {
    return Lexicon::word_set(LexiconKind::PronounSet,
                             {"i", "me", "my", "mine", "myself", "you", "your", "yours",
                              "yourself", "we", "us", "our", "ours", "ourselves", "he", "him",
                              "his", "she", "her", "hers", "they", "them", "their", "theirs"},
                             "builtin");
}

} // namespace sophie
