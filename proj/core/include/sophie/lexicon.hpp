#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace sophie {

enum class LexiconKind { Sentiment, Empathy, HedgeSet, PronounSet };

std::string_view to_string(LexiconKind k) noexcept;

// Word tables used by the text metrics. Scored kinds carry a value per word
// (sentiment valence in [-4, 4], empathy rating in [1, 7]); set kinds carry
// membership only. Words are stored lowercase.
class Lexicon {
public:
    Lexicon() = default;

    static Lexicon scored(LexiconKind kind, std::map<std::string, double> entries,
                          std::string source = "inline");
    static Lexicon word_set(LexiconKind kind, std::set<std::string> words,
                            std::string source = "inline");

    LexiconKind kind() const noexcept { return kind_; }
    const std::string& source() const noexcept { return source_; }
    bool is_scored() const noexcept;
    bool contains(std::string_view word) const;
    std::optional<double> score(std::string_view word) const;
    std::size_t size() const noexcept;
    const std::map<std::string, double, std::less<>>& scores() const noexcept { return scores_; }
    const std::set<std::string, std::less<>>& words() const noexcept { return words_; }

private:
    LexiconKind kind_ = LexiconKind::HedgeSet;
    std::string source_;
    std::map<std::string, double, std::less<>> scores_;
    std::set<std::string, std::less<>> words_;
};

bool score_in_range(LexiconKind kind, double score) noexcept;

/// Parses the TSV lexicon format: `word<TAB>score` for scored kinds, one word
/// per line for set kinds, `#` comments. Duplicate words keep the last entry
/// and append a warning. Throws LoadError (with line number) on bad lines or
/// out-of-range scores.
Lexicon parse_lexicon(std::string_view text, LexiconKind kind, const std::string& source,
                      std::vector<std::string>* warnings = nullptr);
Lexicon load_lexicon(const std::filesystem::path& path, LexiconKind kind,
                     std::vector<std::string>* warnings = nullptr);

// Built-in personal pronoun list (closed class).
Lexicon default_pronouns();

struct Lexicons {
    Lexicon sentiment;
    Lexicon empathy;
    Lexicon hedges;
    Lexicon pronouns;
};

} // namespace sophie
