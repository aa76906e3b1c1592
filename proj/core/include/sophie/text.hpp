#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sophie/lexicon.hpp"
#include "sophie/transcript.hpp"

namespace sophie {

// Token emitted for a sentence-final question mark.
inline constexpr std::string_view kQuestionToken = "?";

/// Lowercases and splits on whitespace and punctuation. Apostrophes inside a
/// word are kept ("don't"), a terminal "?" becomes its own token, and every
/// other punctuation mark is dropped. Non-ASCII letters are word characters;
/// common Unicode punctuation (curly quotes, dashes, ellipsis) separates.
std::vector<std::string> tokenize(std::string_view text);

// Tokens with "?" removed: the words a speaker actually said.
std::vector<std::string> words_only(std::span<const std::string> tokens);

/// Splits after '.', '!' or '?' followed by whitespace or end of text.
/// "Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "e.g." and "i.e." never end a
/// sentence. Returned sentences are trimmed; text without a terminator is a
/// single sentence.
std::vector<std::string> split_sentences(std::string_view text);

/// Vowel-group syllable heuristic: groups of a/e/i/o/u/y, minus one for a
/// silent final "e" (kept for consonant + "le"), never below 1.
int count_syllables(std::string_view word);

struct ReadingComponents {
    std::size_t words = 0;
    std::size_t sentences = 0;
    std::size_t syllables = 0;
};

struct ReadingGrade {
    double raw = 0.0;
    int display_grade = 1;  // raw rounded half-up, clamped to [1, 12]
};

ReadingComponents reading_components(std::span<const std::string> texts);
double flesch_kincaid_grade(const ReadingComponents& c);
int display_grade(double raw) noexcept;

// Throws UndefinedMetric when the text holds no words.
ReadingGrade reading_grade(std::string_view text);
ReadingGrade reading_grade(std::span<const std::string> texts);

// Top words by count (descending), ties alphabetical, at most `cap` entries.
struct WordCloud {
    std::vector<std::pair<std::string, std::size_t>> entries;
    std::size_t cap = 0;

    bool operator==(const WordCloud&) const = default;
};

WordCloud build_word_cloud(std::span<const std::string> words, std::size_t cap);

inline constexpr std::size_t kHedgeCloudCap = 10;
inline constexpr std::size_t kEmpathyCloudCap = 15;

struct HedgeMetrics {
    double percentage = 0.0;
    WordCloud cloud;
};

struct EmpathyMetrics {
    std::optional<double> average;  // empty when no token is in the lexicon
    WordCloud cloud;
};

// The token-based metrics ignore "?" tokens. Hedge and pronoun metrics throw
// UndefinedMetric on zero words and UsageError on the wrong lexicon kind.
HedgeMetrics hedge_metrics(std::span<const std::string> tokens, const Lexicon& hedges);
double pronoun_metrics(std::span<const std::string> tokens, const Lexicon& pronouns);
EmpathyMetrics empathy_metrics(std::span<const std::string> tokens, const Lexicon& empathy);

// Normalization constant for summed valence: s / sqrt(s^2 + alpha).
inline constexpr double kSentimentAlpha = 15.0;
inline constexpr std::size_t kNegationWindow = 3;

bool is_negator(std::string_view token) noexcept;

/// Sum of in-lexicon valences, each flipped when a negator appears within the
/// three preceding tokens, normalized into [-1, 1]. No hits gives 0.
double sentiment_score(std::span<const std::string> tokens, const Lexicon& sentiment);

struct SentimentTrajectory {
    std::vector<double> bins;

    std::size_t bin_count() const noexcept { return bins.size(); }
    bool operator==(const SentimentTrajectory&) const = default;
};

inline constexpr std::size_t kDefaultTrajectoryBins = 10;

// Bin assignment for token position `index` of `total` by token fraction.
std::size_t position_bin(std::size_t index, std::size_t total, std::size_t bin_count) noexcept;

/// Groups the speaker's words into `bin_count` ordered bins. Positions are
/// token fractions, or conversation-time fractions when every turn of the
/// transcript carries timestamps. Each word lands in exactly one bin.
std::vector<std::vector<std::string>> trajectory_partition(const Transcript& t, Speaker who,
                                                           std::size_t bin_count);

/// Per-bin sentiment for one speaker (empty bins score 0). Throws
/// UndefinedMetric when the speaker said nothing and UsageError when
/// bin_count < 2.
SentimentTrajectory sentiment_trajectory(const Transcript& t, Speaker who,
                                         const Lexicon& sentiment,
                                         std::size_t bin_count = kDefaultTrajectoryBins);

// Root-mean-square difference across bins; UsageError on length mismatch.
double trajectory_distance(const SentimentTrajectory& a, const SentimentTrajectory& ideal);

// High-low-high reference shape used when no ideal is configured.
SentimentTrajectory default_ideal_trajectory();

} // namespace sophie
