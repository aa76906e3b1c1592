#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sophie {

using WordSet = std::set<std::string, std::less<>>;

namespace pattern {

struct Literal {
    std::string word;
    bool operator==(const Literal&) const = default;
};

struct Alt {
    WordSet words;
    bool operator==(const Alt&) const = default;
};

// Reference to a declared word class; the set is resolved when the rule
// file loads and shared by every element that names the class.
struct ClassRef {
    std::string name;
    std::shared_ptr<const WordSet> words;
    bool operator==(const ClassRef& o) const { return name == o.name; }
};

// Matches 0..max tokens; max == 0 means unbounded.
struct Wild {
    std::size_t max = 0;
    bool operator==(const Wild&) const = default;
};

} // namespace pattern

using PatternElement = std::variant<pattern::Literal, pattern::Alt, pattern::ClassRef, pattern::Wild>;

bool element_matches(const PatternElement& e, std::string_view token);

class Pattern {
public:
    // Throws UsageError unless the element list is non-empty and holds at
    // least one non-wildcard element (a lone unbounded "*" is allowed).
    explicit Pattern(std::vector<PatternElement> elements);

    const std::vector<PatternElement>& elements() const noexcept { return elements_; }
    std::size_t size() const noexcept { return elements_.size(); }
    bool is_match_all() const noexcept;

    bool operator==(const Pattern&) const = default;

private:
    std::vector<PatternElement> elements_;
};

// Matched token subsequence per pattern element (element k at index k-1).
struct Captures {
    std::vector<std::vector<std::string>> groups;

    const std::vector<std::string>& group(std::size_t one_based) const { return groups.at(one_based - 1); }
    bool operator==(const Captures&) const = default;
};

/// Anchored match of the whole token sequence. Wildcards are lazy: the
/// result is the first solution in a depth-first search that tries shorter
/// wildcard spans first, leftmost wildcard outermost.
std::optional<Captures> match(const Pattern& p, std::span<const std::string> tokens);

namespace tmpl {
struct Word {
    std::string text;
    bool operator==(const Word&) const = default;
};
struct CaptureRef {
    std::size_t index = 1;  // 1-based pattern element
    bool operator==(const CaptureRef&) const = default;
};
} // namespace tmpl

using TemplatePart = std::variant<tmpl::Word, tmpl::CaptureRef>;

struct Template {
    std::vector<TemplatePart> parts;
    bool operator==(const Template&) const = default;
};

// Joins literal words and captured tokens with single spaces; empty
// captures contribute nothing.
std::string apply_template(const Template& t, const Captures& c);

enum class TreeTag { Gist, Output };

std::string_view to_string(TreeTag tag) noexcept;

struct Rule {
    Pattern pattern;
    std::optional<Template> templ;
    std::vector<Rule> children;
    std::size_t line = 0;  // source line, for diagnostics
};

struct RuleTree {
    std::string id;
    TreeTag tag = TreeTag::Gist;
    std::map<std::string, std::shared_ptr<const WordSet>> classes;
    std::vector<Rule> roots;
};

struct Transduction {
    std::string output;
    // Index of the chosen rule at each depth, root first.
    std::vector<std::size_t> path;

    bool operator==(const Transduction&) const = default;
};

/// Depth-first over roots in order. A matching rule defers to its children
/// first and falls back to its own template; the first success wins.
std::optional<Transduction> transduce(const RuleTree& tree, std::span<const std::string> tokens);

/// Runs the tree over each sentence of the utterance and collects every
/// non-empty output in order. An empty result means nothing was understood.
std::vector<std::string> extract_gists(const RuleTree& tree, std::string_view utterance);

/// Parses one statement of pattern syntax (`*`, `*N`, `[a|b]`, `!class`,
/// literal words). Class references resolve against `classes`; unknown
/// classes and invalid patterns throw UsageError.
Pattern parse_pattern(std::string_view source,
                      const std::map<std::string, std::shared_ptr<const WordSet>>& classes = {});

/// Parses a rule file. Throws LoadError naming `source_name` and the line for
/// bad indentation, unknown classes, bad capture indices, or malformed lines.
RuleTree parse_rules(std::string_view text, const std::string& source_name = "<rules>");
RuleTree load_rule_file(const std::filesystem::path& path);

// Rule trees keyed by id.
class RuleBase {
public:
    void add(RuleTree tree);  // throws UsageError on duplicate id
    const RuleTree* find(std::string_view id) const;
    const RuleTree& at(std::string_view id) const;  // throws UsageError
    bool contains(std::string_view id) const { return find(id) != nullptr; }
    std::vector<std::string> ids() const;
    std::size_t size() const noexcept { return trees_.size(); }

private:
    std::map<std::string, std::shared_ptr<const RuleTree>, std::less<>> trees_;
};

} // namespace sophie
