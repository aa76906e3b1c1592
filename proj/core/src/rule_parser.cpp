#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "sophie/errors.hpp"
#include "sophie/pattern.hpp"

namespace sophie {

namespace {

using ClassMap = std::map<std::string, std::shared_ptr<const WordSet>>;

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

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

bool valid_identifier(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '-' || c == '_';
    });
}

std::optional<std::size_t> parse_count(std::string_view digits) {
    std::size_t value = 0;
    auto res = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size()) return std::nullopt;
    return value;
}

PatternElement parse_element(std::string_view tok, const ClassMap& classes) {
    if (tok == "*") return pattern::Wild{0};
    if (tok.front() == '*') {
        auto n = parse_count(tok.substr(1));
        if (!n) throw UsageError("bad bounded wildcard \"" + std::string(tok) + "\"");
        return pattern::Wild{*n};
    }
    if (tok.front() == '[') {
        if (tok.size() < 3 || tok.back() != ']') {
            throw UsageError("unterminated alternative \"" + std::string(tok) + "\"");
        }
        pattern::Alt alt;
        std::string_view body = tok.substr(1, tok.size() - 2);
        std::size_t start = 0;
        while (start <= body.size()) {
            auto bar = body.find('|', start);
            if (bar == std::string_view::npos) bar = body.size();
            auto word = body.substr(start, bar - start);
            if (word.empty()) throw UsageError("empty word in alternative \"" + std::string(tok) + "\"");
            alt.words.insert(lower(word));
            start = bar + 1;
        }
        return alt;
    }
    if (tok.front() == '!') {
        std::string name(tok.substr(1));
        auto it = classes.find(name);
        if (it == classes.end()) throw UsageError("unknown class !" + name);
        return pattern::ClassRef{name, it->second};
    }
    return pattern::Literal{lower(tok)};
}

struct RawRule {
    std::size_t depth;
    std::size_t line;
    Pattern pattern;
    std::optional<Template> templ;
};

Rule build(const std::vector<RawRule>& raw, std::size_t& i, const std::string& source) {
    const RawRule& r = raw[i];
    Rule rule{r.pattern, r.templ, {}, r.line};
    ++i;
    while (i < raw.size() && raw[i].depth == r.depth + 1) {
        rule.children.push_back(build(raw, i, source));
    }
    if (!rule.templ && rule.children.empty()) {
        throw LoadError(source, r.line, "rule has neither a template nor children");
    }
    return rule;
}

} // namespace

Pattern parse_pattern(std::string_view source, const ClassMap& classes) {
    std::vector<PatternElement> elements;
    for (auto tok : split_ws(source)) elements.push_back(parse_element(tok, classes));
    return Pattern(std::move(elements));
}

RuleTree parse_rules(std::string_view text, const std::string& source) {
    struct Line {
        std::size_t number;
        std::size_t depth;
        std::string_view body;
    };
    std::vector<Line> lines;
    std::size_t number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++number;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const auto body = trim(line);
        if (!body.empty() && body.front() != '#') {
            std::size_t spaces = 0;
            while (spaces < line.size() && (line[spaces] == ' ' || line[spaces] == '\t')) {
                if (line[spaces] == '\t') throw LoadError(source, number, "tab in indentation");
                ++spaces;
            }
            if (spaces % 2 != 0) {
                throw LoadError(source, number, "indentation must be a multiple of two spaces");
            }
            lines.push_back({number, spaces / 2, body});
        }
        if (nl == text.size()) break;
    }

    RuleTree tree;
    std::optional<TreeTag> tag;
    ClassMap classes;

    // Pass 1: header and class declarations, so rules may reference a class
    // declared further down.
    for (const auto& l : lines) {
        if (l.body.rfind("tree:", 0) == 0) {
            if (l.depth != 0) throw LoadError(source, l.number, "tree header must not be indented");
            if (!tree.id.empty()) throw LoadError(source, l.number, "second tree header in one file");
            const auto id = trim(l.body.substr(5));
            if (!valid_identifier(id)) throw LoadError(source, l.number, "bad tree id \"" + std::string(id) + "\"");
            tree.id = std::string(id);
        } else if (l.body.rfind("kind:", 0) == 0) {
            const auto k = trim(l.body.substr(5));
            if (k == "gist") tag = TreeTag::Gist;
            else if (k == "output") tag = TreeTag::Output;
            else throw LoadError(source, l.number, "kind must be gist or output");
        } else if (l.body.rfind("class ", 0) == 0) {
            if (l.depth != 0) throw LoadError(source, l.number, "class declaration must not be indented");
            const auto colon = l.body.find(':');
            if (colon == std::string_view::npos) throw LoadError(source, l.number, "expected class <name>: words");
            const std::string name(trim(l.body.substr(6, colon - 6)));
            if (!valid_identifier(name)) throw LoadError(source, l.number, "bad class name \"" + name + "\"");
            if (classes.count(name)) throw LoadError(source, l.number, "class !" + name + " declared twice");
            WordSet words;
            for (auto w : split_ws(l.body.substr(colon + 1))) words.insert(lower(w));
            if (words.empty()) throw LoadError(source, l.number, "class !" + name + " has no words");
            classes.emplace(name, std::make_shared<const WordSet>(std::move(words)));
        }
    }
    if (tree.id.empty()) throw LoadError(source, lines.empty() ? 0 : lines.front().number, "missing \"tree: <id>\" header");

    // Pass 2: rules.
    std::vector<RawRule> raw;
    std::optional<std::size_t> prev_depth;
    for (const auto& l : lines) {
        if (l.body.rfind("tree:", 0) == 0 || l.body.rfind("kind:", 0) == 0 ||
            l.body.rfind("class ", 0) == 0) {
            continue;
        }
        const std::size_t limit = prev_depth ? *prev_depth + 1 : 0;
        if (l.depth > limit) {
            throw LoadError(source, l.number,
                            "indented " + std::to_string(l.depth) + " levels, expected at most " +
                                std::to_string(limit));
        }
        prev_depth = l.depth;

        std::string_view pattern_src = l.body;
        std::optional<std::string_view> template_src;
        if (auto arrow = l.body.find("=>"); arrow != std::string_view::npos) {
            pattern_src = trim(l.body.substr(0, arrow));
            template_src = trim(l.body.substr(arrow + 2));
        }

        std::optional<Pattern> pattern;
        try {
            pattern = parse_pattern(pattern_src, classes);
        } catch (const UsageError& e) {
            throw LoadError(source, l.number, e.what());
        }

        std::optional<Template> templ;
        if (template_src) {
            std::string_view body = *template_src;
            for (auto [prefix, t] : {std::pair{std::string_view("gist:"), TreeTag::Gist},
                                     std::pair{std::string_view("output:"), TreeTag::Output}}) {
                if (body.rfind(prefix, 0) == 0) {
                    if (tag && *tag != t) {
                        throw LoadError(source, l.number,
                                        "template tag " + std::string(prefix) + " conflicts with tree kind " +
                                            std::string(to_string(*tag)));
                    }
                    tag = t;
                    body = trim(body.substr(prefix.size()));
                    break;
                }
            }
            Template tp;
            for (auto word : split_ws(body)) {
                if (word.size() > 1 && word.front() == '$') {
                    auto k = parse_count(word.substr(1));
                    if (!k) throw LoadError(source, l.number, "bad capture reference \"" + std::string(word) + "\"");
                    if (*k == 0 || *k > pattern->size()) {
                        throw LoadError(source, l.number,
                                        "capture $" + std::to_string(*k) + " out of range; pattern has " +
                                            std::to_string(pattern->size()) + " elements");
                    }
                    tp.parts.push_back(tmpl::CaptureRef{*k});
                } else {
                    tp.parts.push_back(tmpl::Word{std::string(word)});
                }
            }
            if (tp.parts.empty()) throw LoadError(source, l.number, "empty template after =>");
            templ = std::move(tp);
        }
        raw.push_back({l.depth, l.number, std::move(*pattern), std::move(templ)});
    }
    if (raw.empty()) throw LoadError(source, 0, "rule file has no rules");

    tree.tag = tag.value_or(TreeTag::Gist);
    tree.classes = std::move(classes);
    std::size_t i = 0;
    while (i < raw.size()) tree.roots.push_back(build(raw, i, source));
    return tree;
}

RuleTree load_rule_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path.string(), 0, "cannot open rule file");
    std::ostringstream ss;
    ss << in.rdbuf();
    RuleTree tree = parse_rules(ss.str(), path.string());
    if (path.stem().string() != tree.id) {
        throw LoadError(path.string(), 0,
                        "tree id \"" + tree.id + "\" does not match file name \"" + path.stem().string() + "\"");
    }
    return tree;
}

} // namespace sophie
