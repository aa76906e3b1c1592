#include "sophie/pattern.hpp"

#include <algorithm>

#include "sophie/errors.hpp"
#include "sophie/text.hpp"

namespace sophie {

namespace {

bool is_wild(const PatternElement& e) { return std::holds_alternative<pattern::Wild>(e); }

class Matcher {
public:
    Matcher(const std::vector<PatternElement>& elements, std::span<const std::string> tokens)
        : elements_(elements), tokens_(tokens),
          failed_((elements.size() + 1) * (tokens.size() + 1), false),
          spans_(elements.size()), need_(elements.size() + 1, 0) {
        for (std::size_t i = elements.size(); i-- > 0;) {
            need_[i] = need_[i + 1] + (is_wild(elements[i]) ? 0 : 1);
        }
    }

    std::optional<Captures> run() {
        if (!step(0, 0)) return std::nullopt;
        Captures c;
        c.groups.reserve(spans_.size());
        for (auto [b, e] : spans_) {
            c.groups.emplace_back(tokens_.begin() + static_cast<std::ptrdiff_t>(b),
                                  tokens_.begin() + static_cast<std::ptrdiff_t>(e));
        }
        return c;
    }

private:
    bool step(std::size_t i, std::size_t pos) {
        const std::size_t n = tokens_.size();
        if (i == elements_.size()) return pos == n;
        // A failed (element, position) suffix fails on every revisit, so
        // memoizing it keeps the search polynomial without changing which
        // solution is found first.
        auto& failed = failed_[i * (n + 1) + pos];
        if (failed) return false;
        const auto& e = elements_[i];
        if (const auto* w = std::get_if<pattern::Wild>(&e)) {
            const std::size_t room = n - pos;
            const std::size_t longest = w->max == 0 ? room : std::min(w->max, room);
            for (std::size_t len = 0; len <= longest; ++len) {
                if (pos + len + need_[i + 1] > n) break;
                spans_[i] = {pos, pos + len};
                if (step(i + 1, pos + len)) return true;
            }
        } else if (pos < n && element_matches(e, tokens_[pos])) {
            spans_[i] = {pos, pos + 1};
            if (step(i + 1, pos + 1)) return true;
        }
        failed = 1;
        return false;
    }

    const std::vector<PatternElement>& elements_;
    std::span<const std::string> tokens_;
    std::vector<char> failed_;
    std::vector<std::pair<std::size_t, std::size_t>> spans_;
    std::vector<std::size_t> need_;  // non-wildcard elements from i onwards
};

std::optional<Transduction> try_rule(const Rule& rule, std::span<const std::string> tokens,
                                     std::size_t index) {
    auto captures = match(rule.pattern, tokens);
    if (!captures) return std::nullopt;
    for (std::size_t k = 0; k < rule.children.size(); ++k) {
        if (auto r = try_rule(rule.children[k], tokens, k)) {
            r->path.insert(r->path.begin(), index);
            return r;
        }
    }
    if (!rule.templ) return std::nullopt;
    return Transduction{apply_template(*rule.templ, *captures), {index}};
}

} // namespace

bool element_matches(const PatternElement& e, std::string_view token) {
    return std::visit(
        [&](const auto& el) -> bool {
            using T = std::decay_t<decltype(el)>;
            if constexpr (std::is_same_v<T, pattern::Literal>) {
                return el.word == token;
            } else if constexpr (std::is_same_v<T, pattern::Alt>) {
                return el.words.find(token) != el.words.end();
            } else if constexpr (std::is_same_v<T, pattern::ClassRef>) {
                return el.words && el.words->find(token) != el.words->end();
            } else {
                return true;
            }
        },
        e);
}

Pattern::Pattern(std::vector<PatternElement> elements) : elements_(std::move(elements)) {
    if (elements_.empty()) throw UsageError("pattern must have at least one element");
    const bool all_wild = std::all_of(elements_.begin(), elements_.end(), is_wild);
    if (all_wild && !is_match_all()) {
        throw UsageError("pattern needs a non-wildcard element unless it is a lone \"*\"");
    }
    for (const auto& e : elements_) {
        if (const auto* a = std::get_if<pattern::Alt>(&e); a && a->words.empty()) {
            throw UsageError("alternative set must not be empty");
        }
        if (const auto* c = std::get_if<pattern::ClassRef>(&e); c && !c->words) {
            throw UsageError("unresolved class !" + c->name);
        }
    }
}

bool Pattern::is_match_all() const noexcept {
    return elements_.size() == 1 && is_wild(elements_[0]) &&
           std::get<pattern::Wild>(elements_[0]).max == 0;
}

std::optional<Captures> match(const Pattern& p, std::span<const std::string> tokens) {
    return Matcher(p.elements(), tokens).run();
}

std::string apply_template(const Template& t, const Captures& c) {
    std::string out;
    auto append = [&](const std::string& w) {
        if (w.empty()) return;
        if (!out.empty()) out.push_back(' ');
        out += w;
    };
    for (const auto& part : t.parts) {
        if (const auto* w = std::get_if<tmpl::Word>(&part)) {
            append(w->text);
        } else {
            const auto& ref = std::get<tmpl::CaptureRef>(part);
            if (ref.index == 0 || ref.index > c.groups.size()) continue;
            for (const auto& tok : c.groups[ref.index - 1]) append(tok);
        }
    }
    return out;
}

std::string_view to_string(TreeTag tag) noexcept {
    return tag == TreeTag::Gist ? "gist" : "output";
}

std::optional<Transduction> transduce(const RuleTree& tree, std::span<const std::string> tokens) {
    for (std::size_t k = 0; k < tree.roots.size(); ++k) {
        if (auto r = try_rule(tree.roots[k], tokens, k)) return r;
    }
    return std::nullopt;
}

std::vector<std::string> extract_gists(const RuleTree& tree, std::string_view utterance) {
    std::vector<std::string> gists;
    for (const auto& sentence : split_sentences(utterance)) {
        const auto tokens = tokenize(sentence);
        if (tokens.empty()) continue;
        if (auto r = transduce(tree, tokens); r && !r->output.empty()) {
            gists.push_back(std::move(r->output));
        }
    }
    return gists;
}

void RuleBase::add(RuleTree tree) {
    if (trees_.count(tree.id)) throw UsageError("duplicate rule tree id \"" + tree.id + "\"");
    auto id = tree.id;
    trees_.emplace(std::move(id), std::make_shared<const RuleTree>(std::move(tree)));
}

const RuleTree* RuleBase::find(std::string_view id) const {
    auto it = trees_.find(id);
    return it == trees_.end() ? nullptr : it->second.get();
}

const RuleTree& RuleBase::at(std::string_view id) const {
    if (const auto* t = find(id)) return *t;
    throw UsageError("unknown rule tree \"" + std::string(id) + "\"");
}

std::vector<std::string> RuleBase::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : trees_) out.push_back(id);
    return out;
}

} // namespace sophie
