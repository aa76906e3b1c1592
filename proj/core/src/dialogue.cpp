#include "sophie/dialogue.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <random>
#include <sstream>

#include "sophie/errors.hpp"
#include "sophie/text.hpp"

namespace sophie {

namespace {

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

// Clinician gists from the most recent clinician turn.
std::vector<std::string> latest_clinician_gists(const SessionState& state) {
    std::vector<std::string> out;
    std::optional<std::size_t> last;
    for (const auto& t : state.transcript.turns) {
        if (t.speaker == Speaker::Clinician) last = t.index;
    }
    if (!last) return out;
    for (const auto& g : state.gist_history) {
        if (g.speaker == Speaker::Clinician && g.turn_index == *last) out.push_back(g.gist);
    }
    return out;
}

bool any_gist_matches(const Pattern& p, const std::vector<std::string>& gists) {
    return std::any_of(gists.begin(), gists.end(),
                       [&](const std::string& g) { return match(p, tokenize(g)).has_value(); });
}

} // namespace

std::string_view to_string(SessionStatus s) noexcept {
    return s == SessionStatus::Active ? "active" : "completed";
}

std::string make_unique_id(std::string_view prefix) {
    static std::atomic<std::uint64_t> counter{0};
    thread_local std::mt19937_64 rng{std::random_device{}()};
    std::ostringstream os;
    os << prefix << std::hex << std::setfill('0') << std::setw(16) << rng() << std::setw(4)
       << (counter.fetch_add(1) & 0xFFFF);
    return os.str();
}

DialogueManager::DialogueManager(std::shared_ptr<const SchemaLibrary> schemas,
                                 std::shared_ptr<const RuleBase> rules)
    : schemas_(std::move(schemas)), rules_(std::move(rules)) {}

SessionStart DialogueManager::start_session(std::string_view schema_id,
                                            std::optional<std::string> session_id) const {
    const DialogueSchema& schema = schemas_->at(schema_id);
    SessionStart start;
    SessionState& st = start.state;
    st.session_id = session_id ? std::move(*session_id) : make_unique_id("s-");
    st.transcript.schema_id = schema.id;
    st.transcript.created_at = current_iso8601_utc();
    st.schema_stack.push_back({schema.id, 0, false});
    std::vector<Utterance> out;
    run_until_input(st, out);
    start.opening = commit(st, out);
    return start;
}

bool DialogueManager::on_stack(const SessionState& state, std::string_view schema_id) const {
    return std::any_of(state.schema_stack.begin(), state.schema_stack.end(),
                       [&](const StackFrame& f) { return f.schema_id == schema_id; });
}

void DialogueManager::run_until_input(SessionState& state, std::vector<Utterance>& out) const {
    while (state.status == SessionStatus::Active) {
        if (state.schema_stack.empty()) {
            const auto* root = state.transcript.schema_id ? schemas_->find(*state.transcript.schema_id) : nullptr;
            if (root && root->closing) out.push_back(*root->closing);
            state.status = SessionStatus::Completed;
            return;
        }
        StackFrame& frame = state.schema_stack.back();
        const DialogueSchema& schema = schemas_->at(frame.schema_id);
        if (frame.episode >= schema.episodes.size()) {
            state.schema_stack.pop_back();
            continue;
        }
        const Episode& ep = schema.episodes[frame.episode];
        if (std::holds_alternative<episode::ExpectUser>(ep)) return;
        ++frame.episode;
        frame.clarified = false;
        if (const auto* say = std::get_if<episode::SystemSay>(&ep)) {
            out.push_back(say->utterance);
        } else {
            const auto& inv = std::get<episode::InvokeSchema>(ep);
            if (inv.condition && !any_gist_matches(*inv.condition, latest_clinician_gists(state))) continue;
            if (on_stack(state, inv.schema_id)) continue;
            state.schema_stack.push_back({inv.schema_id, 0, false});
        }
    }
}

std::vector<Turn> DialogueManager::commit(SessionState& state, std::vector<Utterance>& out) const {
    if (out.empty()) return {};
    Turn turn;
    turn.index = state.transcript.turns.size();
    turn.speaker = Speaker::Patient;
    for (const auto& u : out) {
        if (!turn.text.empty()) turn.text.push_back(' ');
        turn.text += u.text;
        state.gist_history.push_back({Speaker::Patient, u.gist, turn.index});
    }
    state.transcript.turns.push_back(turn);
    out.clear();
    return {turn};
}

std::vector<Turn> DialogueManager::process_user_turn(SessionState& state, std::string_view text,
                                                     TurnTiming timing) const {
    if (state.status != SessionStatus::Active) {
        throw StateError("session " + state.session_id + " is completed");
    }
    if (blank(text)) throw UsageError("turn text is empty");
    if ((timing.start_ms && *timing.start_ms < 0) || (timing.end_ms && *timing.end_ms < 0)) {
        throw UsageError("timestamps must be non-negative");
    }
    if (timing.start_ms && timing.end_ms && *timing.end_ms < *timing.start_ms) {
        throw UsageError("end_ms precedes start_ms");
    }
    if (timing.start_ms) {
        for (auto it = state.transcript.turns.rbegin(); it != state.transcript.turns.rend(); ++it) {
            if (!it->start_ms) continue;
            if (*timing.start_ms < *it->start_ms) throw UsageError("start_ms earlier than the previous turn");
            break;
        }
    }

    std::vector<Utterance> out;
    run_until_input(state, out);  // no-op unless the state was built by hand
    if (state.status != SessionStatus::Active) return commit(state, out);

    Turn turn;
    turn.index = state.transcript.turns.size();
    turn.speaker = Speaker::Clinician;
    turn.text = std::string(text);
    turn.start_ms = timing.start_ms;
    turn.end_ms = timing.end_ms;
    state.transcript.turns.push_back(turn);

    const std::size_t depth = state.schema_stack.size() - 1;
    const DialogueSchema& schema = schemas_->at(state.schema_stack[depth].schema_id);
    const auto& expect = std::get<episode::ExpectUser>(schema.episodes[state.schema_stack[depth].episode]);

    const auto gists = extract_gists(rules_->at(expect.interp_tree), text);
    for (const auto& g : gists) state.gist_history.push_back({Speaker::Clinician, g, turn.index});

    const Reaction* fired = nullptr;
    for (const auto& r : expect.reactions) {
        if (any_gist_matches(r.gist_pattern, gists)) {
            fired = &r;
            break;
        }
    }

    auto advance = [&] {
        StackFrame& f = state.schema_stack[depth];
        ++f.episode;
        f.clarified = false;
    };

    // An explicit clarify reaction spends the episode's one clarification too.
    if (fired && std::holds_alternative<action::Clarify>(fired->action) && state.schema_stack[depth].clarified) {
        fired = nullptr;
    }

    if (fired) {
        std::visit(
            [&](const auto& a) {
                using A = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<A, action::Say>) {
                    out.push_back(a.utterance);
                    advance();
                } else if constexpr (std::is_same_v<A, action::Invoke>) {
                    advance();
                    if (!on_stack(state, a.schema_id)) state.schema_stack.push_back({a.schema_id, 0, false});
                } else if constexpr (std::is_same_v<A, action::Continue>) {
                    advance();
                } else {
                    state.schema_stack[depth].clarified = true;
                    out.push_back({schema.clarify_prompt, std::string(kClarifyGist)});
                }
            },
            fired->action);
        if (!std::holds_alternative<action::Clarify>(fired->action)) run_until_input(state, out);
    } else if (!state.schema_stack[depth].clarified) {
        state.schema_stack[depth].clarified = true;
        out.push_back({schema.clarify_prompt, std::string(kClarifyGist)});
    } else {
        out.push_back({schema.default_reaction, std::string(kDefaultReactionGist)});
        advance();
        run_until_input(state, out);
    }

    // A silent Continue straight into another ExpectUser would leave the
    // clinician without a reply.
    if (out.empty() && state.status == SessionStatus::Active) {
        const auto& top = schemas_->at(state.schema_stack.back().schema_id);
        out.push_back({top.default_reaction, std::string(kDefaultReactionGist)});
    }
    return commit(state, out);
}

Transcript DialogueManager::end_session(SessionState& state) const {
    state.status = SessionStatus::Completed;
    return state.transcript;
}

} // namespace sophie
