#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sophie/pattern.hpp"
#include "sophie/transcript.hpp"

namespace sophie {

// Something the patient says, with the gist it stands for.
struct Utterance {
    std::string text;
    std::string gist;
    bool operator==(const Utterance&) const = default;
};

namespace action {
struct Say {
    Utterance utterance;
};
struct Invoke {
    std::string schema_id;
};
struct Continue {};
struct Clarify {};
} // namespace action

using Action = std::variant<action::Say, action::Invoke, action::Continue, action::Clarify>;

struct Reaction {
    Pattern gist_pattern;
    Action action;
};

namespace episode {
struct SystemSay {
    Utterance utterance;
};
struct ExpectUser {
    std::string interp_tree;
    std::vector<Reaction> reactions;
};
struct InvokeSchema {
    std::string schema_id;
    std::optional<Pattern> condition;  // tested against the latest clinician gists
};
} // namespace episode

using Episode = std::variant<episode::SystemSay, episode::ExpectUser, episode::InvokeSchema>;

inline constexpr std::string_view kClarifyGist = "request-clarification";
inline constexpr std::string_view kDefaultReactionGist = "default-reaction";
inline constexpr std::string_view kClosingGist = "closing";

struct DialogueSchema {
    std::string id;
    std::string description;
    std::string default_reaction;
    std::string clarify_prompt;
    std::optional<Utterance> closing;
    std::vector<Episode> episodes;

    bool is_monologue() const noexcept;
};

/// Parses the schema JSON format and checks that every referenced rule tree
/// exists in `rules`. Schema references are checked by SchemaLibrary.
/// Throws LoadError naming `source` and the dangling reference.
DialogueSchema load_schema(std::string_view document, const RuleBase& rules,
                           const std::string& source = "<schema>");
DialogueSchema load_schema_json(const nlohmann::json& doc, const RuleBase& rules,
                           const std::string& source = "<schema>");

class SchemaLibrary {
public:
    void add(DialogueSchema schema);  // throws LoadError on duplicate id
    // Every Invoke target must name a schema in the library.
    void check_references() const;
    const DialogueSchema* find(std::string_view id) const;
    const DialogueSchema& at(std::string_view id) const;
    std::vector<const DialogueSchema*> all() const;
    std::size_t size() const noexcept { return schemas_.size(); }

private:
    std::map<std::string, DialogueSchema, std::less<>> schemas_;
};

enum class SessionStatus { Active, Completed };

std::string_view to_string(SessionStatus s) noexcept;

struct StackFrame {
    std::string schema_id;
    std::size_t episode = 0;
    bool clarified = false;  // one clarification already spent on this episode
    bool operator==(const StackFrame&) const = default;
};

struct GistRecord {
    Speaker speaker;
    std::string gist;
    std::size_t turn_index;
    bool operator==(const GistRecord&) const = default;
};

struct SessionState {
    std::string session_id;
    std::vector<StackFrame> schema_stack;  // back() is the running schema
    std::vector<GistRecord> gist_history;
    Transcript transcript;
    SessionStatus status = SessionStatus::Active;
};

struct TurnTiming {
    std::optional<std::int64_t> start_ms;
    std::optional<std::int64_t> end_ms;
};

struct SessionStart {
    SessionState state;
    std::vector<Turn> opening;
};

std::string make_unique_id(std::string_view prefix);

/// Drives patient behaviour for one or more sessions over a shared, immutable
/// set of schemas and rule trees. The manager itself holds no session state;
/// callers serialize operations on any one SessionState.
class DialogueManager {
public:
    DialogueManager(std::shared_ptr<const SchemaLibrary> schemas,
                    std::shared_ptr<const RuleBase> rules);

    /// Opens a session and emits the schema's leading patient statements.
    /// Throws UsageError for an unknown schema.
    SessionStart start_session(std::string_view schema_id,
                               std::optional<std::string> session_id = std::nullopt) const;

    /// Records the clinician turn, interprets it, and runs the schema until it
    /// next waits for the clinician. Everything the patient says in response
    /// is merged into a single returned turn. Throws StateError on a
    /// completed session and UsageError on empty text or bad timing.
    std::vector<Turn> process_user_turn(SessionState& state, std::string_view text,
                                        TurnTiming timing = {}) const;

    /// Marks the session completed and returns its transcript.
    Transcript end_session(SessionState& state) const;

    const SchemaLibrary& schemas() const noexcept { return *schemas_; }
    const RuleBase& rules() const noexcept { return *rules_; }

private:
    // Emits statements until the running episode expects the clinician or
    // the stack empties.
    void run_until_input(SessionState& state, std::vector<Utterance>& out) const;
    bool on_stack(const SessionState& state, std::string_view schema_id) const;
    std::vector<Turn> commit(SessionState& state, std::vector<Utterance>& out) const;

    std::shared_ptr<const SchemaLibrary> schemas_;
    std::shared_ptr<const RuleBase> rules_;
};

} // namespace sophie
