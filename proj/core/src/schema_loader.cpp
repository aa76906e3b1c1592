#include <algorithm>

#include "sophie/dialogue.hpp"
#include "sophie/errors.hpp"

namespace sophie {

namespace {

using nlohmann::json;

struct Loader {
    const RuleBase& rules;
    const std::string& source;

    [[noreturn]] void fail(const std::string& message) const { throw LoadError(source, 0, message); }

    std::string required_string(const json& obj, const char* key, const std::string& where) const {
        auto it = obj.find(key);
        if (it == obj.end() || !it->is_string() || it->get<std::string>().empty()) {
            fail(where + ": \"" + key + "\" must be a non-empty string");
        }
        return it->get<std::string>();
    }

    Utterance utterance(const json& j, const std::string& where) const {
        if (!j.is_object()) fail(where + ": expected {\"text\", \"gist\"}");
        return {required_string(j, "text", where), required_string(j, "gist", where)};
    }

    Pattern pattern(const json& j, const std::string& where) const {
        if (!j.is_string()) fail(where + ": pattern must be a string");
        try {
            return parse_pattern(j.get<std::string>());
        } catch (const UsageError& e) {
            fail(where + ": " + e.what());
        }
    }

    Action parse_action(const json& j, const std::string& where) const {
        if (j.is_string()) {
            const auto s = j.get<std::string>();
            if (s == "continue") return action::Continue{};
            if (s == "clarify") return action::Clarify{};
            fail(where + ": unknown action \"" + s + "\"");
        }
        if (j.is_object() && j.size() == 1) {
            if (auto it = j.find("say"); it != j.end()) return action::Say{utterance(*it, where + ".say")};
            if (auto it = j.find("invoke"); it != j.end()) {
                if (!it->is_string() || it->get<std::string>().empty()) fail(where + ".invoke: expected a schema id");
                return action::Invoke{it->get<std::string>()};
            }
        }
        fail(where + ": action must be {\"say\": ...}, {\"invoke\": id}, \"continue\" or \"clarify\"");
    }

    Episode parse_episode(const json& j, const std::string& where) const {
        if (!j.is_object() || j.size() != 1) fail(where + ": episode must have exactly one key");
        if (auto it = j.find("say"); it != j.end()) return episode::SystemSay{utterance(*it, where + ".say")};
        if (auto it = j.find("expect_user"); it != j.end()) {
            const json& e = *it;
            if (!e.is_object()) fail(where + ".expect_user: expected an object");
            episode::ExpectUser ex;
            ex.interp_tree = required_string(e, "interp_tree", where + ".expect_user");
            if (!rules.contains(ex.interp_tree)) {
                fail(where + ": unknown rule tree \"" + ex.interp_tree + "\"");
            }
            auto rs = e.find("reactions");
            if (rs == e.end() || !rs->is_array() || rs->empty()) {
                fail(where + ".expect_user: reactions must be a non-empty array");
            }
            for (std::size_t k = 0; k < rs->size(); ++k) {
                const std::string rw = where + ".reactions[" + std::to_string(k) + "]";
                const json& r = (*rs)[k];
                if (!r.is_object() || !r.contains("gist_pattern") || !r.contains("action")) {
                    fail(rw + ": expected {\"gist_pattern\", \"action\"}");
                }
                ex.reactions.push_back({pattern(r["gist_pattern"], rw + ".gist_pattern"),
                                        parse_action(r["action"], rw + ".action")});
            }
            return ex;
        }
        if (auto it = j.find("invoke"); it != j.end()) {
            const json& e = *it;
            if (!e.is_object()) fail(where + ".invoke: expected an object");
            episode::InvokeSchema inv;
            inv.schema_id = required_string(e, "schema", where + ".invoke");
            if (auto c = e.find("condition"); c != e.end() && !c->is_null()) {
                inv.condition = pattern(*c, where + ".invoke.condition");
            }
            return inv;
        }
        fail(where + ": unknown episode type \"" + j.begin().key() + "\"");
    }
};

} // namespace

bool DialogueSchema::is_monologue() const noexcept {
    return std::none_of(episodes.begin(), episodes.end(), [](const Episode& e) {
        return std::holds_alternative<episode::ExpectUser>(e);
    });
}

DialogueSchema load_schema_json(const nlohmann::json& doc, const RuleBase& rules, const std::string& source) {
    Loader ld{rules, source};
    if (!doc.is_object()) ld.fail("schema document must be an object");
    DialogueSchema s;
    s.id = ld.required_string(doc, "id", "schema");
    s.description = doc.value("description", std::string());
    s.default_reaction = ld.required_string(doc, "default_reaction", "schema");
    s.clarify_prompt = doc.value("clarify", std::string(
        "I'm sorry, I didn't quite follow that. Could you say it another way?"));
    if (auto c = doc.find("closing"); c != doc.end() && !c->is_null()) {
        s.closing = ld.utterance(*c, "closing");
    }
    auto eps = doc.find("episodes");
    if (eps == doc.end() || !eps->is_array() || eps->empty()) ld.fail("episodes must be a non-empty array");
    for (std::size_t i = 0; i < eps->size(); ++i) {
        s.episodes.push_back(ld.parse_episode((*eps)[i], "episodes[" + std::to_string(i) + "]"));
    }
    return s;
}

DialogueSchema load_schema(std::string_view document, const RuleBase& rules, const std::string& source) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(document.begin(), document.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw LoadError(source, 0, std::string("malformed JSON at byte ") + std::to_string(e.byte));
    }
    return load_schema_json(doc, rules, source);
}

void SchemaLibrary::add(DialogueSchema schema) {
    if (schemas_.count(schema.id)) throw LoadError(schema.id, 0, "duplicate schema id \"" + schema.id + "\"");
    auto id = schema.id;
    schemas_.emplace(std::move(id), std::move(schema));
}

void SchemaLibrary::check_references() const {
    auto check = [&](const DialogueSchema& s, const std::string& target) {
        if (!schemas_.count(target)) throw LoadError(s.id, 0, "unknown schema \"" + target + "\"");
    };
    for (const auto& [id, s] : schemas_) {
        for (const auto& ep : s.episodes) {
            if (const auto* inv = std::get_if<episode::InvokeSchema>(&ep)) check(s, inv->schema_id);
            if (const auto* ex = std::get_if<episode::ExpectUser>(&ep)) {
                for (const auto& r : ex->reactions) {
                    if (const auto* a = std::get_if<action::Invoke>(&r.action)) check(s, a->schema_id);
                }
            }
        }
    }
}

const DialogueSchema* SchemaLibrary::find(std::string_view id) const {
    auto it = schemas_.find(id);
    return it == schemas_.end() ? nullptr : &it->second;
}

const DialogueSchema& SchemaLibrary::at(std::string_view id) const {
    if (const auto* s = find(id)) return *s;
    throw UsageError("unknown schema \"" + std::string(id) + "\"");
}

std::vector<const DialogueSchema*> SchemaLibrary::all() const {
    std::vector<const DialogueSchema*> out;
    for (const auto& [_, s] : schemas_) out.push_back(&s);
    return out;
}

} // namespace sophie
