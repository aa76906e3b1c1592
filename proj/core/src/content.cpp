#include "sophie/content.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "sophie/errors.hpp"

namespace sophie {

namespace fs = std::filesystem;

std::string describe(const Diagnostic& d) {
    return d.file + (d.line ? ":" + std::to_string(d.line) : std::string()) + ": " + d.message;
}

ContentScan scan_content_dir(const fs::path& dir) {
    ContentScan scan;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        scan.diagnostics.push_back({dir.string(), 0, "not a directory"});
        return scan;
    }
    std::vector<fs::path> rule_files;
    std::vector<fs::path> schema_files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension();
        if (ext == ".rules") rule_files.push_back(entry.path());
        else if (ext == ".json") schema_files.push_back(entry.path());
    }
    std::sort(rule_files.begin(), rule_files.end());
    std::sort(schema_files.begin(), schema_files.end());

    for (const auto& p : rule_files) {
        try {
            scan.rules->add(load_rule_file(p));
        } catch (const LoadError& e) {
            scan.diagnostics.push_back({p.string(), e.line(), e.detail()});
        } catch (const UsageError& e) {
            scan.diagnostics.push_back({p.string(), 0, e.what()});
        }
    }

    struct Loaded {
        fs::path file;
        std::vector<std::string> targets;
    };
    std::vector<Loaded> loaded;
    for (const auto& p : schema_files) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        try {
            DialogueSchema s = load_schema(ss.str(), *scan.rules, p.string());
            Loaded l{p, {}};
            for (const auto& ep : s.episodes) {
                if (const auto* inv = std::get_if<episode::InvokeSchema>(&ep)) l.targets.push_back(inv->schema_id);
                if (const auto* ex = std::get_if<episode::ExpectUser>(&ep)) {
                    for (const auto& r : ex->reactions) {
                        if (const auto* a = std::get_if<action::Invoke>(&r.action)) l.targets.push_back(a->schema_id);
                    }
                }
            }
            scan.schemas->add(std::move(s));
            loaded.push_back(std::move(l));
        } catch (const LoadError& e) {
            scan.diagnostics.push_back({p.string(), e.line(), e.detail()});
        }
    }
    for (const auto& l : loaded) {
        for (const auto& target : l.targets) {
            if (!scan.schemas->find(target)) {
                scan.diagnostics.push_back({l.file.string(), 0, "unknown schema \"" + target + "\""});
            }
        }
    }
    return scan;
}

Lexicons load_lexicons(const Config& cfg, std::vector<std::string>* warnings) {
    return {load_lexicon(cfg.sentiment_lexicon, LexiconKind::Sentiment, warnings),
            load_lexicon(cfg.empathy_lexicon, LexiconKind::Empathy, warnings),
            load_lexicon(cfg.hedge_lexicon, LexiconKind::HedgeSet, warnings),
            load_lexicon(cfg.pronoun_lexicon, LexiconKind::PronounSet, warnings)};
}

Content load_content(const Config& cfg) {
    auto scan = scan_content_dir(cfg.content_dir);
    if (!scan.clean()) {
        const auto& d = scan.diagnostics.front();
        throw LoadError(d.file, d.line, d.message);
    }
    return {std::move(scan.rules), std::move(scan.schemas), load_lexicons(cfg), cfg.metrics};
}

} // namespace sophie
