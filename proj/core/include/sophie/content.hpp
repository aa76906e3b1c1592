#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "sophie/config.hpp"
#include "sophie/dialogue.hpp"
#include "sophie/lexicon.hpp"
#include "sophie/metrics.hpp"
#include "sophie/pattern.hpp"

namespace sophie {

// Everything the dialogue and analysis engines read; immutable once loaded.
struct Content {
    std::shared_ptr<const RuleBase> rules;
    std::shared_ptr<const SchemaLibrary> schemas;
    Lexicons lexicons;
    MetricsConfig metrics;
};

struct Diagnostic {
    std::string file;
    std::size_t line = 0;
    std::string message;
};

std::string describe(const Diagnostic& d);

struct ContentScan {
    std::shared_ptr<RuleBase> rules = std::make_shared<RuleBase>();
    std::shared_ptr<SchemaLibrary> schemas = std::make_shared<SchemaLibrary>();
    std::vector<Diagnostic> diagnostics;

    bool clean() const noexcept { return diagnostics.empty(); }
};

/// Loads every `.rules` and `.json` file under `dir` (recursively), keeping
/// going past errors so all of them are reported.
ContentScan scan_content_dir(const std::filesystem::path& dir);

Lexicons load_lexicons(const Config& cfg, std::vector<std::string>* warnings = nullptr);

// Throws LoadError with the first diagnostic when the content is not clean.
Content load_content(const Config& cfg);

} // namespace sophie
