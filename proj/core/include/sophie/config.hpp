#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

#include "sophie/metrics.hpp"

namespace sophie {

struct Config {
    std::uint16_t port = 8080;
    std::filesystem::path data_dir = "data";
    std::filesystem::path content_dir;
    std::filesystem::path static_dir;
    std::filesystem::path sentiment_lexicon;
    std::filesystem::path empathy_lexicon;
    std::filesystem::path hedge_lexicon;
    std::filesystem::path pronoun_lexicon;
    MetricsConfig metrics;
    std::chrono::hours session_idle_limit{24};
    std::optional<std::filesystem::path> source;  // file the values came from
};

// Environment variable naming the config file.
inline constexpr const char* kConfigEnv = "SOPHIE_CONFIG";

/// Directory holding the bundled content/, lexicons/, fixtures/ and web/.
/// SOPHIE_SHARE_DIR overrides; otherwise the source tree, then the install
/// prefix.
std::filesystem::path default_share_dir();

Config default_config();

/// Reads a key = value file (INI syntax). Relative paths resolve against the
/// file's directory. Unknown keys and bad values throw LoadError.
Config load_config(const std::filesystem::path& path);

/// `explicit_path` (the --config flag) wins over $SOPHIE_CONFIG, which wins
/// over built-in defaults.
Config resolve_config(const std::optional<std::filesystem::path>& explicit_path);

} // namespace sophie
