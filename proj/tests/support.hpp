#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "sophie/config.hpp"
#include "sophie/content.hpp"
#include "sophie/transcript.hpp"

namespace sophie::testing {

namespace fs = std::filesystem;

inline fs::path source_dir() { return SOPHIE_SOURCE_DIR; }
inline fs::path fixture_path(const std::string& name) { return source_dir() / "fixtures" / name; }

inline std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const fs::path& p, const std::string& s) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << s;
}

inline Transcript fixture(const std::string& name) { return parse_transcript(read_text(fixture_path(name))); }

inline Config bundled_config() {
    Config cfg = default_config();
    cfg.content_dir = source_dir() / "content";
    cfg.static_dir = source_dir() / "web";
    cfg.sentiment_lexicon = source_dir() / "lexicons" / "sentiment.tsv";
    cfg.empathy_lexicon = source_dir() / "lexicons" / "empathy.tsv";
    cfg.hedge_lexicon = source_dir() / "lexicons" / "hedges.txt";
    cfg.pronoun_lexicon = source_dir() / "lexicons" / "pronouns.txt";
    return cfg;
}

inline const Content& bundled() {
    static const Content c = load_content(bundled_config());
    return c;
}

// Removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() /
                ("sophie-test-" + std::to_string(::getpid()) + "-" + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& s) const { return path_ / s; }

private:
    fs::path path_;
};

// The three clinician lines of the sample excerpt.
inline const std::vector<std::string>& excerpt_clinician_lines() {
    static const std::vector<std::string> lines = {
        "So unfortunately Sophie I have some bad news. It looks like the cancer has grown and spread.",
        "How much information would you like to know about the prognosis?",
        "What concerns do you have about the future?",
    };
    return lines;
}

} // namespace sophie::testing
