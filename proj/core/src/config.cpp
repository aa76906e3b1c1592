#include "sophie/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sophie/errors.hpp"

namespace sophie {

namespace fs = std::filesystem;

fs::path default_share_dir() {
    if (const char* env = std::getenv("SOPHIE_SHARE_DIR"); env && *env) return env;
    const fs::path build = SOPHIE_BUILD_SHARE_DIR;
    if (fs::exists(build / "content")) return build;
    return SOPHIE_INSTALL_SHARE_DIR;
}

Config default_config() {
    Config c;
    const auto share = default_share_dir();
    c.content_dir = share / "content";
    c.static_dir = share / "web";
    c.sentiment_lexicon = share / "lexicons" / "sentiment.tsv";
    c.empathy_lexicon = share / "lexicons" / "empathy.tsv";
    c.hedge_lexicon = share / "lexicons" / "hedges.txt";
    c.pronoun_lexicon = share / "lexicons" / "pronouns.txt";
    return c;
}

Config load_config(const fs::path& path) {
    namespace pt = boost::property_tree;
    std::ifstream in(path);
    if (!in) throw LoadError(path.string(), 0, "cannot open config file");
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw LoadError(path.string(), e.line(), e.message());
    }

    Config c = default_config();
    c.source = path;
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& v) {
        fs::path p(v);
        return p.is_absolute() ? p : base / p;
    };
    auto number = [&](const std::string& key, const std::string& v) -> long long {
        std::size_t used = 0;
        long long n = 0;
        try {
            n = std::stoll(v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != v.size() || n < 0) throw LoadError(path.string(), 0, key + ": expected a non-negative integer");
        return n;
    };

    std::optional<std::size_t> bins;
    for (const auto& [key, node] : tree) {
        if (!node.empty()) throw LoadError(path.string(), 0, "sections are not supported: [" + key + "]");
        const std::string v = node.get_value<std::string>();
        if (key == "port") {
            const auto n = number(key, v);
            if (n > 65535) throw LoadError(path.string(), 0, "port out of range");
            c.port = static_cast<std::uint16_t>(n);
        } else if (key == "data_dir") {
            c.data_dir = resolve(v);
        } else if (key == "content_dir") {
            c.content_dir = resolve(v);
        } else if (key == "static_dir") {
            c.static_dir = resolve(v);
        } else if (key == "sentiment_lexicon") {
            c.sentiment_lexicon = resolve(v);
        } else if (key == "empathy_lexicon") {
            c.empathy_lexicon = resolve(v);
        } else if (key == "hedge_lexicon") {
            c.hedge_lexicon = resolve(v);
        } else if (key == "pronoun_lexicon") {
            c.pronoun_lexicon = resolve(v);
        } else if (key == "lecture_ms") {
            c.metrics.lecture_ms = number(key, v);
        } else if (key == "lecture_words") {
            c.metrics.lecture_words = static_cast<std::size_t>(number(key, v));
        } else if (key == "trajectory_bins") {
            bins = static_cast<std::size_t>(number(key, v));
        } else if (key == "session_idle_hours") {
            c.session_idle_limit = std::chrono::hours(number(key, v));
        } else if (key == "ideal_trajectory") {
            std::string list = v;
            for (char& ch : list) if (ch == ',') ch = ' ';
            std::istringstream is(list);
            SentimentTrajectory ideal;
            double x = 0;
            while (is >> x) {
                if (x < -1.0 || x > 1.0) throw LoadError(path.string(), 0, "ideal_trajectory values must lie in [-1, 1]");
                ideal.bins.push_back(x);
            }
            if (!is.eof()) throw LoadError(path.string(), 0, "ideal_trajectory: expected numbers");
            if (ideal.bin_count() < 2) throw LoadError(path.string(), 0, "ideal_trajectory needs at least 2 bins");
            c.metrics.ideal = std::move(ideal);
        } else {
            throw LoadError(path.string(), 0, "unknown key \"" + key + "\"");
        }
    }
    if (bins && *bins != c.metrics.trajectory_bins()) {
        throw LoadError(path.string(), 0,
                        "trajectory_bins = " + std::to_string(*bins) + " but ideal_trajectory has " +
                            std::to_string(c.metrics.trajectory_bins()) + " bins");
    }
    return c;
}

Config resolve_config(const std::optional<fs::path>& explicit_path) {
    if (explicit_path) return load_config(*explicit_path);
    if (const char* env = std::getenv(kConfigEnv); env && *env) return load_config(env);
    return default_config();
}

} // namespace sophie
