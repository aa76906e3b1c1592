#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "sophie/config.hpp"
#include "sophie/content.hpp"
#include "sophie/metrics.hpp"
#include "sophie/pattern.hpp"
#include "sophie/text.hpp"

namespace {

const sophie::Content& content() {
    static const sophie::Content c = [] {
        sophie::Config cfg = sophie::default_config();
        const std::filesystem::path src = SOPHIE_SOURCE_DIR;
        cfg.content_dir = src / "content";
        cfg.sentiment_lexicon = src / "lexicons/sentiment.tsv";
        cfg.empathy_lexicon = src / "lexicons/empathy.tsv";
        cfg.hedge_lexicon = src / "lexicons/hedges.txt";
        cfg.pronoun_lexicon = src / "lexicons/pronouns.txt";
        return sophie::load_content(cfg);
    }();
    return c;
}

void BM_MatchWildcards(benchmark::State& state) {
    const auto p = sophie::parse_pattern("* cancer * spread *");
    std::vector<std::string> tokens(static_cast<std::size_t>(state.range(0)), "word");
    tokens.insert(tokens.begin() + tokens.size() / 2, "cancer");
    tokens.push_back("spread");
    for (auto _ : state) benchmark::DoNotOptimize(sophie::match(p, tokens));
}
BENCHMARK(BM_MatchWildcards)->Range(8, 512);

void BM_TransduceBadNews(benchmark::State& state) {
    const auto* tree = content().rules->find("bad-news");
    const auto tokens = sophie::tokenize("So unfortunately Sophie I have some bad news. It looks like the cancer has grown and spread.");
    for (auto _ : state) benchmark::DoNotOptimize(sophie::transduce(*tree, tokens));
}
BENCHMARK(BM_TransduceBadNews);

void BM_ComputeReport(benchmark::State& state) {
    std::ifstream in(std::filesystem::path(SOPHIE_SOURCE_DIR) / "fixtures/high_low_high.json");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto t = sophie::parse_transcript(ss.str());
    const auto& c = content();
    for (auto _ : state) benchmark::DoNotOptimize(sophie::compute_report(t, c.lexicons, *c.rules, c.metrics));
}
BENCHMARK(BM_ComputeReport);

} // namespace

BENCHMARK_MAIN();
