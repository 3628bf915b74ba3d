#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <string>
#include <vector>

#include "../support/test_util.hpp"
#include "xu/pipeline.hpp"

using namespace xu;
using testutil::TempFile;

namespace {

struct Fixture {
    VectorModel model = load_model(testutil::fixture_path("model.txt"));
    LocalProvider provider{load_lexicon(testutil::fixture_path("lexicon.json"))};
};

std::vector<std::string> all_terms(const QueryAst& ast) {
    std::vector<std::string> out;
    for (const auto& g : ast.groups) {
        out.insert(out.end(), g.terms.begin(), g.terms.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("params validate their ranges") {
    PipelineParams p;
    CHECK_NOTHROW(p.validate());

    PipelineParams bad = p;
    bad.max_suggestions = 0;
    CHECK_THROWS_AS(bad.validate(), Error);

    bad = p;
    bad.top_n = 0;
    CHECK_THROWS_AS(bad.validate(), Error);

    bad = p;
    bad.top_n = bad.max_suggestions + 1;
    try {
        bad.validate();
        FAIL("expected Error");
    } catch (const Error& e) {
        CHECK(e.code() == ExitCode::config_error);
        CHECK(std::string(e.what()).find("must not exceed") != std::string::npos);
    }

    bad = p;
    bad.clusters = 0;
    CHECK_THROWS_AS(bad.validate(), Error);

    bad = p;
    bad.iterations = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("expand_query runs the storm fixture end to end") {
    Fixture f;
    PipelineParams params;
    params.iterations = 1000;
    params.seed = 7;

    ExpansionResult r = expand_query(f.model, f.provider, "  Storm ", params);

    CHECK(r.query == "storm");
    CHECK(r.query_vector.components == std::vector<double>{0, 0, 0, 2, 0, 0, 0, 0});
    CHECK(r.suggestions.size() == 10);
    CHECK(r.oov_suggestions == 1);  // zzyzx has no vector
    CHECK(r.selected.size() == 9);
    REQUIRE(r.grouping.clusters.size() == 3);

    // The AST partitions exactly the selected words.
    std::vector<std::string> selected_tokens;
    for (const auto& rw : r.selected) selected_tokens.push_back(rw.word.token);
    std::sort(selected_tokens.begin(), selected_tokens.end());
    CHECK(all_terms(r.ast) == selected_tokens);

    QueryAst reparsed = parse(r.rendered);
    CHECK(structurally_equal(reparsed, r.ast));

    CHECK(r.provider_seconds >= 0.0);
    CHECK(r.total_seconds >= r.provider_seconds);
}

TEST_CASE("expand_query is deterministic for a fixed seed") {
    Fixture f;
    PipelineParams params;
    params.iterations = 1000;
    params.seed = 7;

    ExpansionResult a = expand_query(f.model, f.provider, "storm", params);
    ExpansionResult b = expand_query(f.model, f.provider, "storm", params);
    CHECK(a.rendered == b.rendered);
    CHECK(a.grouping.score == b.grouping.score);
}

TEST_CASE("multi-word queries embed as token means") {
    Fixture f;
    PipelineParams params;
    params.iterations = 500;

    ExpansionResult r = expand_query(f.model, f.provider, "sea voyage", params);
    CHECK(r.query_vector.components == std::vector<double>{0, 0, 0, 0, 0, 0, 1.5, 0});
    CHECK(r.selected.size() == 9);
}

TEST_CASE("top_n caps the selected words") {
    Fixture f;
    PipelineParams params;
    params.max_suggestions = 10;
    params.top_n = 3;
    params.clusters = 2;
    params.iterations = 200;

    ExpansionResult r = expand_query(f.model, f.provider, "storm", params);
    CHECK(r.selected.size() == 3);
    CHECK(all_terms(r.ast).size() == 3);
}

TEST_CASE("max_suggestions caps the provider fetch") {
    Fixture f;
    PipelineParams params;
    params.max_suggestions = 4;
    params.top_n = 4;
    params.clusters = 2;
    params.iterations = 200;

    ExpansionResult r = expand_query(f.model, f.provider, "storm", params);
    CHECK(r.suggestions.size() == 4);
}

TEST_CASE("unembeddable queries fail as such even without suggestions") {
    Fixture f;
    PipelineParams params;

    // Provider knows the word, the model does not.
    TempFile lex(R"({"zzfoo": ["gale", "thunder", "grain"]})", ".json");
    LocalProvider knows(load_lexicon(lex.path()));
    CHECK_THROWS_AS(expand_query(f.model, knows, "zzfoo", params), OovError);

    // Neither knows the word: the embedding failure wins.
    CHECK_THROWS_AS(expand_query(f.model, knows, "zzbar", params), OovError);
}

TEST_CASE("an embeddable query without suggestions is an expansion failure") {
    Fixture f;
    PipelineParams params;
    try {
        expand_query(f.model, f.provider, "gale", params);
        FAIL("expected Error");
    } catch (const Error& e) {
        CHECK(e.code() == ExitCode::expansion_error);
        CHECK(std::string(e.what()).find("no suggestions") != std::string::npos);
    }
}

TEST_CASE("empty queries are rejected") {
    Fixture f;
    PipelineParams params;
    try {
        expand_query(f.model, f.provider, "   ", params);
        FAIL("expected Error");
    } catch (const Error& e) {
        CHECK(e.code() == ExitCode::config_error);
    }
}

TEST_CASE("too few in-vocabulary suggestions for the cluster count") {
    Fixture f;
    PipelineParams params;
    params.clusters = 5;  // oracle has only 4 suggestions
    try {
        expand_query(f.model, f.provider, "oracle", params);
        FAIL("expected Error");
    } catch (const Error& e) {
        CHECK(e.code() == ExitCode::expansion_error);
        CHECK(std::string(e.what()).find("need at least 5") != std::string::npos);
    }
}

TEST_CASE("expand_from_suggestions fills optimizer stats") {
    Fixture f;
    PipelineParams params;
    params.iterations = 500;

    std::vector<Suggestion> suggestions;
    for (const char* term : {"gale", "squall", "tempest", "thunder", "lightning", "drizzle"}) {
        suggestions.push_back(Suggestion{term, suggestions.size(), std::nullopt});
    }

    OptimizeStats stats;
    ExpansionResult r = expand_from_suggestions(f.model, "storm", suggestions, params, &stats);
    CHECK(r.selected.size() == 6);
    CHECK_FALSE(stats.climbs.empty());
    CHECK_FALSE(stats.best_trace.empty());
    CHECK(r.oov_suggestions == 0);
}

TEST_CASE("flat_or_expansion folds every suggestion into one group") {
    std::vector<Suggestion> suggestions = {
        {"Gale", 0, std::nullopt},
        {"thunder", 1, std::nullopt},
        {"gale", 2, std::nullopt},     // duplicate after normalization
        {"sheet music", 3, std::nullopt},
    };
    QueryAst ast = flat_or_expansion(suggestions);
    REQUIRE(ast.groups.size() == 1);
    CHECK(ast.groups[0].terms == std::vector<std::string>{"gale", "thunder", "sheet music"});

    CHECK_THROWS_AS(flat_or_expansion(std::vector<Suggestion>{}), Error);
}
