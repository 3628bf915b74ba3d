#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xu/boolean_query.hpp"
#include "xu/clustering.hpp"
#include "xu/errors.hpp"
#include "xu/ranking.hpp"
#include "xu/suggestions.hpp"
#include "xu/text.hpp"
#include "xu/vector_model.hpp"

namespace xu {

struct PipelineParams {
    std::size_t max_suggestions = 50;
    std::size_t top_n = 25;
    std::size_t clusters = 3;
    std::size_t iterations = 10000;
    std::uint64_t seed = 0;

    void validate() const {
        if (max_suggestions < 1) {
            throw Error(ExitCode::config_error, "max-suggestions must be >= 1");
        }
        if (top_n < 1) {
            throw Error(ExitCode::config_error, "top-n must be >= 1");
        }
        if (top_n > max_suggestions) {
            throw Error(ExitCode::config_error,
                        "top-n (" + std::to_string(top_n) + ") must not exceed max-suggestions (" +
                            std::to_string(max_suggestions) + ")");
        }
        if (clusters < 1) {
            throw Error(ExitCode::config_error, "clusters must be >= 1");
        }
        if (iterations < 1) {
            throw Error(ExitCode::config_error, "iterations must be >= 1");
        }
    }
};

struct ExpansionResult {
    std::string query;
    WordVector query_vector;
    std::vector<Suggestion> suggestions;
    std::size_t oov_suggestions = 0;
    std::vector<RankedWord> selected;
    Grouping grouping;
    QueryAst ast;
    std::string rendered;
    double provider_seconds = 0.0;
    double total_seconds = 0.0;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Rank, cluster, and formulate against an already-fetched suggestion list.
/// Fills every ExpansionResult field except the provider timing.
inline ExpansionResult expand_from_suggestions(const VectorModel& model,
                                               const std::string& query,
                                               std::vector<Suggestion> suggestions,
                                               const PipelineParams& params,
                                               OptimizeStats* stats = nullptr) {
    params.validate();
    const auto t0 = std::chrono::steady_clock::now();
    ExpansionResult result;
    result.query = normalize_phrase(query);
    if (result.query.empty()) {
        throw Error(ExitCode::config_error, "query is empty");
    }
    result.query_vector = model.embed_query(result.query);
    result.suggestions = std::move(suggestions);
    if (result.suggestions.empty()) {
        throw Error(ExitCode::expansion_error,
                    "no suggestions available for query \"" + result.query + "\"");
    }
    for (const auto& s : result.suggestions) {
        if (!model.contains(s.term)) ++result.oov_suggestions;
    }
    result.selected = select_top(model, result.query_vector, result.suggestions, params.top_n);
    if (result.selected.size() < params.clusters) {
        throw Error(ExitCode::expansion_error,
                    "only " + std::to_string(result.selected.size()) +
                        " suggested words are in the model vocabulary; need at least " +
                        std::to_string(params.clusters) + " to fill every cluster");
    }
    std::vector<WordVector> vectors;
    vectors.reserve(result.selected.size());
    for (const auto& rw : result.selected) vectors.push_back(rw.word);
    result.grouping = optimize_grouping(vectors, params.clusters, params.iterations, params.seed,
                                        stats);
    result.ast = formulate(result.grouping);
    result.rendered = render(result.ast);
    result.total_seconds = detail::seconds_since(t0);
    return result;
}

/// Full pipeline: embed the query, fetch suggestions, rank by distance to the
/// query vector, split into clusters, and compose the Boolean query.
inline ExpansionResult expand_query(const VectorModel& model, const SuggestionProvider& provider,
                                    const std::string& query, const PipelineParams& params,
                                    OptimizeStats* stats = nullptr) {
    params.validate();
    const auto t0 = std::chrono::steady_clock::now();
    std::string normalized = normalize_phrase(query);
    if (normalized.empty()) {
        throw Error(ExitCode::config_error, "query is empty");
    }
    // Embed first: an unembeddable query should fail as such even when the
    // provider would also have nothing for it.
    model.embed_query(normalized);
    const auto fetch_t0 = std::chrono::steady_clock::now();
    std::vector<Suggestion> suggestions = provider.suggest(normalized, params.max_suggestions);
    const double provider_seconds = detail::seconds_since(fetch_t0);

    ExpansionResult result =
        expand_from_suggestions(model, normalized, std::move(suggestions), params, stats);
    result.provider_seconds = provider_seconds;
    result.total_seconds = detail::seconds_since(t0);
    return result;
}

/// The unoptimized comparator: every suggestion in one OR group, nothing
/// else. Terms the model has never seen still participate.
inline QueryAst flat_or_expansion(std::span<const Suggestion> suggestions) {
    if (suggestions.empty()) {
        throw Error(ExitCode::expansion_error, "no suggestions to expand");
    }
    OrGroup group;
    group.terms.reserve(suggestions.size());
    for (const auto& s : suggestions) group.terms.push_back(s.term);
    QueryAst ast;
    ast.groups.push_back(std::move(group));
    return normalize(ast);
}

}  // namespace xu
