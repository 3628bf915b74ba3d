#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "xu/errors.hpp"
#include "xu/suggestions.hpp"
#include "xu/vector_model.hpp"

namespace xu {

/// A suggestion that survived vector lookup, with its Euclidean distance to
/// the query vector. Lower distance means more similar.
struct RankedWord {
    WordVector word;
    double distance = 0.0;
};

inline double word_distance(const WordVector& w, const WordVector& i) {
    if (w.components.size() != i.components.size()) {
        throw Error(ExitCode::config_error,
                    "dimension mismatch: " + std::to_string(w.components.size()) + " vs " +
                        std::to_string(i.components.size()));
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < w.components.size(); ++j) {
        double d = w.components[j] - i.components[j];
        acc += d * d;
    }
    return std::sqrt(acc);
}

/// Mean distance of a candidate set to the query vector. Lower means the set
/// as a whole sits nearer the query.
inline double set_similarity_score(std::span<const WordVector> candidates, const WordVector& i) {
    if (candidates.empty()) {
        throw Error(ExitCode::config_error, "set_similarity_score: empty candidate set");
    }
    double acc = 0.0;
    for (const auto& w : candidates) acc += word_distance(w, i);
    return acc / static_cast<double>(candidates.size());
}

/// Drops out-of-vocabulary suggestions, ranks the rest by ascending distance
/// to the query vector (ties lexicographic), and returns at most n. An empty
/// result means the expansion is degraded; callers decide what to do.
inline std::vector<RankedWord> select_top(const VectorModel& model, const WordVector& query_vec,
                                          std::span<const Suggestion> suggestions, std::size_t n) {
    if (n == 0) {
        throw Error(ExitCode::config_error, "select_top: n must be >= 1");
    }
    std::vector<RankedWord> ranked;
    ranked.reserve(suggestions.size());
    for (const auto& s : suggestions) {
        auto wv = model.lookup(s.term);
        if (!wv) continue;
        double d = word_distance(*wv, query_vec);
        ranked.push_back(RankedWord{std::move(*wv), d});
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedWord& a, const RankedWord& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.word.token < b.word.token;
    });
    if (ranked.size() > n) ranked.resize(n);
    return ranked;
}

}  // namespace xu
