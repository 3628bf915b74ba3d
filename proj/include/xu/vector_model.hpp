#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xu/errors.hpp"
#include "xu/text.hpp"

namespace xu {

/// A word embedding: lowercase token plus its coordinates.
struct WordVector {
    std::string token;
    std::vector<double> components;
};

inline double vec_norm(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

struct ModelLoadStats {
    std::size_t duplicate_tokens = 0;
    std::size_t zero_norm_skipped = 0;
    std::vector<std::string> warnings;
};

/// Immutable token-to-vector map loaded from a text word2vec file.
/// Safe to share across threads once loaded.
class VectorModel {
public:
    VectorModel(std::size_t dimension,
                std::unordered_map<std::string, std::vector<double>> entries,
                ModelLoadStats stats)
        : dimension_(dimension), entries_(std::move(entries)), stats_(std::move(stats)) {}

    std::size_t dimension() const { return dimension_; }
    std::size_t vocab_size() const { return entries_.size(); }
    const ModelLoadStats& load_stats() const { return stats_; }

    /// Case-normalized lookup. Absence is a value, not an error.
    std::optional<WordVector> lookup(std::string_view token) const {
        std::string key = normalize_phrase(token);
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        return WordVector{it->first, it->second};
    }

    bool contains(std::string_view token) const {
        return entries_.find(normalize_phrase(token)) != entries_.end();
    }

    /// Embeds a whitespace-tokenized query as the mean of its in-vocabulary
    /// token vectors. The result's token field is the normalized query.
    /// Throws OovError when no token is in vocabulary.
    WordVector embed_query(std::string_view query) const {
        std::string normalized = normalize_phrase(query);
        std::vector<std::string> tokens = split_whitespace(normalized);
        if (tokens.empty()) {
            throw OovError("query not embeddable: no tokens in \"" + normalized + "\"", {});
        }
        std::vector<double> acc(dimension_, 0.0);
        std::vector<std::string> oov;
        std::size_t hits = 0;
        for (const auto& tok : tokens) {
            auto it = entries_.find(tok);
            if (it == entries_.end()) {
                oov.push_back(tok);
                continue;
            }
            for (std::size_t j = 0; j < dimension_; ++j) acc[j] += it->second[j];
            ++hits;
        }
        if (hits == 0) {
            std::string msg = "query not embeddable: all tokens out of vocabulary:";
            for (const auto& t : oov) msg += " " + t;
            throw OovError(msg, oov);
        }
        for (double& x : acc) x /= static_cast<double>(hits);
        return WordVector{normalized, std::move(acc)};
    }

    /// Every entry, sorted by token so the order never depends on hashing.
    std::vector<WordVector> all_vectors() const {
        std::vector<WordVector> out;
        out.reserve(entries_.size());
        for (const auto& [token, components] : entries_) {
            out.push_back(WordVector{token, components});
        }
        std::sort(out.begin(), out.end(),
                  [](const WordVector& a, const WordVector& b) { return a.token < b.token; });
        return out;
    }

    /// In-vocabulary tokens of the query, in query order, deduplicated.
    std::vector<WordVector> query_token_vectors(std::string_view query) const {
        std::vector<WordVector> out;
        std::vector<std::string> seen;
        for (const auto& tok : split_whitespace(normalize_phrase(query))) {
            if (std::find(seen.begin(), seen.end(), tok) != seen.end()) continue;
            seen.push_back(tok);
            auto it = entries_.find(tok);
            if (it != entries_.end()) out.push_back(WordVector{it->first, it->second});
        }
        return out;
    }

private:
    std::size_t dimension_;
    std::unordered_map<std::string, std::vector<double>> entries_;
    ModelLoadStats stats_;
};

namespace detail {

inline bool parse_double(std::string_view text, double& out) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

}  // namespace detail

/// Loads a text word2vec model: first line "vocab_size dimension", then one
/// "token c1 ... cd" line per word. Zero-norm rows are skipped with a
/// warning; duplicate tokens keep the first occurrence.
inline VectorModel load_model(const std::string& path,
                              std::optional<std::size_t> expected_dim = std::nullopt) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ExitCode::model_error, "cannot open model file: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ExitCode::model_error, "malformed header: empty model file " + path);
    }
    auto header = split_whitespace(line);
    std::size_t declared_vocab = 0;
    std::size_t dimension = 0;
    auto parse_count = [](const std::string& s, std::size_t& out) {
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        return ec == std::errc() && ptr == s.data() + s.size();
    };
    if (header.size() != 2 || !parse_count(header[0], declared_vocab) ||
        !parse_count(header[1], dimension) || dimension == 0) {
        throw Error(ExitCode::model_error,
                    "malformed header: expected \"vocab_size dimension\", got \"" + line + "\"");
    }
    if (expected_dim && *expected_dim != dimension) {
        throw Error(ExitCode::model_error,
                    "dimension mismatch: header says " + std::to_string(dimension) +
                        ", expected " + std::to_string(*expected_dim));
    }

    std::unordered_map<std::string, std::vector<double>> entries;
    entries.reserve(declared_vocab);
    ModelLoadStats stats;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_whitespace(line);
        if (fields.empty()) continue;
        if (fields.size() != dimension + 1) {
            throw Error(ExitCode::model_error,
                        "component count mismatch at line " + std::to_string(line_no) +
                            ": expected " + std::to_string(dimension) + " components, got " +
                            std::to_string(fields.size() - 1));
        }
        std::vector<double> components(dimension);
        for (std::size_t j = 0; j < dimension; ++j) {
            if (!detail::parse_double(fields[j + 1], components[j])) {
                throw Error(ExitCode::model_error,
                            "non-numeric component at line " + std::to_string(line_no) + ": \"" +
                                fields[j + 1] + "\"");
            }
        }
        std::string token = normalize_phrase(fields[0]);
        if (token.empty()) {
            stats.warnings.push_back("line " + std::to_string(line_no) + ": empty token skipped");
            continue;
        }
        if (vec_norm(components) == 0.0) {
            ++stats.zero_norm_skipped;
            stats.warnings.push_back("line " + std::to_string(line_no) + ": zero-norm vector for \"" +
                                     token + "\" skipped");
            continue;
        }
        auto [it, inserted] = entries.emplace(std::move(token), std::move(components));
        if (!inserted) {
            ++stats.duplicate_tokens;
            stats.warnings.push_back("line " + std::to_string(line_no) + ": duplicate token \"" +
                                     it->first + "\" ignored (first occurrence kept)");
        }
    }
    if (entries.empty()) {
        throw Error(ExitCode::model_error, "empty vocabulary after filtering: " + path);
    }
    return VectorModel(dimension, std::move(entries), std::move(stats));
}

}  // namespace xu
