#pragma once

#include <chrono>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <vector>

#include "httplib.h"
#include "nlohmann/json.hpp"

#include "xu/errors.hpp"
#include "xu/text.hpp"

namespace xu {

/// One candidate related word. provider_rank is the 0-based position in the
/// provider's response, before deduplication, so ranks can have gaps but are
/// strictly increasing within one response.
struct Suggestion {
    std::string term;
    std::size_t provider_rank = 0;
    std::optional<double> provider_score;
};

/// Pluggable source of related words. Implementations must be safe for
/// concurrent use; the pipeline shares one provider across worker threads.
class SuggestionProvider {
public:
    virtual ~SuggestionProvider() = default;
    virtual std::vector<Suggestion> suggest(const std::string& query, std::size_t max_n) const = 0;
};

namespace detail {

// Normalize raw (term, score) rows: lowercase, drop empties, dedup keeping
// the earliest rank, cap at max_n.
inline std::vector<Suggestion> normalize_rows(
    const std::vector<std::pair<std::string, std::optional<double>>>& rows, std::size_t max_n) {
    std::vector<Suggestion> out;
    std::unordered_set<std::string> seen;
    for (std::size_t rank = 0; rank < rows.size(); ++rank) {
        if (out.size() >= max_n) break;
        std::string term = normalize_phrase(rows[rank].first);
        if (term.empty()) continue;
        if (!seen.insert(term).second) continue;
        out.push_back(Suggestion{std::move(term), rank, rows[rank].second});
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Local lexicon: deterministic offline provider.
// File format: UTF-8 JSON object, query string -> array of suggestion strings.
// ---------------------------------------------------------------------------

struct LocalLexicon {
    std::map<std::string, std::vector<std::string>> entries;
};

inline LocalLexicon load_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ExitCode::io_error, "cannot open lexicon file: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw Error(ExitCode::io_error, "malformed lexicon JSON: " + path);
    }
    LocalLexicon lex;
    for (const auto& [key, value] : doc.items()) {
        if (!value.is_array()) {
            throw Error(ExitCode::io_error, "lexicon entry for \"" + key + "\" is not an array");
        }
        std::vector<std::string> terms;
        std::unordered_set<std::string> seen;
        for (const auto& item : value) {
            if (!item.is_string()) {
                throw Error(ExitCode::io_error, "lexicon entry for \"" + key + "\" has a non-string term");
            }
            std::string term = normalize_phrase(item.get<std::string>());
            if (term.empty() || !seen.insert(term).second) continue;
            terms.push_back(std::move(term));
        }
        lex.entries[normalize_phrase(key)] = std::move(terms);
    }
    return lex;
}

/// Pure prefix lookup: first max_n stored terms for the normalized query;
/// unknown queries yield the empty list.
inline std::vector<Suggestion> fetch_local(const LocalLexicon& lexicon, std::string_view query,
                                           std::size_t max_n) {
    auto it = lexicon.entries.find(normalize_phrase(query));
    std::vector<Suggestion> out;
    if (it == lexicon.entries.end()) return out;
    for (std::size_t rank = 0; rank < it->second.size() && rank < max_n; ++rank) {
        out.push_back(Suggestion{it->second[rank], rank, std::nullopt});
    }
    return out;
}

class LocalProvider : public SuggestionProvider {
public:
    explicit LocalProvider(LocalLexicon lexicon) : lexicon_(std::move(lexicon)) {}

    std::vector<Suggestion> suggest(const std::string& query, std::size_t max_n) const override {
        return fetch_local(lexicon_, query, max_n);
    }

private:
    LocalLexicon lexicon_;
};

// ---------------------------------------------------------------------------
// Datamuse client.
// ---------------------------------------------------------------------------

struct DatamuseConfig {
    std::string base_url = "https://api.datamuse.com";
    std::size_t max_retries = 3;              // additional attempts after the first
    std::chrono::milliseconds backoff{250};   // doubled per retry
    std::size_t max_in_flight = 4;
    std::chrono::seconds timeout{10};
};

/// Parses a Datamuse /words response body: JSON array of {"word", "score"?}.
inline std::vector<Suggestion> parse_datamuse_response(std::string_view body, std::size_t max_n,
                                                       const std::string& query) {
    nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
        throw ProviderError("malformed Datamuse JSON for query \"" + query + "\"", query);
    }
    std::vector<std::pair<std::string, std::optional<double>>> rows;
    rows.reserve(doc.size());
    for (const auto& item : doc) {
        if (!item.is_object() || !item.contains("word") || !item["word"].is_string()) {
            throw ProviderError("malformed Datamuse row for query \"" + query + "\"", query);
        }
        std::optional<double> score;
        if (item.contains("score") && item["score"].is_number()) {
            score = item["score"].get<double>();
        }
        rows.emplace_back(item["word"].get<std::string>(), score);
    }
    return detail::normalize_rows(rows, max_n);
}

namespace detail {

inline std::string url_encode(std::string_view s) {
    static const char hex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
            c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return out;
}

}  // namespace detail

/// Live HTTP client for the Datamuse words endpoint (means-like mode).
/// Concurrency-capped via a counting semaphore; retries transient failures
/// with exponential backoff.
class DatamuseClient : public SuggestionProvider {
public:
    explicit DatamuseClient(DatamuseConfig config = {})
        : config_(std::move(config)),
          in_flight_(static_cast<std::ptrdiff_t>(config_.max_in_flight)) {}

    std::vector<Suggestion> suggest(const std::string& query, std::size_t max_n) const override {
        return fetch(query, max_n);
    }

    std::vector<Suggestion> fetch(const std::string& query, std::size_t max_n) const {
        std::string normalized = normalize_phrase(query);
        std::string path = "/words?ml=" + detail::url_encode(normalized) +
                           "&max=" + std::to_string(max_n);
        std::string last_error;
        for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(config_.backoff * (1u << (attempt - 1)));
            }
            in_flight_.acquire();
            httplib::Result res = [&] {
                httplib::Client client(config_.base_url);
                client.set_connection_timeout(config_.timeout);
                client.set_read_timeout(config_.timeout);
                client.set_follow_location(true);
                return client.Get(path);
            }();
            in_flight_.release();
            if (!res) {
                last_error = "connection failure (" + httplib::to_string(res.error()) + ")";
                continue;  // transient
            }
            if (res->status >= 500 || res->status == 429) {
                last_error = "HTTP status " + std::to_string(res->status);
                continue;  // transient
            }
            if (res->status != 200) {
                throw ProviderError("Datamuse returned HTTP " + std::to_string(res->status) +
                                        " for query \"" + normalized + "\"",
                                    normalized);
            }
            return parse_datamuse_response(res->body, max_n, normalized);
        }
        throw ProviderError("Datamuse request failed after " +
                                std::to_string(config_.max_retries + 1) + " attempts for query \"" +
                                normalized + "\": " + last_error,
                            normalized);
    }

    const DatamuseConfig& config() const { return config_; }

private:
    DatamuseConfig config_;
    mutable std::counting_semaphore<256> in_flight_;
};

}  // namespace xu
