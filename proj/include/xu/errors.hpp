#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace xu {

// Stable process exit codes, documented in the README and --help output.
enum class ExitCode : int {
    ok = 0,
    config_error = 2,
    model_error = 3,
    oov_query = 4,
    provider_error = 5,
    io_error = 6,
    parse_error = 7,
    expansion_error = 8,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ExitCode code() const { return code_; }

private:
    ExitCode code_;
};

// Query could not be embedded: every token is out of vocabulary.
class OovError : public Error {
public:
    OovError(std::string message, std::vector<std::string> tokens)
        : Error(ExitCode::oov_query, std::move(message)), oov_tokens_(std::move(tokens)) {}

    const std::vector<std::string>& oov_tokens() const { return oov_tokens_; }

private:
    std::vector<std::string> oov_tokens_;
};

// Provider (HTTP or lexicon) failure; carries the query for batch diagnostics.
class ProviderError : public Error {
public:
    ProviderError(std::string message, std::string query)
        : Error(ExitCode::provider_error, std::move(message)), query_(std::move(query)) {}

    const std::string& query() const { return query_; }

private:
    std::string query_;
};

// Boolean-query syntax error with the byte offset of the offending input.
class QueryParseError : public Error {
public:
    QueryParseError(std::string message, std::size_t offset)
        : Error(ExitCode::parse_error, std::move(message)), offset_(offset) {}

    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace xu
