#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xu/clustering.hpp"
#include "xu/errors.hpp"
#include "xu/ranking.hpp"
#include "xu/text.hpp"

namespace xu {

/// Terms joined by OR: any one of them satisfies the group.
struct OrGroup {
    std::vector<std::string> terms;
};

/// Conjunction of OR-groups: every group must be satisfied.
struct QueryAst {
    std::vector<OrGroup> groups;
};

struct Document {
    std::string id;
    std::string title;
    std::string text;
};

/// Lowercases and whitespace-collapses every term and drops in-group
/// duplicates (first kept). Throws if a group or term comes out empty.
inline QueryAst normalize(const QueryAst& ast) {
    if (ast.groups.empty()) {
        throw Error(ExitCode::parse_error, "query has no groups");
    }
    QueryAst out;
    out.groups.reserve(ast.groups.size());
    for (const auto& group : ast.groups) {
        OrGroup g;
        for (const auto& term : group.terms) {
            std::string t = normalize_phrase(term);
            if (t.empty()) {
                throw Error(ExitCode::parse_error, "empty term in group");
            }
            if (std::find(g.terms.begin(), g.terms.end(), t) == g.terms.end()) {
                g.terms.push_back(std::move(t));
            }
        }
        if (g.terms.empty()) {
            throw Error(ExitCode::parse_error, "empty group");
        }
        out.groups.push_back(std::move(g));
    }
    return out;
}

inline bool structurally_equal(const QueryAst& a, const QueryAst& b) {
    if (a.groups.size() != b.groups.size()) return false;
    for (std::size_t i = 0; i < a.groups.size(); ++i) {
        if (a.groups[i].terms != b.groups[i].terms) return false;
    }
    return true;
}

/// Renders `('t1' OR 't2') AND ('t3')`. Byte-deterministic for a given AST.
inline std::string render(const QueryAst& ast) {
    if (ast.groups.empty()) {
        throw Error(ExitCode::parse_error, "render: query has no groups");
    }
    std::string out;
    for (std::size_t gi = 0; gi < ast.groups.size(); ++gi) {
        const auto& group = ast.groups[gi];
        if (group.terms.empty()) {
            throw Error(ExitCode::parse_error, "render: empty group");
        }
        if (gi > 0) out += " AND ";
        out += '(';
        for (std::size_t ti = 0; ti < group.terms.size(); ++ti) {
            const auto& term = group.terms[ti];
            if (term.find('\'') != std::string::npos) {
                throw Error(ExitCode::parse_error,
                            "render: term contains a single quote: " + term);
            }
            if (ti > 0) out += " OR ";
            out += '\'';
            out += term;
            out += '\'';
        }
        out += ')';
    }
    return out;
}

namespace detail {

struct Token {
    enum class Kind { lparen, rparen, term, kw_and, kw_or, kw_unsupported, end };
    Kind kind;
    std::string text;
    std::size_t offset;
};

inline std::vector<Token> lex_query(std::string_view input) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    auto is_bare_char = [](unsigned char c) {
        return !is_space(c) && c != '(' && c != ')' && c != '\'';
    };
    while (i < input.size()) {
        unsigned char c = static_cast<unsigned char>(input[i]);
        if (is_space(c)) {
            ++i;
            continue;
        }
        if (c == '(') {
            tokens.push_back({Token::Kind::lparen, "(", i});
            ++i;
        } else if (c == ')') {
            tokens.push_back({Token::Kind::rparen, ")", i});
            ++i;
        } else if (c == '\'') {
            std::size_t start = i;
            std::size_t close = input.find('\'', i + 1);
            if (close == std::string_view::npos) {
                throw QueryParseError("unterminated quote at byte " + std::to_string(start), start);
            }
            tokens.push_back(
                {Token::Kind::term, std::string(input.substr(i + 1, close - i - 1)), start});
            i = close + 1;
        } else {
            std::size_t start = i;
            while (i < input.size() && is_bare_char(static_cast<unsigned char>(input[i]))) ++i;
            std::string word(input.substr(start, i - start));
            std::string lowered = to_lower(word);
            if (lowered == "and") {
                tokens.push_back({Token::Kind::kw_and, std::move(word), start});
            } else if (lowered == "or") {
                tokens.push_back({Token::Kind::kw_or, std::move(word), start});
            } else if (lowered == "not" || lowered == "near") {
                tokens.push_back({Token::Kind::kw_unsupported, std::move(word), start});
            } else {
                tokens.push_back({Token::Kind::term, std::move(word), start});
            }
        }
    }
    tokens.push_back({Token::Kind::end, "", input.size()});
    return tokens;
}

}  // namespace detail

/// Parses the AND-of-OR-groups grammar:
///   query := group { "AND" group }
///   group := "(" term { "OR" term } ")" | term
///   term  := "'" phrase "'" | bare-word
/// Keywords are case-insensitive; bare single terms act as one-term groups;
/// flat mixed operator expressions are rejected as ambiguous. Errors carry
/// the byte offset of the offending input.
inline QueryAst parse(std::string_view input) {
    auto tokens = detail::lex_query(input);
    std::size_t pos = 0;
    using Kind = detail::Token::Kind;
    auto peek = [&]() -> const detail::Token& { return tokens[pos]; };
    auto advance = [&]() -> const detail::Token& { return tokens[pos++]; };

    auto parse_term = [&](const detail::Token& tok) -> std::string {
        std::string t = normalize_phrase(tok.text);
        if (t.empty()) {
            throw QueryParseError("empty term at byte " + std::to_string(tok.offset), tok.offset);
        }
        return t;
    };

    QueryAst ast;
    while (true) {
        const auto& tok = advance();
        OrGroup group;
        if (tok.kind == Kind::lparen) {
            if (peek().kind == Kind::rparen) {
                throw QueryParseError("empty group at byte " + std::to_string(peek().offset),
                                      peek().offset);
            }
            while (true) {
                const auto& t = advance();
                if (t.kind != Kind::term) {
                    if (t.kind == Kind::kw_unsupported) {
                        throw QueryParseError("unsupported operator '" + t.text + "' at byte " +
                                                  std::to_string(t.offset),
                                              t.offset);
                    }
                    throw QueryParseError("unexpected token '" + t.text + "' at byte " +
                                              std::to_string(t.offset),
                                          t.offset);
                }
                std::string term = parse_term(t);
                if (std::find(group.terms.begin(), group.terms.end(), term) == group.terms.end()) {
                    group.terms.push_back(std::move(term));
                }
                const auto& sep = advance();
                if (sep.kind == Kind::rparen) break;
                if (sep.kind == Kind::kw_or) continue;
                if (sep.kind == Kind::kw_and) {
                    throw QueryParseError(
                        "ambiguous mixed operators at byte " + std::to_string(sep.offset) +
                            ": AND inside a parenthesized OR group",
                        sep.offset);
                }
                if (sep.kind == Kind::end) {
                    throw QueryParseError("unbalanced parentheses: missing ')' at byte " +
                                              std::to_string(sep.offset),
                                          sep.offset);
                }
                if (sep.kind == Kind::kw_unsupported) {
                    throw QueryParseError("unsupported operator '" + sep.text + "' at byte " +
                                              std::to_string(sep.offset),
                                          sep.offset);
                }
                throw QueryParseError("unexpected token '" + sep.text + "' at byte " +
                                          std::to_string(sep.offset),
                                      sep.offset);
            }
        } else if (tok.kind == Kind::term) {
            group.terms.push_back(parse_term(tok));
        } else if (tok.kind == Kind::rparen) {
            throw QueryParseError(
                "unbalanced parentheses: stray ')' at byte " + std::to_string(tok.offset),
                tok.offset);
        } else if (tok.kind == Kind::kw_unsupported) {
            throw QueryParseError(
                "unsupported operator '" + tok.text + "' at byte " + std::to_string(tok.offset),
                tok.offset);
        } else if (tok.kind == Kind::end) {
            throw QueryParseError("empty query", tok.offset);
        } else {
            throw QueryParseError(
                "unexpected token '" + tok.text + "' at byte " + std::to_string(tok.offset),
                tok.offset);
        }
        ast.groups.push_back(std::move(group));

        const auto& sep = advance();
        if (sep.kind == Kind::end) break;
        if (sep.kind == Kind::kw_and) {
            if (peek().kind == Kind::end) {
                throw QueryParseError("unexpected token at end: trailing AND", sep.offset);
            }
            continue;
        }
        if (sep.kind == Kind::kw_or) {
            throw QueryParseError("ambiguous mixed operators at byte " + std::to_string(sep.offset) +
                                      ": top-level OR requires a parenthesized group",
                                  sep.offset);
        }
        if (sep.kind == Kind::rparen) {
            throw QueryParseError(
                "unbalanced parentheses: stray ')' at byte " + std::to_string(sep.offset),
                sep.offset);
        }
        if (sep.kind == Kind::kw_unsupported) {
            throw QueryParseError("unsupported operator '" + sep.text + "' at byte " +
                                      std::to_string(sep.offset),
                                  sep.offset);
        }
        throw QueryParseError(
            "unexpected token '" + sep.text + "' at byte " + std::to_string(sep.offset), sep.offset);
    }
    return ast;
}

/// One OR-group per cluster. Groups come out in descending cluster-score
/// order; inside a group, terms nearest the cluster mean come first. Ties
/// fall back to lexicographic order. Presentation only: matching is
/// order-independent.
inline QueryAst formulate(const Grouping& grouping) {
    struct Entry {
        double score;
        std::vector<std::string> terms;
    };
    std::vector<Entry> entries;
    entries.reserve(grouping.clusters.size());
    for (const auto& cluster : grouping.clusters) {
        const std::size_t dim = cluster.members.front().components.size();
        WordVector mean{"", std::vector<double>(dim, 0.0)};
        for (const auto& member : cluster.members) {
            for (std::size_t j = 0; j < dim; ++j) mean.components[j] += member.components[j];
        }
        for (double& x : mean.components) x /= static_cast<double>(cluster.members.size());

        std::vector<std::pair<double, std::string>> ranked;
        ranked.reserve(cluster.members.size());
        for (const auto& member : cluster.members) {
            ranked.emplace_back(word_distance(member, mean), member.token);
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return a.second < b.second;
        });
        Entry e{cluster_score(cluster), {}};
        e.terms.reserve(ranked.size());
        for (auto& [d, term] : ranked) e.terms.push_back(std::move(term));
        entries.push_back(std::move(e));
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.terms < b.terms;
    });
    QueryAst ast;
    ast.groups.reserve(entries.size());
    for (auto& e : entries) ast.groups.push_back(OrGroup{std::move(e.terms)});
    return normalize(ast);
}

// ---------------------------------------------------------------------------
// Matching.
// ---------------------------------------------------------------------------

using TokenSeq = std::vector<std::string>;

/// Token stream of title + body (title concatenation configurable off).
inline TokenSeq document_tokens(const Document& doc, bool include_title = true) {
    if (!include_title || doc.title.empty()) return tokenize_words(doc.text);
    return tokenize_words(doc.title + " " + doc.text);
}

/// Query pre-tokenized for matching: each term as its own token sequence.
struct CompiledQuery {
    std::vector<std::vector<TokenSeq>> groups;
};

inline CompiledQuery compile(const QueryAst& ast) {
    CompiledQuery cq;
    cq.groups.reserve(ast.groups.size());
    for (const auto& group : ast.groups) {
        std::vector<TokenSeq> terms;
        terms.reserve(group.terms.size());
        for (const auto& term : group.terms) terms.push_back(tokenize_words(term));
        cq.groups.push_back(std::move(terms));
    }
    return cq;
}

namespace detail {

// Contiguous subsequence search over tokens; token-boundary semantics, so
// 'trial' never matches inside 'industrial'.
inline bool contains_phrase(const TokenSeq& haystack, const TokenSeq& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        bool hit = true;
        for (std::size_t j = 0; j < needle.size(); ++j) {
            if (haystack[i + j] != needle[j]) {
                hit = false;
                break;
            }
        }
        if (hit) return true;
    }
    return false;
}

}  // namespace detail

inline bool matches(const CompiledQuery& cq, const TokenSeq& doc_tokens) {
    for (const auto& group : cq.groups) {
        bool group_hit = false;
        for (const auto& term : group) {
            if (detail::contains_phrase(doc_tokens, term)) {
                group_hit = true;
                break;
            }
        }
        if (!group_hit) return false;
    }
    return true;
}

/// A term matches iff its token sequence appears contiguously in the document
/// token stream; a group matches iff any term does; the query matches iff
/// every group does.
inline bool matches(const QueryAst& ast, const Document& doc, bool include_title = true) {
    return matches(compile(ast), document_tokens(doc, include_title));
}

}  // namespace xu
