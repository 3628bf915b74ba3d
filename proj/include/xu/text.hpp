#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace xu {

// Lowercases UTF-8 text in place for the ranges that actually occur in the
// corpora we care about: ASCII, Latin-1 supplement and the base Cyrillic
// block. Anything else passes through unchanged.
inline void lowercase_inplace(std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        unsigned char b0 = static_cast<unsigned char>(s[i]);
        if (b0 < 0x80) {
            if (b0 >= 'A' && b0 <= 'Z') s[i] = static_cast<char>(b0 + 32);
            continue;
        }
        if (i + 1 >= s.size()) break;
        unsigned char b1 = static_cast<unsigned char>(s[i + 1]);
        if (b0 == 0xC3) {
            // U+00C0..U+00DE except U+00D7 (multiplication sign)
            if (b1 >= 0x80 && b1 <= 0x9E && b1 != 0x97) s[i + 1] = static_cast<char>(b1 + 0x20);
            ++i;
        } else if (b0 == 0xD0) {
            // U+0410..U+042F and U+0401
            if (b1 >= 0x90 && b1 <= 0x9F) {
                s[i + 1] = static_cast<char>(b1 + 0x20);
            } else if (b1 >= 0xA0 && b1 <= 0xAF) {
                s[i] = static_cast<char>(0xD1);
                s[i + 1] = static_cast<char>(b1 - 0x20);
            } else if (b1 == 0x81) {
                s[i] = static_cast<char>(0xD1);
                s[i + 1] = static_cast<char>(0x91);
            }
            ++i;
        } else if ((b0 & 0xE0) == 0xC0) {
            ++i;
        } else if ((b0 & 0xF0) == 0xE0) {
            i += 2;
        } else if ((b0 & 0xF8) == 0xF0) {
            i += 3;
        }
    }
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    lowercase_inplace(out);
    return out;
}

inline bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Lowercase, trim, and collapse internal whitespace runs to single spaces.
// Canonical form for query phrases, suggestion terms and Boolean-query terms.
inline std::string normalize_phrase(std::string_view s) {
    std::string lowered = to_lower(s);
    std::string out;
    out.reserve(lowered.size());
    bool pending_space = false;
    for (unsigned char c : lowered) {
        if (is_space(c)) {
            if (!out.empty()) pending_space = true;
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(c));
        }
    }
    return out;
}

inline std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t start = i;
        while (i < s.size() && !is_space(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) out.emplace_back(s.substr(start, i - start));
    }
    return out;
}

// A token is a maximal run of ASCII letters/digits or non-ASCII bytes.
// Input is lowercased first so matching is case-insensitive.
inline std::vector<std::string> tokenize_words(std::string_view s) {
    std::string lowered = to_lower(s);
    std::vector<std::string> tokens;
    std::size_t i = 0;
    auto is_token_char = [](unsigned char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80;
    };
    while (i < lowered.size()) {
        while (i < lowered.size() && !is_token_char(static_cast<unsigned char>(lowered[i]))) ++i;
        std::size_t start = i;
        while (i < lowered.size() && is_token_char(static_cast<unsigned char>(lowered[i]))) ++i;
        if (i > start) tokens.emplace_back(lowered.substr(start, i - start));
    }
    return tokens;
}

}  // namespace xu
