#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace memanchor::text {

inline bool is_alnum(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

inline char lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

inline std::string to_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(lower(c));
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return std::string(s.substr(begin, end - begin));
}

inline std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(s.substr(start));
            break;
        }
        lines.emplace_back(s.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

// Lowercased tokens split on runs of non-alphanumeric characters.
// This is the bag-of-words view used by the hashing embedder.
inline std::vector<std::string> alnum_tokens(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : s) {
        if (is_alnum(c)) {
            current.push_back(lower(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

// Answer normalization for metric computation and the substring-based
// judge stub: lowercase, drop characters outside letters/digits/space,
// collapse whitespace.
inline std::string normalize_answer(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_alnum(c)) {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(lower(c));
        } else if (c == ' ' || std::isspace(static_cast<unsigned char>(c))) {
            pending_space = true;
        }
        // other characters are stripped entirely
    }
    return out;
}

inline std::vector<std::string> normalize_tokens(std::string_view s) {
    std::vector<std::string> tokens;
    std::string normalized = normalize_answer(s);
    std::size_t start = 0;
    while (start < normalized.size()) {
        std::size_t space = normalized.find(' ', start);
        if (space == std::string::npos) {
            tokens.push_back(normalized.substr(start));
            break;
        }
        if (space > start) tokens.push_back(normalized.substr(start, space - start));
        start = space + 1;
    }
    return tokens;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

}  // namespace memanchor::text
