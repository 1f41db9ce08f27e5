#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "memanchor/text.hpp"

namespace memanchor {

namespace detail {

inline std::unordered_map<std::string, std::size_t> token_counts(const std::vector<std::string>& tokens) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const std::string& t : tokens) ++counts[t];
    return counts;
}

inline std::size_t multiset_overlap(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b) {
    auto counts_a = token_counts(a);
    auto counts_b = token_counts(b);
    std::size_t overlap = 0;
    for (const auto& [token, count] : counts_a) {
        auto it = counts_b.find(token);
        if (it != counts_b.end()) overlap += std::min(count, it->second);
    }
    return overlap;
}

}  // namespace detail

/// Token-level F1 over normalized multiset overlap. Both empty -> 1,
/// exactly one empty -> 0.
inline double token_f1(const std::string& prediction, const std::string& gold) {
    std::vector<std::string> pred_tokens = text::normalize_tokens(prediction);
    std::vector<std::string> gold_tokens = text::normalize_tokens(gold);
    if (pred_tokens.empty() && gold_tokens.empty()) return 1.0;
    if (pred_tokens.empty() || gold_tokens.empty()) return 0.0;
    std::size_t overlap = detail::multiset_overlap(pred_tokens, gold_tokens);
    if (overlap == 0) return 0.0;
    double precision = static_cast<double>(overlap) / static_cast<double>(pred_tokens.size());
    double recall = static_cast<double>(overlap) / static_cast<double>(gold_tokens.size());
    return 2.0 * precision * recall / (precision + recall);
}

/// BLEU-1: clipped unigram precision times the brevity penalty
/// min(1, exp(1 - r/c)) with r = |gold|, c = |prediction|. No smoothing.
/// Empty prediction -> 0.
inline double bleu1(const std::string& prediction, const std::string& gold) {
    std::vector<std::string> pred_tokens = text::normalize_tokens(prediction);
    std::vector<std::string> gold_tokens = text::normalize_tokens(gold);
    if (pred_tokens.empty()) return 0.0;
    std::size_t clipped = detail::multiset_overlap(pred_tokens, gold_tokens);
    double precision = static_cast<double>(clipped) / static_cast<double>(pred_tokens.size());
    double r = static_cast<double>(gold_tokens.size());
    double c = static_cast<double>(pred_tokens.size());
    double brevity_penalty = std::min(1.0, std::exp(1.0 - r / c));
    return precision * brevity_penalty;
}

}  // namespace memanchor
