#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "memanchor/errors.hpp"
#include "memanchor/text.hpp"

namespace memanchor {

using EmbeddingVector = std::vector<double>;

/// Full-formula cosine similarity; does not assume unit-norm inputs.
/// Throws on dimension mismatch or a zero-length operand.
inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) {
        throw DimensionMismatchError("cosine_similarity: dimensions differ (" +
                                     std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
    double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        norm_a += a[i] * a[i];
        norm_b += b[i] * b[i];
    }
    if (norm_a == 0.0 || norm_b == 0.0) {
        throw DegenerateVectorError("cosine_similarity: zero vector has no direction");
    }
    double sim = dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
    return std::clamp(sim, -1.0, 1.0);
}

// MurmurHash64A, seed fixed at 0. Normative for the hashing embedder:
// changing it changes every stub embedding.
inline std::uint64_t murmur64a(std::string_view key, std::uint64_t seed = 0) {
    const std::uint64_t m = 0xc6a4a7935bd1e995ULL;
    const int r = 47;
    std::uint64_t h = seed ^ (static_cast<std::uint64_t>(key.size()) * m);

    const unsigned char* data = reinterpret_cast<const unsigned char*>(key.data());
    std::size_t n_blocks = key.size() / 8;
    for (std::size_t i = 0; i < n_blocks; ++i) {
        std::uint64_t k = 0;
        for (int b = 0; b < 8; ++b) {
            k |= static_cast<std::uint64_t>(data[i * 8 + b]) << (8 * b);
        }
        k *= m;
        k ^= k >> r;
        k *= m;
        h ^= k;
        h *= m;
    }

    const unsigned char* tail = data + n_blocks * 8;
    switch (key.size() & 7u) {
        case 7: h ^= static_cast<std::uint64_t>(tail[6]) << 48; [[fallthrough]];
        case 6: h ^= static_cast<std::uint64_t>(tail[5]) << 40; [[fallthrough]];
        case 5: h ^= static_cast<std::uint64_t>(tail[4]) << 32; [[fallthrough]];
        case 4: h ^= static_cast<std::uint64_t>(tail[3]) << 24; [[fallthrough]];
        case 3: h ^= static_cast<std::uint64_t>(tail[2]) << 16; [[fallthrough]];
        case 2: h ^= static_cast<std::uint64_t>(tail[1]) << 8; [[fallthrough]];
        case 1: h ^= static_cast<std::uint64_t>(tail[0]); h *= m;
    }

    h ^= h >> r;
    h *= m;
    h ^= h >> r;
    return h;
}

/// Embedding source: either the deterministic hashing stub or a remote
/// endpoint speaking the common embeddings wire shape.
struct EmbeddingProviderSpec {
    enum class Kind { stub_hash, remote_endpoint };

    Kind kind = Kind::stub_hash;
    std::size_t dimension = 256;

    // remote-endpoint settings
    std::string base_url;
    std::string model_name;
    std::string api_key_env_var = "OPENAI_API_KEY";
    std::chrono::milliseconds timeout{30000};
    int max_retries = 2;
    std::size_t batch_size = 64;   // texts per request
    std::size_t parallelism = 4;   // in-flight request cap

    void validate() const {
        if (dimension == 0) throw InvalidInputError("embedding dimension must be positive");
        if (max_retries < 0) throw InvalidInputError("max_retries must be >= 0");
    }
};

// Deterministic bag-of-words embedding: lowercase, split on non-alphanumeric
// characters, bucket = murmur64a(token) mod dim, sign = bit 63, accumulate
// +/-1 per occurrence, L2-normalize. Word order never matters.
inline EmbeddingVector stub_hash_embedding(std::string_view input, std::size_t dimension) {
    std::vector<std::string> tokens = text::alnum_tokens(input);
    if (tokens.empty()) tokens.emplace_back();  // token-free text hashes as one empty token
    EmbeddingVector v(dimension, 0.0);
    for (const std::string& token : tokens) {
        std::uint64_t h = murmur64a(token);
        std::size_t bucket = static_cast<std::size_t>(h % dimension);
        double sign = (h >> 63) ? -1.0 : 1.0;
        v[bucket] += sign;
    }
    double norm_sq = std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
    if (norm_sq == 0.0) {
        v[0] = 1.0;  // opposite-sign bucket collisions cancelled everything
        return v;
    }
    double inv = 1.0 / std::sqrt(norm_sq);
    for (double& c : v) c *= inv;
    return v;
}

struct ScoredId {
    std::string id;
    double score = 0.0;
};

/// Exact (brute-force) similarity index over id->vector entries.
/// Immutable once built; every query is a full scan with the deterministic
/// tie rule: equal scores rank by ascending insertion order.
class VectorIndex {
public:
    explicit VectorIndex(std::size_t dimension) : dimension_(dimension) {
        if (dimension == 0) throw InvalidInputError("VectorIndex: dimension must be positive");
    }

    void add(std::string id, EmbeddingVector vec) {
        if (vec.size() != dimension_) {
            throw DimensionMismatchError("VectorIndex: entry '" + id + "' has dimension " +
                                         std::to_string(vec.size()) + ", expected " +
                                         std::to_string(dimension_));
        }
        if (positions_.count(id)) {
            throw DuplicateIdError("VectorIndex: duplicate id '" + id + "'");
        }
        positions_.emplace(id, ids_.size());
        ids_.push_back(std::move(id));
        vectors_.push_back(std::move(vec));
    }

    std::size_t size() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }
    std::size_t dimension() const { return dimension_; }
    bool contains(const std::string& id) const { return positions_.count(id) != 0; }

    const EmbeddingVector& vector_of(const std::string& id) const {
        auto it = positions_.find(id);
        if (it == positions_.end()) throw NotFoundError("VectorIndex: unknown id '" + id + "'");
        return vectors_[it->second];
    }

    const std::vector<std::string>& ids() const { return ids_; }

    /// Top-k entries by cosine similarity to `query`, score descending,
    /// ties by insertion order. Empty index yields an empty result.
    std::vector<ScoredId> top_k_similar(const EmbeddingVector& query, std::size_t k) const {
        if (k == 0) throw InvalidInputError("top_k_similar: k must be >= 1");
        if (ids_.empty()) return {};
        std::vector<ScoredId> scored = scan(query);
        std::size_t take = std::min(k, scored.size());
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                          scored.end(), by_score_then_insertion());
        scored.resize(take);
        return scored;
    }

    /// Every entry other than `anchor_id` with similarity strictly above tau,
    /// score descending, ties by insertion order.
    std::vector<ScoredId> all_above_threshold(const std::string& anchor_id, double tau) const {
        auto it = positions_.find(anchor_id);
        if (it == positions_.end()) {
            throw NotFoundError("VectorIndex: unknown anchor '" + anchor_id + "'");
        }
        const EmbeddingVector& anchor = vectors_[it->second];
        std::vector<ScoredId> satisfying;
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            if (i == it->second) continue;
            double sim = cosine_similarity(anchor, vectors_[i]);
            if (sim > tau) satisfying.push_back({ids_[i], sim});
        }
        std::sort(satisfying.begin(), satisfying.end(), by_score_then_insertion());
        return satisfying;
    }

    /// The up-to-N most similar entries above tau (strict), anchor excluded.
    std::vector<ScoredId> top_n_above_threshold(const std::string& anchor_id, std::size_t n,
                                                double tau) const {
        if (n == 0) throw InvalidInputError("top_n_above_threshold: N must be >= 1");
        std::vector<ScoredId> satisfying = all_above_threshold(anchor_id, tau);
        if (satisfying.size() > n) satisfying.resize(n);
        return satisfying;
    }

private:
    std::vector<ScoredId> scan(const EmbeddingVector& query) const {
        std::vector<ScoredId> scored;
        scored.reserve(ids_.size());
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            scored.push_back({ids_[i], cosine_similarity(query, vectors_[i])});
        }
        return scored;
    }

    // Comparator keyed on insertion position so sorting copies stays stable.
    std::function<bool(const ScoredId&, const ScoredId&)> by_score_then_insertion() const {
        return [this](const ScoredId& a, const ScoredId& b) {
            if (a.score != b.score) return a.score > b.score;
            return positions_.at(a.id) < positions_.at(b.id);
        };
    }

    std::size_t dimension_;
    std::vector<std::string> ids_;
    std::vector<EmbeddingVector> vectors_;
    std::unordered_map<std::string, std::size_t> positions_;
};

}  // namespace memanchor
