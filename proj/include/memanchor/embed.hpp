#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "memanchor/errors.hpp"
#include "memanchor/http.hpp"
#include "memanchor/index.hpp"
#include "memanchor/parallel.hpp"

namespace memanchor {

namespace detail {

inline void l2_normalize(EmbeddingVector& v) {
    double norm_sq = std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
    if (norm_sq == 0.0) throw DegenerateVectorError("embedding is a zero vector");
    double inv = 1.0 / std::sqrt(norm_sq);
    for (double& c : v) c *= inv;
}

inline std::vector<EmbeddingVector> embed_remote_batch(const EmbeddingProviderSpec& provider,
                                                       const std::vector<std::string>& texts) {
    nlohmann::json body = {{"model", provider.model_name}, {"input", texts}};
    nlohmann::json response =
        post_json_with_retry(provider.base_url, "/embeddings", read_api_key(provider.api_key_env_var),
                             body, provider.timeout, provider.max_retries);
    if (!response.contains("data") || !response["data"].is_array() ||
        response["data"].size() != texts.size()) {
        throw TransportError("embedding endpoint returned " +
                             std::to_string(response.value("data", nlohmann::json::array()).size()) +
                             " vectors for " + std::to_string(texts.size()) + " inputs");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& item : response["data"]) {
        EmbeddingVector v = item.at("embedding").get<EmbeddingVector>();
        if (v.size() != provider.dimension) {
            throw DimensionMismatchError("embedding endpoint returned dimension " +
                                         std::to_string(v.size()) + ", configured " +
                                         std::to_string(provider.dimension));
        }
        l2_normalize(v);
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace detail

/// One unit-norm vector per input text, in input order. The stub provider is
/// a pure function of the text; the remote provider batches requests and
/// issues them with a bounded number in flight.
inline std::vector<EmbeddingVector> embed_texts(const EmbeddingProviderSpec& provider,
                                                const std::vector<std::string>& texts) {
    provider.validate();
    for (const std::string& t : texts) {
        if (t.empty()) throw InvalidInputError("embed_texts: empty text");
    }
    std::vector<EmbeddingVector> out(texts.size());

    if (provider.kind == EmbeddingProviderSpec::Kind::stub_hash) {
        for (std::size_t i = 0; i < texts.size(); ++i) {
            out[i] = stub_hash_embedding(texts[i], provider.dimension);
        }
        return out;
    }

    std::size_t batch = provider.batch_size == 0 ? 1 : provider.batch_size;
    std::size_t n_batches = (texts.size() + batch - 1) / batch;
    parallel_for_index(n_batches, provider.parallelism, [&](std::size_t b) {
        std::size_t begin = b * batch;
        std::size_t end = std::min(begin + batch, texts.size());
        std::vector<std::string> slice(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                       texts.begin() + static_cast<std::ptrdiff_t>(end));
        std::vector<EmbeddingVector> vectors = detail::embed_remote_batch(provider, slice);
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            out[begin + i] = std::move(vectors[i]);
        }
    });
    return out;
}

/// Builds an index from (id, text) nodes using the given provider.
inline VectorIndex build_index(const std::vector<std::pair<std::string, std::string>>& nodes,
                               const EmbeddingProviderSpec& provider) {
    VectorIndex index(provider.dimension);
    if (nodes.empty()) return index;
    std::vector<std::string> texts;
    texts.reserve(nodes.size());
    for (const auto& [id, txt] : nodes) {
        (void)id;
        texts.push_back(txt);
    }
    std::vector<EmbeddingVector> vectors = embed_texts(provider, texts);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        index.add(nodes[i].first, std::move(vectors[i]));
    }
    return index;
}

}  // namespace memanchor
