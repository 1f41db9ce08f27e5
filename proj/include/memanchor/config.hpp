#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "memanchor/errors.hpp"
#include "memanchor/index.hpp"
#include "memanchor/lm.hpp"
#include "memanchor/prompts.hpp"

namespace memanchor {

/// Engine parameters. Defaults mirror the reference operating point:
/// tau = 0.85, N = 3, top_k = 10; the "k20" preset switches retrieval
/// breadth to 20 with everything else unchanged.
struct EngineConfig {
    double tau = 0.85;
    std::size_t n_neighbors = 3;
    std::size_t top_k = 10;

    EmbeddingProviderSpec embedding;
    LmBackend extractor{LmBackend::Kind::stub_extractor, {}};
    LmBackend integrator{LmBackend::Kind::stub_integrator, {}};
    LmBackend answerer{LmBackend::Kind::stub_answerer, {}};
    LmBackend judge{LmBackend::Kind::stub_judge, {}};

    std::size_t parallelism = 4;
    std::string answer_system_prompt = prompts::kAnswerSystem;
    std::string extraction_example;  // optional few-shot block for the extraction prompt

    // default paths; command-line flags override these
    std::string graph_path;
    std::string corpus_path;
    std::string report_path;

    void validate() const {
        if (!(tau > 0.0 && tau < 1.0)) throw InvalidInputError("tau must be in (0, 1)");
        if (n_neighbors < 1) throw InvalidInputError("n_neighbors must be >= 1");
        if (top_k < 1) throw InvalidInputError("top_k must be >= 1");
        if (parallelism < 1) throw InvalidInputError("parallelism must be >= 1");
        embedding.validate();
        if (extractor.kind == LmBackend::Kind::remote) extractor.endpoint.validate();
        if (integrator.kind == LmBackend::Kind::remote) integrator.endpoint.validate();
        if (answerer.kind == LmBackend::Kind::remote) answerer.endpoint.validate();
        if (judge.kind == LmBackend::Kind::remote) judge.endpoint.validate();
    }
};

inline void apply_preset(EngineConfig& config, const std::string& name) {
    if (name == "k20") {
        config.top_k = 20;
        return;
    }
    throw InvalidInputError("unknown preset '" + name + "' (available: k20)");
}

namespace detail {

inline LmBackend parse_backend(const nlohmann::json& j, LmBackend::Kind stub_kind) {
    LmBackend backend;
    std::string kind = j.value("kind", "stub");
    if (kind == "stub") {
        backend.kind = stub_kind;
    } else if (kind == "remote") {
        backend.kind = LmBackend::Kind::remote;
        backend.endpoint.base_url = j.value("base_url", "");
        backend.endpoint.model_name = j.value("model", "");
        backend.endpoint.api_key_env_var = j.value("api_key_env", "OPENAI_API_KEY");
        backend.endpoint.temperature = j.value("temperature", 0.0);
        backend.endpoint.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60000));
        backend.endpoint.max_retries = j.value("max_retries", 2);
    } else {
        throw InvalidInputError("backend kind must be 'stub' or 'remote', got '" + kind + "'");
    }
    return backend;
}

}  // namespace detail

/// Reads a JSON config document. Absent fields keep their defaults; API
/// keys come only from the environment variables the file names.
inline EngineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("config file not found: '" + path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError("config '" + path.string() + "': " + ex.what());
    }

    EngineConfig config;
    try {
        config.tau = doc.value("tau", config.tau);
        config.n_neighbors = doc.value("n_neighbors", config.n_neighbors);
        config.top_k = doc.value("top_k", config.top_k);
        config.parallelism = doc.value("parallelism", config.parallelism);
        config.answer_system_prompt = doc.value("answer_system_prompt", config.answer_system_prompt);
        config.extraction_example = doc.value("extraction_example", config.extraction_example);
        config.graph_path = doc.value("graph_path", config.graph_path);
        config.corpus_path = doc.value("corpus_path", config.corpus_path);
        config.report_path = doc.value("report_path", config.report_path);

        if (doc.contains("embedding")) {
            const auto& ej = doc["embedding"];
            std::string kind = ej.value("kind", "stub-hash");
            if (kind == "stub-hash") {
                config.embedding.kind = EmbeddingProviderSpec::Kind::stub_hash;
            } else if (kind == "remote-endpoint") {
                config.embedding.kind = EmbeddingProviderSpec::Kind::remote_endpoint;
            } else {
                throw InvalidInputError("embedding kind must be 'stub-hash' or 'remote-endpoint'");
            }
            config.embedding.dimension = ej.value("dimension", config.embedding.dimension);
            config.embedding.base_url = ej.value("base_url", "");
            config.embedding.model_name = ej.value("model", "");
            config.embedding.api_key_env_var = ej.value("api_key_env", "OPENAI_API_KEY");
            config.embedding.timeout = std::chrono::milliseconds(ej.value("timeout_ms", 30000));
            config.embedding.max_retries = ej.value("max_retries", 2);
            config.embedding.batch_size = ej.value("batch_size", config.embedding.batch_size);
            config.embedding.parallelism = ej.value("parallelism", config.embedding.parallelism);
        }

        if (doc.contains("backends")) {
            const auto& bj = doc["backends"];
            if (bj.contains("extractor"))
                config.extractor = detail::parse_backend(bj["extractor"], LmBackend::Kind::stub_extractor);
            if (bj.contains("integrator"))
                config.integrator = detail::parse_backend(bj["integrator"], LmBackend::Kind::stub_integrator);
            if (bj.contains("answerer"))
                config.answerer = detail::parse_backend(bj["answerer"], LmBackend::Kind::stub_answerer);
            if (bj.contains("judge"))
                config.judge = detail::parse_backend(bj["judge"], LmBackend::Kind::stub_judge);
        }

        if (doc.contains("preset")) apply_preset(config, doc["preset"].get<std::string>());
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError("config '" + path.string() + "': " + ex.what());
    }
    config.validate();
    return config;
}

inline const char* backend_kind_name(LmBackend::Kind kind) {
    switch (kind) {
        case LmBackend::Kind::remote: return "remote";
        case LmBackend::Kind::stub_extractor: return "stub-extractor";
        case LmBackend::Kind::stub_integrator: return "stub-integrator";
        case LmBackend::Kind::stub_answerer: return "stub-answerer";
        case LmBackend::Kind::stub_judge: return "stub-judge";
    }
    return "unknown";
}

/// Effective-config echo included in reports and logs.
inline nlohmann::json config_summary(const EngineConfig& config) {
    return {{"tau", config.tau},
            {"n_neighbors", config.n_neighbors},
            {"top_k", config.top_k},
            {"embedding",
             {{"kind", config.embedding.kind == EmbeddingProviderSpec::Kind::stub_hash
                           ? "stub-hash"
                           : "remote-endpoint"},
              {"dimension", config.embedding.dimension}}},
            {"backends",
             {{"extractor", backend_kind_name(config.extractor.kind)},
              {"integrator", backend_kind_name(config.integrator.kind)},
              {"answerer", backend_kind_name(config.answerer.kind)},
              {"judge", backend_kind_name(config.judge.kind)}}},
            {"parallelism", config.parallelism}};
}

}  // namespace memanchor
