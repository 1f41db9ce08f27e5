#pragma once

#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "memanchor/embed.hpp"
#include "memanchor/errors.hpp"
#include "memanchor/graph.hpp"
#include "memanchor/lm.hpp"
#include "memanchor/parallel.hpp"
#include "memanchor/prompts.hpp"
#include "memanchor/text.hpp"

namespace memanchor {

/// Per-context audit entry for an extraction pass.
struct ExtractionRecord {
    std::string context_id;
    std::size_t facts_extracted = 0;
    int parse_retries = 0;
    bool failed = false;
};

/// System prompt (with optional few-shot example block) plus a user message
/// carrying speakers, timestamp label, and the raw dialogue.
inline std::vector<ChatMessage> build_extraction_prompt(const InteractionContext& ctx,
                                                        const std::string& example_block = "") {
    if (ctx.text.empty()) throw InvalidInputError("context '" + ctx.context_id + "' has empty text");
    std::string system = prompts::kFactExtraction;
    if (!example_block.empty()) {
        system += "\n\n";
        system += example_block;
    }
    std::string user = "Speakers: " + text::join(ctx.speakers, ", ") + "\n" +
                       "Time: " + ctx.timestamp_label + "\n" +
                       "Dialogue:\n" + ctx.text;
    return {system_message(std::move(system)), user_message(std::move(user))};
}

/// Extracts atomic facts from one context: one completion, parsed as a JSON
/// string list, one retry on a parse failure, zero facts after the second.
/// Each fact is bound to the context and embedded; exact-duplicate texts
/// within the context collapse to one.
inline std::vector<AtomicFact> extract_facts(const InteractionContext& ctx,
                                             const LmBackend& backend,
                                             const EmbeddingProviderSpec& provider,
                                             const std::string& example_block = "",
                                             UsageMeter* usage = nullptr,
                                             ExtractionRecord* record = nullptr) {
    ExtractionRecord local;
    local.context_id = ctx.context_id;
    std::vector<ChatMessage> prompt = build_extraction_prompt(ctx, example_block);

    std::vector<std::string> fact_texts;
    bool parsed = false;
    for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
        try {
            fact_texts = parse_json_string_list(complete(backend, prompt, usage));
            parsed = true;
        } catch (const ExtractionParseError&) {
            if (attempt == 0) {
                local.parse_retries = 1;
            } else {
                local.failed = true;  // context stays stored, owns zero facts
            }
        }
    }

    std::vector<AtomicFact> facts;
    if (parsed) {
        std::unordered_set<std::string> seen;
        std::vector<std::string> unique_texts;
        for (std::string& t : fact_texts) {
            std::string trimmed = text::trim(t);
            if (trimmed.empty()) continue;
            if (seen.insert(trimmed).second) unique_texts.push_back(std::move(trimmed));
        }
        if (!unique_texts.empty()) {
            std::vector<EmbeddingVector> vectors = embed_texts(provider, unique_texts);
            facts.reserve(unique_texts.size());
            for (std::size_t i = 0; i < unique_texts.size(); ++i) {
                AtomicFact f;
                f.text = std::move(unique_texts[i]);
                f.source_context_id = ctx.context_id;
                f.embedding = std::move(vectors[i]);
                facts.push_back(std::move(f));
            }
        }
    }
    local.facts_extracted = facts.size();
    if (record) *record = local;
    return facts;
}

/// Ingests a corpus slice: stores every context verbatim, extracts and
/// stores its facts. Contexts are committed in corpus order so ids and the
/// resulting graph are deterministic; extraction calls may run in parallel
/// under `parallelism`.
inline std::vector<ExtractionRecord> ingest_corpus(std::vector<InteractionContext> contexts,
                                                   const LmBackend& backend,
                                                   const EmbeddingProviderSpec& provider,
                                                   MemoryGraph& graph,
                                                   const std::string& example_block = "",
                                                   UsageMeter* usage = nullptr,
                                                   std::size_t parallelism = 1) {
    std::vector<std::string> committed_ids;
    committed_ids.reserve(contexts.size());
    for (InteractionContext& ctx : contexts) {
        try {
            committed_ids.push_back(graph.add_context(std::move(ctx)));
        } catch (const Error& ex) {
            throw PartialBuildError("ingest aborted after context '" +
                                    (committed_ids.empty() ? std::string("none")
                                                           : committed_ids.back()) +
                                    "': " + ex.what());
        }
    }

    std::vector<std::vector<AtomicFact>> per_context(committed_ids.size());
    std::vector<ExtractionRecord> records(committed_ids.size());
    parallel_for_index(committed_ids.size(), parallelism, [&](std::size_t i) {
        const InteractionContext& stored = graph.context(committed_ids[i]);
        per_context[i] =
            extract_facts(stored, backend, provider, example_block, usage, &records[i]);
    });

    std::string last_committed = "none";
    for (std::size_t i = 0; i < per_context.size(); ++i) {
        for (AtomicFact& f : per_context[i]) {
            try {
                graph.add_fact(std::move(f));
            } catch (const Error& ex) {
                throw PartialBuildError("ingest aborted after context '" + last_committed +
                                        "': " + ex.what());
            }
        }
        last_committed = committed_ids[i];
    }
    return records;
}

}  // namespace memanchor
