#pragma once

#include <string>
#include <utility>
#include <vector>

#include "memanchor/embed.hpp"
#include "memanchor/errors.hpp"
#include "memanchor/graph.hpp"
#include "memanchor/lm.hpp"
#include "memanchor/prompts.hpp"
#include "memanchor/text.hpp"

namespace memanchor {

/// Everything one query pulled out of the graph: ranked fact and event hits
/// (kept for audit) plus the resolved source contexts.
struct RetrievalResult {
    std::vector<ScoredId> fact_hits;
    std::vector<ScoredId> event_hits;
    std::vector<InteractionContext> resolved_contexts;  // deduplicated, chronological
};

/// The rendered generation context: raw conversations first, then event
/// narratives, with the ids that produced each section.
struct MemoryBlock {
    std::string rendered;
    std::vector<std::string> context_ids;
    std::vector<std::string> event_ids;
};

/// Anchored retrieval: top-k facts and top-k events independently, then the
/// fact hits resolved through their mapping edges to the original contexts.
/// The facts themselves are never served as context.
inline RetrievalResult retrieve(const std::string& query, const MemoryGraph& graph,
                                const VectorIndex& fact_index, const VectorIndex& event_index,
                                std::size_t k, const EmbeddingProviderSpec& provider) {
    if (k == 0) throw InvalidInputError("retrieve: k must be >= 1");
    RetrievalResult result;
    if (fact_index.empty() && event_index.empty()) return result;

    EmbeddingVector query_vec = embed_texts(provider, {query}).front();
    if (!fact_index.empty()) result.fact_hits = fact_index.top_k_similar(query_vec, k);
    if (!event_index.empty()) result.event_hits = event_index.top_k_similar(query_vec, k);

    std::vector<std::string> fact_ids;
    fact_ids.reserve(result.fact_hits.size());
    for (const ScoredId& hit : result.fact_hits) fact_ids.push_back(hit.id);
    result.resolved_contexts = graph.contexts_of_facts(fact_ids);
    return result;
}

namespace detail {

inline void render_context(std::string& out, const InteractionContext& ctx) {
    out += "[" + ctx.timestamp_label + "] (" + text::join(ctx.speakers, ", ") + ")\n";
    out += ctx.text;
    out += "\n\n";
}

}  // namespace detail

/// Renders the final memory: resolved contexts in the order given (callers
/// pass chronological for anchored retrieval, rank order for the baseline),
/// then event narratives in score order, under labeled section headers.
inline MemoryBlock assemble_memory(const RetrievalResult& result, const MemoryGraph& graph) {
    MemoryBlock block;
    block.rendered = "## Memories\n\n";
    for (const InteractionContext& ctx : result.resolved_contexts) {
        if (!graph.has_context(ctx.context_id)) {
            throw IntegrityError("memory block references missing context '" + ctx.context_id + "'");
        }
        detail::render_context(block.rendered, ctx);
        block.context_ids.push_back(ctx.context_id);
    }
    block.rendered += "## Events\n\n";
    for (const ScoredId& hit : result.event_hits) {
        if (!graph.has_event(hit.id)) {
            throw IntegrityError("memory block references missing event '" + hit.id + "'");
        }
        const AssociativeEvent& event = graph.event(hit.id);
        for (const std::string& narrative : event.narratives) {
            block.rendered += "- " + narrative + "\n";
        }
        block.event_ids.push_back(event.event_id);
    }
    return block;
}

/// One QA completion over the assembled memory. The engine never fails on
/// an empty block; the model answers from whatever is present.
inline std::string answer_query(const std::string& query, const MemoryBlock& block,
                                const LmBackend& backend, UsageMeter* usage = nullptr,
                                const std::string& system_prompt = prompts::kAnswerSystem) {
    std::string user = block.rendered + "\n\nQuestion: " + query;
    return complete(backend, {system_message(system_prompt), user_message(std::move(user))}, usage);
}

/// Chunk-retrieval baseline: top-k contexts by direct query-context
/// similarity, rank order, no fact or event anchoring.
inline std::vector<InteractionContext> naive_rag_retrieve(const std::string& query,
                                                          const MemoryGraph& graph,
                                                          const VectorIndex& context_index,
                                                          std::size_t k,
                                                          const EmbeddingProviderSpec& provider) {
    if (k == 0) throw InvalidInputError("naive_rag_retrieve: k must be >= 1");
    if (context_index.empty()) return {};
    EmbeddingVector query_vec = embed_texts(provider, {query}).front();
    std::vector<InteractionContext> out;
    for (const ScoredId& hit : context_index.top_k_similar(query_vec, k)) {
        out.push_back(graph.context(hit.id));
    }
    return out;
}

}  // namespace memanchor
