#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "memanchor/embed.hpp"
#include "memanchor/errors.hpp"
#include "memanchor/graph.hpp"
#include "memanchor/lm.hpp"
#include "memanchor/prompts.hpp"
#include "memanchor/text.hpp"

namespace memanchor {

struct ClusterMember {
    std::string fact_id;
    double similarity = 0.0;  // to the anchor; the anchor itself carries 1.0
};

/// An anchor fact plus its thresholded nearest neighbors. The anchor is
/// always the first member.
struct CandidateCluster {
    std::string anchor_fact_id;
    std::vector<ClusterMember> members;
};

/// A pruned, context-deduplicated cluster ready for integration: one
/// (context, representative fact) pair per distinct context, in
/// chronological order.
struct EventCandidate {
    std::string anchor_fact_id;
    std::vector<EventMember> pairs;
};

/// Anchor + up-to-N neighbors with similarity strictly above tau.
inline CandidateCluster candidate_cluster(const std::string& anchor_fact_id,
                                          const VectorIndex& fact_index, std::size_t n_neighbors,
                                          double tau) {
    CandidateCluster cluster;
    cluster.anchor_fact_id = anchor_fact_id;
    cluster.members.push_back({anchor_fact_id, 1.0});
    for (const ScoredId& neighbor :
         fact_index.top_n_above_threshold(anchor_fact_id, n_neighbors, tau)) {
        cluster.members.push_back({neighbor.id, neighbor.score});
    }
    return cluster;
}

/// O_max: the largest number of cluster members (anchor included) drawn
/// from a single context.
inline std::size_t max_context_overlap(const CandidateCluster& cluster, const MemoryGraph& graph) {
    std::unordered_map<std::string, std::size_t> per_context;
    std::size_t o_max = 0;
    for (const ClusterMember& m : cluster.members) {
        std::size_t count = ++per_context[graph.fact(m.fact_id).source_context_id];
        o_max = std::max(o_max, count);
    }
    return o_max;
}

/// A cluster is locally redundant when one context contributes at least
/// ceil(N/2) of its members; such clusters are discarded rather than
/// integrated.
inline bool is_locally_redundant(const CandidateCluster& cluster, const MemoryGraph& graph,
                                 std::size_t n_neighbors) {
    std::size_t threshold = (n_neighbors + 1) / 2;  // ceil(N/2)
    return max_context_overlap(cluster, graph) >= threshold;
}

/// Collapses a cluster to one representative fact per distinct context: the
/// member with the highest anchor similarity (the anchor represents its own
/// context; ties fall to earlier index insertion). Returns nothing when the
/// members cover fewer than two contexts.
inline std::optional<EventCandidate> dedup_to_event_candidate(const CandidateCluster& cluster,
                                                              const MemoryGraph& graph) {
    // members are ordered anchor-first then similarity-descending, so the
    // first member seen for a context is its representative
    std::vector<EventMember> pairs;
    std::set<std::string> seen_contexts;
    for (const ClusterMember& m : cluster.members) {
        const std::string& ctx_id = graph.fact(m.fact_id).source_context_id;
        if (seen_contexts.insert(ctx_id).second) {
            pairs.push_back({ctx_id, m.fact_id});
        }
    }
    if (pairs.size() < 2) return std::nullopt;
    std::sort(pairs.begin(), pairs.end(), [&graph](const EventMember& a, const EventMember& b) {
        return graph.context_position(a.context_id) < graph.context_position(b.context_id);
    });
    EventCandidate candidate;
    candidate.anchor_fact_id = cluster.anchor_fact_id;
    candidate.pairs = std::move(pairs);
    return candidate;
}

/// Drops candidates whose unordered context-id set was already produced by
/// an earlier anchor; first wins, order otherwise preserved.
inline std::vector<EventCandidate> dedup_cluster_signatures(std::vector<EventCandidate> candidates) {
    std::set<std::set<std::string>> seen;
    std::vector<EventCandidate> kept;
    kept.reserve(candidates.size());
    for (EventCandidate& c : candidates) {
        std::set<std::string> signature;
        for (const EventMember& p : c.pairs) signature.insert(p.context_id);
        if (seen.insert(std::move(signature)).second) kept.push_back(std::move(c));
    }
    return kept;
}

/// Integration prompt: the storyteller system prompt plus the candidate's
/// focus facts and the full raw text of each paired context, chronological.
inline std::vector<ChatMessage> build_integration_prompt(const EventCandidate& candidate,
                                                         const MemoryGraph& graph) {
    if (candidate.pairs.size() < 2) {
        throw InvalidInputError("integration candidate must span at least 2 contexts");
    }
    std::string user = "Focus Topics:\n";
    for (const EventMember& p : candidate.pairs) {
        user += "- " + graph.fact(p.fact_id).text + "\n";
    }
    user += "\nSource Contexts:\n";
    for (const EventMember& p : candidate.pairs) {
        const InteractionContext& ctx = graph.context(p.context_id);
        user += "\n[" + ctx.timestamp_label + "] (speakers: " + text::join(ctx.speakers, ", ") +
                ")\n" + ctx.text + "\n";
    }
    return {system_message(prompts::kEventIntegration), user_message(std::move(user))};
}

/// Synthesizes and stores one event from a candidate. A completion that
/// cannot be parsed as a nonempty string list is retried once; a second
/// failure raises ExtractionParseError (build_event_graph skips and counts
/// those).
inline AssociativeEvent integrate_event(const EventCandidate& candidate, const LmBackend& backend,
                                        const EmbeddingProviderSpec& provider, MemoryGraph& graph,
                                        UsageMeter* usage = nullptr) {
    std::vector<ChatMessage> prompt = build_integration_prompt(candidate, graph);
    std::vector<std::string> narratives;
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            narratives = parse_json_string_list(complete(backend, prompt, usage));
            if (narratives.empty()) {
                throw ExtractionParseError("integration produced an empty narrative list");
            }
            break;
        } catch (const ExtractionParseError&) {
            if (attempt == 1) throw;
            narratives.clear();
        }
    }

    AssociativeEvent event;
    event.narratives = narratives;
    event.members = candidate.pairs;
    event.embedding = embed_texts(provider, {text::join(narratives, "\n")}).front();
    std::string id = graph.add_event(std::move(event));
    return graph.event(id);
}

/// Builds the event layer: every fact anchors a cluster in insertion order;
/// clusters are pruned for local redundancy, deduplicated per context set,
/// and the survivors integrated. All fact-fact similarities above tau are
/// recorded as association edges along the way.
inline AegBuildRecord build_event_graph(MemoryGraph& graph, const VectorIndex& fact_index,
                                        double tau, std::size_t n_neighbors,
                                        const LmBackend& backend,
                                        const EmbeddingProviderSpec& provider,
                                        UsageMeter* usage = nullptr) {
    AegBuildRecord record;
    record.tau = tau;
    record.n_neighbors = n_neighbors;

    std::vector<EventCandidate> candidates;
    for (const AtomicFact& anchor : graph.facts()) {
        std::vector<ScoredId> satisfying = fact_index.all_above_threshold(anchor.fact_id, tau);
        for (const ScoredId& s : satisfying) {
            graph.add_assoc_edge(anchor.fact_id, s.id);
        }
        if (satisfying.empty()) continue;  // isolated fact, no cluster

        CandidateCluster cluster;
        cluster.anchor_fact_id = anchor.fact_id;
        cluster.members.push_back({anchor.fact_id, 1.0});
        for (std::size_t i = 0; i < std::min(satisfying.size(), n_neighbors); ++i) {
            cluster.members.push_back({satisfying[i].id, satisfying[i].score});
        }
        ++record.clusters_formed;

        if (is_locally_redundant(cluster, graph, n_neighbors)) {
            ++record.clusters_discarded_redundant;
            continue;
        }
        std::optional<EventCandidate> candidate = dedup_to_event_candidate(cluster, graph);
        if (!candidate) {
            ++record.clusters_discarded_single_context;
            continue;
        }
        candidates.push_back(std::move(*candidate));
    }

    std::size_t before = candidates.size();
    candidates = dedup_cluster_signatures(std::move(candidates));
    record.clusters_deduplicated = before - candidates.size();

    for (const EventCandidate& candidate : candidates) {
        try {
            integrate_event(candidate, backend, provider, graph, usage);
            ++record.events_created;
        } catch (const ExtractionParseError&) {
            ++record.integration_failures;
        }
    }

    graph.set_build_record(record);
    return record;
}

}  // namespace memanchor
