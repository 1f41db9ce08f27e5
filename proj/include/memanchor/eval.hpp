#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "memanchor/config.hpp"
#include "memanchor/corpus.hpp"
#include "memanchor/events.hpp"
#include "memanchor/extract.hpp"
#include "memanchor/graph.hpp"
#include "memanchor/lm.hpp"
#include "memanchor/metrics.hpp"
#include "memanchor/prompts.hpp"
#include "memanchor/retrieve.hpp"

namespace memanchor {

/// Grades one answer against its gold answer. One retry on an ambiguous
/// verdict; a second ambiguity propagates so the caller can mark the item
/// unjudged instead of scoring transport noise as a wrong answer.
inline JudgeLabel judge(const std::string& question, const std::string& gold_answer,
                        const std::string& generated_answer, const LmBackend& backend,
                        UsageMeter* usage = nullptr) {
    std::vector<ChatMessage> prompt = {
        user_message(prompts::build_judge_prompt(question, gold_answer, generated_answer))};
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            return parse_judge_label(complete(backend, prompt, usage));
        } catch (const AmbiguousVerdictError&) {
            if (attempt == 1) throw;
        }
    }
    throw AmbiguousVerdictError("unreachable");
}

struct CategoryResult {
    std::size_t count = 0;
    double f1_sum = 0.0;
    double bleu_sum = 0.0;
    std::size_t correct = 0;
    std::size_t judged = 0;
    std::size_t unjudged = 0;

    double f1_pct() const { return count ? 100.0 * f1_sum / static_cast<double>(count) : 0.0; }
    double bleu_pct() const { return count ? 100.0 * bleu_sum / static_cast<double>(count) : 0.0; }
    double acc_pct() const {
        return judged ? 100.0 * static_cast<double>(correct) / static_cast<double>(judged) : 0.0;
    }
};

struct PhaseUsage {
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    std::uint64_t calls = 0;
    double seconds = 0.0;  // console reporting only, never serialized

    std::uint64_t total_tokens() const { return prompt_tokens + completion_tokens; }

    void absorb(const UsageMeter& meter, double elapsed_seconds) {
        prompt_tokens += meter.prompt_tokens();
        completion_tokens += meter.completion_tokens();
        calls += meter.calls();
        seconds += elapsed_seconds;
    }
};

struct EvalReport {
    std::string method;  // "anchored" or "naive_rag"
    std::array<CategoryResult, 4> categories;  // indexed by QaCategory
    CategoryResult average;

    // summary = fact extraction, update = event integration
    PhaseUsage summary_phase;
    PhaseUsage update_phase;
    PhaseUsage answer_phase;
    PhaseUsage judge_phase;

    std::size_t total_facts = 0;
    std::size_t total_events = 0;
    std::size_t total_discarded_clusters = 0;

    std::size_t conversations_evaluated = 0;
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    nlohmann::json config_echo;

    CategoryResult& category(QaCategory c) { return categories[static_cast<std::size_t>(c)]; }
    const CategoryResult& category(QaCategory c) const {
        return categories[static_cast<std::size_t>(c)];
    }
};

namespace detail {

inline constexpr std::array<QaCategory, 4> kAllCategories = {
    QaCategory::single_hop, QaCategory::multi_hop, QaCategory::open_domain, QaCategory::temporal};

inline void score_item(EvalReport& report, const QaItem& item, const std::string& answer,
                       const LmBackend& judge_backend, UsageMeter& judge_meter) {
    CategoryResult& bucket = report.category(item.category);
    ++bucket.count;
    bucket.f1_sum += token_f1(answer, item.gold_answer);
    bucket.bleu_sum += bleu1(answer, item.gold_answer);
    try {
        JudgeLabel label = judge(item.question, item.gold_answer, answer, judge_backend, &judge_meter);
        ++bucket.judged;
        if (label == JudgeLabel::correct) ++bucket.correct;
    } catch (const AmbiguousVerdictError&) {
        ++bucket.unjudged;
    }
}

inline void finalize_average(EvalReport& report) {
    for (const CategoryResult& c : report.categories) {
        report.average.count += c.count;
        report.average.f1_sum += c.f1_sum;
        report.average.bleu_sum += c.bleu_sum;
        report.average.correct += c.correct;
        report.average.judged += c.judged;
        report.average.unjudged += c.unjudged;
    }
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline VectorIndex index_of_facts(const MemoryGraph& graph) {
    VectorIndex index(graph.embedding_dim());
    for (const AtomicFact& f : graph.facts()) index.add(f.fact_id, f.embedding);
    return index;
}

inline VectorIndex index_of_events(const MemoryGraph& graph) {
    VectorIndex index(graph.embedding_dim());
    for (const AssociativeEvent& e : graph.events()) index.add(e.event_id, e.embedding);
    return index;
}

}  // namespace detail

/// Full pipeline evaluation: per conversation, build a fresh graph (ingest
/// then event integration), answer every QA item through anchored retrieval,
/// and score with token-F1, BLEU-1, and the judge. A build failure skips
/// that conversation and is reported; the others still run.
inline EvalReport run_eval(const ConversationCorpus& corpus, const EngineConfig& config) {
    config.validate();
    EvalReport report;
    report.method = "anchored";
    report.config_echo = config_summary(config);
    report.warnings = corpus.warnings;

    for (const Conversation& conv : corpus.conversations) {
        try {
            UsageMeter extraction_meter, integration_meter, answer_meter, judge_meter;

            auto t0 = std::chrono::steady_clock::now();
            MemoryGraph graph(config.embedding.dimension);
            std::vector<InteractionContext> contexts;
            contexts.reserve(conv.sessions.size());
            for (const CorpusSession& session : conv.sessions) {
                contexts.push_back(to_context(session));
            }
            ingest_corpus(std::move(contexts), config.extractor, config.embedding, graph,
                          config.extraction_example, &extraction_meter, config.parallelism);
            VectorIndex fact_index = detail::index_of_facts(graph);
            report.summary_phase.absorb(extraction_meter, detail::seconds_since(t0));

            auto t1 = std::chrono::steady_clock::now();
            AegBuildRecord build = build_event_graph(graph, fact_index, config.tau,
                                                     config.n_neighbors, config.integrator,
                                                     config.embedding, &integration_meter);
            VectorIndex event_index = detail::index_of_events(graph);
            report.update_phase.absorb(integration_meter, detail::seconds_since(t1));

            report.total_facts += graph.facts().size();
            report.total_events += graph.events().size();
            report.total_discarded_clusters += build.total_discarded();

            auto t2 = std::chrono::steady_clock::now();
            for (const QaItem& item : conv.qa) {
                RetrievalResult result = retrieve(item.question, graph, fact_index, event_index,
                                                  config.top_k, config.embedding);
                MemoryBlock block = assemble_memory(result, graph);
                std::string answer = answer_query(item.question, block, config.answerer,
                                                  &answer_meter, config.answer_system_prompt);
                detail::score_item(report, item, answer, config.judge, judge_meter);
            }
            report.answer_phase.absorb(answer_meter, detail::seconds_since(t2));
            report.judge_phase.absorb(judge_meter, 0.0);
            ++report.conversations_evaluated;
        } catch (const Error& ex) {
            report.errors.push_back("conversation '" + conv.conversation_id + "': " + ex.what());
        }
    }
    detail::finalize_average(report);
    return report;
}

/// Chunk-retrieval baseline: no extraction, no events; contexts are embedded
/// directly and the top-k serve as the memory block in rank order.
inline EvalReport run_baseline_eval(const ConversationCorpus& corpus, const EngineConfig& config) {
    config.validate();
    EvalReport report;
    report.method = "naive_rag";
    report.config_echo = config_summary(config);
    report.warnings = corpus.warnings;

    for (const Conversation& conv : corpus.conversations) {
        try {
            UsageMeter answer_meter, judge_meter;
            MemoryGraph graph(config.embedding.dimension);
            for (const CorpusSession& session : conv.sessions) {
                graph.add_context(to_context(session));
            }
            VectorIndex context_index(config.embedding.dimension);
            {
                std::vector<std::pair<std::string, std::string>> nodes;
                for (const InteractionContext& ctx : graph.contexts()) {
                    nodes.emplace_back(ctx.context_id, ctx.text);
                }
                context_index = build_index(nodes, config.embedding);
            }

            auto t0 = std::chrono::steady_clock::now();
            for (const QaItem& item : conv.qa) {
                RetrievalResult result;
                result.resolved_contexts = naive_rag_retrieve(item.question, graph, context_index,
                                                              config.top_k, config.embedding);
                MemoryBlock block = assemble_memory(result, graph);
                std::string answer = answer_query(item.question, block, config.answerer,
                                                  &answer_meter, config.answer_system_prompt);
                detail::score_item(report, item, answer, config.judge, judge_meter);
            }
            report.answer_phase.absorb(answer_meter, detail::seconds_since(t0));
            report.judge_phase.absorb(judge_meter, 0.0);
            ++report.conversations_evaluated;
        } catch (const Error& ex) {
            report.errors.push_back("conversation '" + conv.conversation_id + "': " + ex.what());
        }
    }
    detail::finalize_average(report);
    return report;
}

namespace detail {

inline nlohmann::json category_to_json(const CategoryResult& c) {
    return {{"f1", c.f1_pct()},   {"bleu1", c.bleu_pct()},   {"acc", c.acc_pct()},
            {"count", c.count},   {"judged", c.judged},      {"unjudged", c.unjudged},
            {"correct", c.correct}};
}

inline nlohmann::json phase_to_json(const PhaseUsage& p) {
    // wall-clock seconds intentionally excluded: the JSON artifact is a pure
    // function of corpus + config
    return {{"prompt_tokens", p.prompt_tokens},
            {"completion_tokens", p.completion_tokens},
            {"total_tokens", p.total_tokens()},
            {"calls", p.calls}};
}

}  // namespace detail

inline nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json categories;
    for (QaCategory c : detail::kAllCategories) {
        categories[to_string(c)] = detail::category_to_json(report.category(c));
    }
    categories["average"] = detail::category_to_json(report.average);

    std::uint64_t grand_total = report.summary_phase.total_tokens() +
                                report.update_phase.total_tokens() +
                                report.answer_phase.total_tokens() +
                                report.judge_phase.total_tokens();
    return {{"method", report.method},
            {"categories", categories},
            {"accounting",
             {{"summary", detail::phase_to_json(report.summary_phase)},
              {"update", detail::phase_to_json(report.update_phase)},
              {"answering", detail::phase_to_json(report.answer_phase)},
              {"judging", detail::phase_to_json(report.judge_phase)},
              {"total_tokens", grand_total}}},
            {"structure",
             {{"facts", report.total_facts},
              {"events", report.total_events},
              {"discarded_clusters", report.total_discarded_clusters}}},
            {"conversations_evaluated", report.conversations_evaluated},
            {"errors", report.errors},
            {"warnings", report.warnings},
            {"config", report.config_echo}};
}

/// Fixed-width console table in the wide layout (one column group per
/// category plus Average, each with F1 / BLEU / ACC); this is also where
/// wall-clock runtimes appear.
inline std::string render_report_table(const EvalReport& report) {
    auto cell = [](double v) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%6.2f", v);
        return std::string(buf);
    };
    auto group = [&](const CategoryResult& c) {
        return cell(c.f1_pct()) + " " + cell(c.bleu_pct()) + " " + cell(c.acc_pct());
    };

    std::string out;
    char head[24];
    std::snprintf(head, sizeof(head), "%-12s", "Method");
    out += std::string(head);
    for (const char* name : {"Single Hop", "Multi Hop", "Open Domain", "Temporal", "Average"}) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), " | %-20s", name);
        out += buf;
    }
    out += "\n";
    std::snprintf(head, sizeof(head), "%-12s", "");
    out += std::string(head);
    for (int i = 0; i < 5; ++i) out += " |     F1   BLEU    ACC";
    out += "\n";
    std::snprintf(head, sizeof(head), "%-12s", report.method.c_str());
    out += std::string(head);
    for (QaCategory c : detail::kAllCategories) out += " | " + group(report.category(c));
    out += " | " + group(report.average) + "\n";

    out += "\nQuestions: " + std::to_string(report.average.count) +
           " (judged " + std::to_string(report.average.judged) + ", unjudged " +
           std::to_string(report.average.unjudged) + ")\n";

    auto phase_line = [](const char* name, const PhaseUsage& p) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "%-12s tokens=%llu (prompt=%llu, completion=%llu) calls=%llu time=%.2fs\n",
                      name, static_cast<unsigned long long>(p.total_tokens()),
                      static_cast<unsigned long long>(p.prompt_tokens),
                      static_cast<unsigned long long>(p.completion_tokens),
                      static_cast<unsigned long long>(p.calls), p.seconds);
        return std::string(buf);
    };
    out += "\nAccounting:\n";
    out += phase_line("summary", report.summary_phase);
    out += phase_line("update", report.update_phase);
    out += phase_line("answering", report.answer_phase);
    out += phase_line("judging", report.judge_phase);
    out += "Structure: facts=" + std::to_string(report.total_facts) +
           " events=" + std::to_string(report.total_events) +
           " discarded_clusters=" + std::to_string(report.total_discarded_clusters) + "\n";
    if (!report.errors.empty()) {
        out += "Errors:\n";
        for (const std::string& e : report.errors) out += "  " + e + "\n";
    }
    return out;
}

}  // namespace memanchor
