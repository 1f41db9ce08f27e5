// Command-line front end for the anchored memory engine: ingest a corpus,
// build the event layer, query a graph, run evaluations, inspect stats.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "memanchor/memanchor.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitBackend = 3;

// Advisory lock held while a command mutates a graph file. Readers do not
// take it; concurrent ingest/build against one file is what it prevents.
class FileLock {
public:
    explicit FileLock(const std::filesystem::path& target) : path_(target.string() + ".lock") {
        fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ >= 0 && ::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd_);
            fd_ = -1;
            throw memanchor::Error("graph file is locked by another process: " + path_);
        }
    }
    ~FileLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
            ::unlink(path_.c_str());
        }
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    std::string path_;
    int fd_ = -1;
};

struct CliOverrides {
    std::string config_path;
    std::string preset;
    double tau = -1.0;
    long long n_neighbors = -1;
    long long top_k = -1;
    std::vector<std::string> backends;  // role=kind
};

memanchor::LmBackend::Kind stub_kind_for_role(const std::string& role) {
    using Kind = memanchor::LmBackend::Kind;
    if (role == "extractor") return Kind::stub_extractor;
    if (role == "integrator") return Kind::stub_integrator;
    if (role == "answerer") return Kind::stub_answerer;
    if (role == "judge") return Kind::stub_judge;
    throw memanchor::InvalidInputError("unknown backend role '" + role +
                                       "' (extractor|integrator|answerer|judge)");
}

// flag > config file > built-in default
memanchor::EngineConfig resolve_config(const CliOverrides& overrides) {
    memanchor::EngineConfig config;
    if (!overrides.config_path.empty()) config = memanchor::load_config(overrides.config_path);
    if (!overrides.preset.empty()) memanchor::apply_preset(config, overrides.preset);
    if (overrides.tau >= 0.0) config.tau = overrides.tau;
    if (overrides.n_neighbors >= 0) config.n_neighbors = static_cast<std::size_t>(overrides.n_neighbors);
    if (overrides.top_k >= 0) config.top_k = static_cast<std::size_t>(overrides.top_k);
    for (const std::string& spec : overrides.backends) {
        std::size_t eq = spec.find('=');
        if (eq == std::string::npos) {
            throw memanchor::InvalidInputError("--backend expects role=kind, got '" + spec + "'");
        }
        std::string role = spec.substr(0, eq);
        std::string kind = spec.substr(eq + 1);
        memanchor::LmBackend* slot = nullptr;
        if (role == "extractor") slot = &config.extractor;
        else if (role == "integrator") slot = &config.integrator;
        else if (role == "answerer") slot = &config.answerer;
        else if (role == "judge") slot = &config.judge;
        else throw memanchor::InvalidInputError("unknown backend role '" + role + "'");
        if (kind == "stub") {
            slot->kind = stub_kind_for_role(role);
        } else if (kind == "remote") {
            slot->kind = memanchor::LmBackend::Kind::remote;
        } else {
            throw memanchor::InvalidInputError("backend kind must be stub or remote, got '" + kind + "'");
        }
    }
    config.validate();
    return config;
}

void echo_config(const memanchor::EngineConfig& config) {
    std::cerr << "effective config: " << memanchor::config_summary(config).dump() << "\n";
}

std::vector<memanchor::InteractionContext> corpus_contexts(const memanchor::ConversationCorpus& corpus) {
    std::vector<memanchor::InteractionContext> contexts;
    for (const memanchor::Conversation& conv : corpus.conversations) {
        for (const memanchor::CorpusSession& session : conv.sessions) {
            contexts.push_back(memanchor::to_context(session));
        }
    }
    return contexts;
}

int cmd_ingest(const std::string& corpus_path, const std::string& graph_path,
               const memanchor::EngineConfig& config) {
    echo_config(config);
    memanchor::ConversationCorpus corpus = memanchor::load_corpus(corpus_path);
    for (const std::string& w : corpus.warnings) std::cerr << "warning: " << w << "\n";

    FileLock lock{std::filesystem::path(graph_path)};
    memanchor::MemoryGraph graph(config.embedding.dimension);
    memanchor::UsageMeter usage;
    std::vector<memanchor::ExtractionRecord> records =
        memanchor::ingest_corpus(corpus_contexts(corpus), config.extractor, config.embedding,
                                 graph, config.extraction_example, &usage, config.parallelism);
    std::size_t failed = 0;
    for (const memanchor::ExtractionRecord& r : records) {
        if (r.failed) {
            ++failed;
            std::cerr << "warning: context '" << r.context_id << "' yielded no facts (parse failure)\n";
        }
    }
    memanchor::save_graph(graph, graph_path);
    memanchor::GraphStats stats = graph.stats();
    std::cout << "ingested " << stats.num_contexts << " contexts, " << stats.num_facts
              << " facts (" << failed << " extraction failures, " << usage.calls()
              << " LM calls, " << usage.total_tokens() << " tokens) -> " << graph_path << "\n";
    return kExitOk;
}

int cmd_build(const std::string& graph_path, const memanchor::EngineConfig& config) {
    echo_config(config);
    FileLock lock{std::filesystem::path(graph_path)};
    memanchor::MemoryGraph graph = memanchor::load_graph(graph_path);
    if (graph.facts().empty()) {
        std::cerr << "warning: graph has no facts; nothing to cluster\n";
    }
    memanchor::VectorIndex fact_index(graph.embedding_dim());
    for (const memanchor::AtomicFact& f : graph.facts()) fact_index.add(f.fact_id, f.embedding);

    memanchor::UsageMeter usage;
    memanchor::AegBuildRecord record =
        memanchor::build_event_graph(graph, fact_index, config.tau, config.n_neighbors,
                                     config.integrator, config.embedding, &usage);
    memanchor::save_graph(graph, graph_path);

    std::cout << "facts: " << graph.facts().size() << "\n"
              << "events created: " << record.events_created << "\n"
              << "clusters formed: " << record.clusters_formed << "\n"
              << "discarded (redundant): " << record.clusters_discarded_redundant << "\n"
              << "discarded (single-context): " << record.clusters_discarded_single_context << "\n"
              << "deduplicated: " << record.clusters_deduplicated << "\n"
              << "integration failures: " << record.integration_failures << "\n"
              << "tau=" << record.tau << " N=" << record.n_neighbors << "\n";
    return kExitOk;
}

int cmd_query(const std::string& graph_path, const std::string& question,
              const memanchor::EngineConfig& config, bool show_facts, bool show_events,
              bool no_answer) {
    echo_config(config);
    memanchor::MemoryGraph graph = memanchor::load_graph(graph_path);
    memanchor::VectorIndex fact_index(graph.embedding_dim());
    for (const memanchor::AtomicFact& f : graph.facts()) fact_index.add(f.fact_id, f.embedding);
    memanchor::VectorIndex event_index(graph.embedding_dim());
    for (const memanchor::AssociativeEvent& e : graph.events()) event_index.add(e.event_id, e.embedding);

    memanchor::RetrievalResult result = memanchor::retrieve(question, graph, fact_index,
                                                            event_index, config.top_k,
                                                            config.embedding);
    if (show_facts) {
        std::cout << "-- fact hits --\n";
        for (const memanchor::ScoredId& hit : result.fact_hits) {
            const memanchor::AtomicFact& f = graph.fact(hit.id);
            std::printf("%.6f  %s  %s  %s\n", hit.score, hit.id.c_str(),
                        f.source_context_id.c_str(), f.text.c_str());
        }
    }
    if (show_events) {
        std::cout << "-- event hits --\n";
        for (const memanchor::ScoredId& hit : result.event_hits) {
            const memanchor::AssociativeEvent& e = graph.event(hit.id);
            std::printf("%.6f  %s  %s\n", hit.score, hit.id.c_str(),
                        memanchor::text::join(e.narratives, " | ").c_str());
        }
    }

    memanchor::MemoryBlock block = memanchor::assemble_memory(result, graph);
    std::cout << block.rendered << "\n";
    if (!no_answer) {
        std::string answer = memanchor::answer_query(question, block, config.answerer, nullptr,
                                                     config.answer_system_prompt);
        std::cout << "Answer: " << answer << "\n";
    }
    return kExitOk;
}

int cmd_eval(const std::string& corpus_path, const std::string& report_path, bool baseline,
             const memanchor::EngineConfig& config) {
    echo_config(config);
    memanchor::ConversationCorpus corpus = memanchor::load_corpus(corpus_path);
    memanchor::EvalReport report = baseline ? memanchor::run_baseline_eval(corpus, config)
                                            : memanchor::run_eval(corpus, config);
    if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
        if (!out) throw memanchor::Error("cannot open report path '" + report_path + "'");
        out << memanchor::report_to_json(report).dump(2) << "\n";
    }
    std::cout << memanchor::render_report_table(report);
    return report.errors.empty() ? kExitOk : kExitData;
}

int cmd_stats(const std::string& graph_path) {
    memanchor::MemoryGraph graph = memanchor::load_graph(graph_path);
    memanchor::GraphStats stats = graph.stats();
    std::cout << "contexts: " << stats.num_contexts << "\n"
              << "facts: " << stats.num_facts << "\n"
              << "events: " << stats.num_events << "\n"
              << "discarded clusters: " << stats.num_discarded_clusters << "\n"
              << "assoc edges: " << graph.assoc_edges().size() << "\n";
    if (graph.build_record()) {
        const memanchor::AegBuildRecord& r = *graph.build_record();
        std::cout << "build record: tau=" << r.tau << " N=" << r.n_neighbors
                  << " clusters_formed=" << r.clusters_formed
                  << " redundant=" << r.clusters_discarded_redundant
                  << " single_context=" << r.clusters_discarded_single_context
                  << " deduplicated=" << r.clusters_deduplicated
                  << " integration_failures=" << r.integration_failures
                  << " events_created=" << r.events_created << "\n";
    } else {
        std::cout << "build record: none (event layer not built)\n";
    }
    std::size_t violations = graph.validate().size();
    std::cout << "validate: " << (violations == 0 ? "ok" : std::to_string(violations) + " violations")
              << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Anchored long-term memory engine"};
    app.require_subcommand(1);
    app.fallthrough();

    CliOverrides overrides;
    app.add_option("--config", overrides.config_path, "JSON config file");
    app.add_option("--preset", overrides.preset, "named preset (k20)");
    app.add_option("--tau", overrides.tau, "inter-fact similarity threshold");
    app.add_option("--n", overrides.n_neighbors, "neighbor budget N");
    app.add_option("--k", overrides.top_k, "retrieval top-k");
    app.add_option("--backend", overrides.backends, "role=kind override (kind: stub|remote)");

    std::string corpus_path, graph_path, report_path, question;
    bool baseline = false, show_facts = false, show_events = false, no_answer = false;

    CLI::App* ingest = app.add_subcommand("ingest", "load a corpus, extract facts, write a graph");
    ingest->add_option("--corpus", corpus_path, "corpus JSON file");
    ingest->add_option("--graph", graph_path, "output graph file");

    CLI::App* build = app.add_subcommand("build", "cluster facts into events on an ingested graph");
    build->add_option("--graph", graph_path, "graph file");

    CLI::App* query = app.add_subcommand("query", "retrieve memories for a question");
    query->add_option("--graph", graph_path, "graph file");
    query->add_option("question", question, "question text")->required();
    query->add_flag("--show-facts", show_facts, "print ranked fact hits");
    query->add_flag("--show-events", show_events, "print ranked event hits");
    query->add_flag("--no-answer", no_answer, "skip answer generation");

    CLI::App* eval = app.add_subcommand("eval", "run the QA evaluation harness");
    eval->add_option("--corpus", corpus_path, "corpus JSON file");
    eval->add_option("--report", report_path, "JSON report output path");
    eval->add_flag("--baseline", baseline, "run the chunk-retrieval baseline instead");

    CLI::App* stats = app.add_subcommand("stats", "print graph statistics");
    stats->add_option("--graph", graph_path, "graph file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        memanchor::EngineConfig config = resolve_config(overrides);
        // flag > config file > (no default for paths)
        if (graph_path.empty()) graph_path = config.graph_path;
        if (corpus_path.empty()) corpus_path = config.corpus_path;
        if (report_path.empty()) report_path = config.report_path;
        auto need = [](const std::string& value, const char* flag) {
            if (value.empty()) {
                throw memanchor::InvalidInputError(std::string(flag) +
                                                   " is required (flag or config file)");
            }
        };
        if (ingest->parsed()) {
            need(corpus_path, "--corpus");
            need(graph_path, "--graph");
            return cmd_ingest(corpus_path, graph_path, config);
        }
        if (build->parsed()) {
            need(graph_path, "--graph");
            return cmd_build(graph_path, config);
        }
        if (query->parsed()) {
            need(graph_path, "--graph");
            return cmd_query(graph_path, question, config, show_facts, show_events, no_answer);
        }
        if (eval->parsed()) {
            need(corpus_path, "--corpus");
            return cmd_eval(corpus_path, report_path, baseline, config);
        }
        if (stats->parsed()) {
            need(graph_path, "--graph");
            return cmd_stats(graph_path);
        }
        std::cerr << "error: no subcommand\n";
        return kExitUsage;
    } catch (const memanchor::TransportError& ex) {
        std::cerr << "backend error: " << ex.what() << "\n";
        return kExitBackend;
    } catch (const memanchor::EmptyCompletionError& ex) {
        std::cerr << "backend error: " << ex.what() << "\n";
        return kExitBackend;
    } catch (const memanchor::InvalidInputError& ex) {
        std::cerr << "usage error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const memanchor::Error& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitData;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitData;
    }
}
