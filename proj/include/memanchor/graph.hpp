#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "memanchor/errors.hpp"
#include "memanchor/index.hpp"

namespace memanchor {

/// A raw interaction unit. The text is the ground truth of the memory store:
/// it is stored verbatim and is never rewritten by any operation.
struct InteractionContext {
    std::string context_id;       // assigned at insertion when empty
    std::string session_id;
    std::string timestamp_label;  // free text, stored as given, never parsed
    std::vector<std::string> speakers;
    std::string text;
};

/// A concise statement extracted from exactly one context. The
/// source_context_id field is the mapping edge back to that context.
struct AtomicFact {
    std::string fact_id;  // assigned at insertion when empty
    std::string text;
    std::string source_context_id;
    EmbeddingVector embedding;
};

struct EventMember {
    std::string context_id;
    std::string fact_id;
};

/// A synthesized cross-context narrative. Each member pairs a distinct
/// context with the fact that represented it during clustering.
struct AssociativeEvent {
    std::string event_id;  // assigned at insertion when empty
    std::vector<std::string> narratives;
    std::vector<EventMember> members;
    EmbeddingVector embedding;
};

struct AegBuildRecord {
    std::size_t clusters_formed = 0;
    std::size_t clusters_discarded_redundant = 0;
    std::size_t clusters_discarded_single_context = 0;
    std::size_t clusters_deduplicated = 0;
    std::size_t integration_failures = 0;
    std::size_t events_created = 0;
    double tau = 0.0;
    std::size_t n_neighbors = 0;

    std::size_t total_discarded() const {
        return clusters_discarded_redundant + clusters_discarded_single_context;
    }
};

struct GraphStats {
    std::size_t num_contexts = 0;
    std::size_t num_facts = 0;
    std::size_t num_events = 0;
    std::size_t num_discarded_clusters = 0;
};

constexpr const char* kGraphFormatName = "anchor-memory-graph";
constexpr int kGraphFormatVersion = 1;

/// The heterogeneous memory store: contexts, facts, events, plus the
/// similarity edges recorded during event-graph construction. Mutable only
/// while building; retrieval code takes it by const reference.
class MemoryGraph {
public:
    explicit MemoryGraph(std::size_t embedding_dim) : embedding_dim_(embedding_dim) {
        if (embedding_dim == 0) throw InvalidInputError("MemoryGraph: embedding_dim must be positive");
    }

    std::size_t embedding_dim() const { return embedding_dim_; }

    /// Stores a context verbatim. An empty context_id gets the next
    /// generated id. Duplicate ids are rejected.
    std::string add_context(InteractionContext ctx) {
        if (ctx.context_id.empty()) ctx.context_id = next_free_id("c", context_pos_);
        if (context_pos_.count(ctx.context_id)) {
            throw DuplicateIdError("duplicate context id '" + ctx.context_id + "'");
        }
        context_pos_.emplace(ctx.context_id, contexts_.size());
        contexts_.push_back(std::move(ctx));
        return contexts_.back().context_id;
    }

    /// Stores a fact. Its source context must exist and its embedding must
    /// match the graph dimension.
    std::string add_fact(AtomicFact fact) {
        if (!context_pos_.count(fact.source_context_id)) {
            throw IntegrityError("fact '" + fact.fact_id + "' references missing context '" +
                                 fact.source_context_id + "'");
        }
        if (fact.embedding.size() != embedding_dim_) {
            throw DimensionMismatchError("fact embedding has dimension " +
                                         std::to_string(fact.embedding.size()) + ", graph expects " +
                                         std::to_string(embedding_dim_));
        }
        if (fact.fact_id.empty()) fact.fact_id = next_free_id("f", fact_pos_);
        if (fact_pos_.count(fact.fact_id)) {
            throw DuplicateIdError("duplicate fact id '" + fact.fact_id + "'");
        }
        fact_pos_.emplace(fact.fact_id, facts_.size());
        facts_.push_back(std::move(fact));
        return facts_.back().fact_id;
    }

    /// Stores an event. Members must cover >= 2 distinct existing contexts
    /// and every member fact must map to its paired context.
    std::string add_event(AssociativeEvent event) {
        validate_event_members(event);
        if (event.embedding.size() != embedding_dim_) {
            throw DimensionMismatchError("event embedding has dimension " +
                                         std::to_string(event.embedding.size()) + ", graph expects " +
                                         std::to_string(embedding_dim_));
        }
        if (event.event_id.empty()) event.event_id = next_free_id("e", event_pos_);
        if (event_pos_.count(event.event_id)) {
            throw DuplicateIdError("duplicate event id '" + event.event_id + "'");
        }
        event_pos_.emplace(event.event_id, events_.size());
        events_.push_back(std::move(event));
        return events_.back().event_id;
    }

    /// Records an undirected fact-fact similarity edge. Kept for audit and
    /// validation; retrieval never traverses these.
    void add_assoc_edge(const std::string& fact_a, const std::string& fact_b) {
        if (!fact_pos_.count(fact_a) || !fact_pos_.count(fact_b)) {
            throw IntegrityError("assoc edge endpoint missing: (" + fact_a + ", " + fact_b + ")");
        }
        if (fact_a == fact_b) throw InvalidInputError("assoc edge endpoints must differ");
        auto edge = fact_a < fact_b ? std::make_pair(fact_a, fact_b) : std::make_pair(fact_b, fact_a);
        std::string key = edge.first + "\x1f" + edge.second;
        if (assoc_seen_.insert(key).second) assoc_edges_.push_back(std::move(edge));
    }

    bool has_context(const std::string& id) const { return context_pos_.count(id) != 0; }
    bool has_fact(const std::string& id) const { return fact_pos_.count(id) != 0; }
    bool has_event(const std::string& id) const { return event_pos_.count(id) != 0; }

    const InteractionContext& context(const std::string& id) const {
        auto it = context_pos_.find(id);
        if (it == context_pos_.end()) throw NotFoundError("unknown context id '" + id + "'");
        return contexts_[it->second];
    }

    const AtomicFact& fact(const std::string& id) const {
        auto it = fact_pos_.find(id);
        if (it == fact_pos_.end()) throw NotFoundError("unknown fact id '" + id + "'");
        return facts_[it->second];
    }

    const AssociativeEvent& event(const std::string& id) const {
        auto it = event_pos_.find(id);
        if (it == event_pos_.end()) throw NotFoundError("unknown event id '" + id + "'");
        return events_[it->second];
    }

    /// Insertion position of a context; insertion order is chronological
    /// order (contexts arrive in corpus/session order).
    std::size_t context_position(const std::string& id) const {
        auto it = context_pos_.find(id);
        if (it == context_pos_.end()) throw NotFoundError("unknown context id '" + id + "'");
        return it->second;
    }

    const std::vector<InteractionContext>& contexts() const { return contexts_; }
    const std::vector<AtomicFact>& facts() const { return facts_; }
    const std::vector<AssociativeEvent>& events() const { return events_; }
    const std::vector<std::pair<std::string, std::string>>& assoc_edges() const {
        return assoc_edges_;
    }

    /// Resolves facts to their source contexts: the deduplicated set
    /// {M(f)}, in chronological (insertion) order.
    std::vector<InteractionContext> contexts_of_facts(const std::vector<std::string>& fact_ids) const {
        std::set<std::size_t> positions;
        for (const std::string& fid : fact_ids) {
            const AtomicFact& f = fact(fid);  // NotFoundError on unknown id
            positions.insert(context_position(f.source_context_id));
        }
        std::vector<InteractionContext> out;
        out.reserve(positions.size());
        for (std::size_t pos : positions) out.push_back(contexts_[pos]);
        return out;
    }

    /// Checks every structural invariant and returns one description per
    /// violation. Violations are data, not exceptions: a graph loaded from
    /// a foreign file may be inspected before use.
    std::vector<std::string> validate() const {
        std::vector<std::string> violations;
        for (const AtomicFact& f : facts_) {
            if (!context_pos_.count(f.source_context_id)) {
                violations.push_back("fact '" + f.fact_id + "' has dangling source_context_id '" +
                                     f.source_context_id + "'");
            }
            if (f.embedding.size() != embedding_dim_) {
                violations.push_back("fact '" + f.fact_id + "' embedding dimension " +
                                     std::to_string(f.embedding.size()) + " != " +
                                     std::to_string(embedding_dim_));
            }
        }
        for (const AssociativeEvent& e : events_) {
            if (e.members.size() < 2) {
                violations.push_back("event '" + e.event_id + "' has fewer than 2 members");
            }
            std::unordered_set<std::string> member_contexts;
            for (const EventMember& m : e.members) {
                if (!member_contexts.insert(m.context_id).second) {
                    violations.push_back("event '" + e.event_id + "' repeats context '" +
                                         m.context_id + "'");
                }
                if (!context_pos_.count(m.context_id)) {
                    violations.push_back("event '" + e.event_id + "' references missing context '" +
                                         m.context_id + "'");
                    continue;
                }
                auto fit = fact_pos_.find(m.fact_id);
                if (fit == fact_pos_.end()) {
                    violations.push_back("event '" + e.event_id + "' references missing fact '" +
                                         m.fact_id + "'");
                } else if (facts_[fit->second].source_context_id != m.context_id) {
                    violations.push_back("event '" + e.event_id + "' pairs fact '" + m.fact_id +
                                         "' with context '" + m.context_id +
                                         "' but the fact maps to '" +
                                         facts_[fit->second].source_context_id + "'");
                }
            }
            if (e.embedding.size() != embedding_dim_) {
                violations.push_back("event '" + e.event_id + "' embedding dimension " +
                                     std::to_string(e.embedding.size()) + " != " +
                                     std::to_string(embedding_dim_));
            }
        }
        for (const auto& [a, b] : assoc_edges_) {
            if (!fact_pos_.count(a) || !fact_pos_.count(b)) {
                violations.push_back("assoc edge (" + a + ", " + b + ") has a missing endpoint");
            }
        }
        return violations;
    }

    GraphStats stats() const {
        GraphStats s;
        s.num_contexts = contexts_.size();
        s.num_facts = facts_.size();
        s.num_events = events_.size();
        s.num_discarded_clusters = build_record_ ? build_record_->total_discarded() : 0;
        return s;
    }

    void set_build_record(AegBuildRecord record) { build_record_ = record; }
    const std::optional<AegBuildRecord>& build_record() const { return build_record_; }

    // Raw insertion used by the file loader: no invariant enforcement beyond
    // id uniqueness, so validate() can report on whatever was loaded.
    void load_context_unchecked(InteractionContext ctx) {
        if (context_pos_.count(ctx.context_id)) {
            throw ParseError("duplicate context id '" + ctx.context_id + "' in file");
        }
        context_pos_.emplace(ctx.context_id, contexts_.size());
        contexts_.push_back(std::move(ctx));
    }

    void load_fact_unchecked(AtomicFact fact) {
        if (fact_pos_.count(fact.fact_id)) {
            throw ParseError("duplicate fact id '" + fact.fact_id + "' in file");
        }
        fact_pos_.emplace(fact.fact_id, facts_.size());
        facts_.push_back(std::move(fact));
    }

    void load_event_unchecked(AssociativeEvent event) {
        if (event_pos_.count(event.event_id)) {
            throw ParseError("duplicate event id '" + event.event_id + "' in file");
        }
        event_pos_.emplace(event.event_id, events_.size());
        events_.push_back(std::move(event));
    }

    void load_assoc_edge_unchecked(std::string a, std::string b) {
        auto edge = a < b ? std::make_pair(std::move(a), std::move(b))
                          : std::make_pair(std::move(b), std::move(a));
        std::string key = edge.first + "\x1f" + edge.second;
        if (assoc_seen_.insert(key).second) assoc_edges_.push_back(std::move(edge));
    }

private:
    void validate_event_members(const AssociativeEvent& event) const {
        if (event.members.size() < 2) {
            throw IntegrityError("event must span at least 2 contexts");
        }
        std::unordered_set<std::string> seen_contexts;
        for (const EventMember& m : event.members) {
            if (!seen_contexts.insert(m.context_id).second) {
                throw IntegrityError("event repeats context '" + m.context_id + "'");
            }
            auto fit = fact_pos_.find(m.fact_id);
            if (fit == fact_pos_.end()) {
                throw IntegrityError("event member fact '" + m.fact_id + "' does not exist");
            }
            if (facts_[fit->second].source_context_id != m.context_id) {
                throw IntegrityError("event member fact '" + m.fact_id + "' maps to '" +
                                     facts_[fit->second].source_context_id + "', not '" +
                                     m.context_id + "'");
            }
        }
    }

    template <typename Map>
    std::string next_free_id(const char* prefix, const Map& taken) const {
        std::size_t n = taken.size() + 1;
        std::string candidate = prefix + std::to_string(n);
        while (taken.count(candidate)) candidate = prefix + std::to_string(++n);
        return candidate;
    }

    std::size_t embedding_dim_;
    std::vector<InteractionContext> contexts_;
    std::vector<AtomicFact> facts_;
    std::vector<AssociativeEvent> events_;
    std::vector<std::pair<std::string, std::string>> assoc_edges_;
    std::unordered_map<std::string, std::size_t> context_pos_;
    std::unordered_map<std::string, std::size_t> fact_pos_;
    std::unordered_map<std::string, std::size_t> event_pos_;
    std::unordered_set<std::string> assoc_seen_;
    std::optional<AegBuildRecord> build_record_;
};

namespace detail {

inline nlohmann::json build_record_to_json(const AegBuildRecord& r) {
    return {{"kind", "build_record"},
            {"clusters_formed", r.clusters_formed},
            {"clusters_discarded_redundant", r.clusters_discarded_redundant},
            {"clusters_discarded_single_context", r.clusters_discarded_single_context},
            {"clusters_deduplicated", r.clusters_deduplicated},
            {"integration_failures", r.integration_failures},
            {"events_created", r.events_created},
            {"tau", r.tau},
            {"n_neighbors", r.n_neighbors}};
}

inline AegBuildRecord build_record_from_json(const nlohmann::json& j) {
    AegBuildRecord r;
    r.clusters_formed = j.at("clusters_formed").get<std::size_t>();
    r.clusters_discarded_redundant = j.at("clusters_discarded_redundant").get<std::size_t>();
    r.clusters_discarded_single_context = j.at("clusters_discarded_single_context").get<std::size_t>();
    r.clusters_deduplicated = j.at("clusters_deduplicated").get<std::size_t>();
    r.integration_failures = j.value("integration_failures", std::size_t{0});
    r.events_created = j.at("events_created").get<std::size_t>();
    r.tau = j.at("tau").get<double>();
    r.n_neighbors = j.at("n_neighbors").get<std::size_t>();
    return r;
}

}  // namespace detail

/// Writes the graph as newline-delimited JSON: a header record followed by
/// one record per node/edge plus the build record when present. The write
/// goes to a temp file first and is renamed into place, so a crash never
/// leaves a half-written graph. Output bytes are a pure function of the
/// graph contents.
inline void save_graph(const MemoryGraph& graph, const std::filesystem::path& path) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");

        nlohmann::json header = {{"format", kGraphFormatName},
                                 {"version", kGraphFormatVersion},
                                 {"embedding_dim", graph.embedding_dim()}};
        out << header.dump() << '\n';

        for (const InteractionContext& c : graph.contexts()) {
            nlohmann::json j = {{"kind", "context"},
                                {"context_id", c.context_id},
                                {"session_id", c.session_id},
                                {"timestamp_label", c.timestamp_label},
                                {"speakers", c.speakers},
                                {"text", c.text}};
            out << j.dump() << '\n';
        }
        for (const AtomicFact& f : graph.facts()) {
            nlohmann::json j = {{"kind", "fact"},
                                {"fact_id", f.fact_id},
                                {"text", f.text},
                                {"source_context_id", f.source_context_id},
                                {"embedding", f.embedding}};
            out << j.dump() << '\n';
        }
        for (const AssociativeEvent& e : graph.events()) {
            nlohmann::json members = nlohmann::json::array();
            for (const EventMember& m : e.members) {
                members.push_back({{"context_id", m.context_id}, {"fact_id", m.fact_id}});
            }
            nlohmann::json j = {{"kind", "event"},
                                {"event_id", e.event_id},
                                {"narratives", e.narratives},
                                {"members", members},
                                {"embedding", e.embedding}};
            out << j.dump() << '\n';
        }
        for (const auto& [a, b] : graph.assoc_edges()) {
            nlohmann::json j = {{"kind", "assoc_edge"}, {"fact_ids", {a, b}}};
            out << j.dump() << '\n';
        }
        if (graph.build_record()) {
            out << detail::build_record_to_json(*graph.build_record()).dump() << '\n';
        }
        if (!out) throw Error("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

inline MemoryGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("graph file not found: '" + path.string() + "'");

    auto parse_line = [](const std::string& line, std::size_t line_no) {
        try {
            return nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError("graph file line " + std::to_string(line_no) + ": " + ex.what());
        }
    };

    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw ParseError("graph file line 1: missing header record");
    nlohmann::json header = parse_line(line, 1);
    if (header.value("format", "") != kGraphFormatName) {
        throw ParseError("graph file line 1: unexpected format '" + header.value("format", "") + "'");
    }
    if (header.value("version", -1) != kGraphFormatVersion) {
        throw UnsupportedVersionError("graph file version " +
                                      std::to_string(header.value("version", -1)) +
                                      " is not supported (expected " +
                                      std::to_string(kGraphFormatVersion) + ")");
    }
    if (!header.contains("embedding_dim") || !header["embedding_dim"].is_number_unsigned() ||
        header["embedding_dim"].get<std::size_t>() == 0) {
        throw ParseError("graph file line 1: header missing positive embedding_dim");
    }

    MemoryGraph graph(header["embedding_dim"].get<std::size_t>());
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = parse_line(line, line_no);
        std::string kind = j.value("kind", "");
        try {
            if (kind == "context") {
                InteractionContext c;
                c.context_id = j.at("context_id").get<std::string>();
                c.session_id = j.at("session_id").get<std::string>();
                c.timestamp_label = j.at("timestamp_label").get<std::string>();
                c.speakers = j.at("speakers").get<std::vector<std::string>>();
                c.text = j.at("text").get<std::string>();
                graph.load_context_unchecked(std::move(c));
            } else if (kind == "fact") {
                AtomicFact f;
                f.fact_id = j.at("fact_id").get<std::string>();
                f.text = j.at("text").get<std::string>();
                f.source_context_id = j.at("source_context_id").get<std::string>();
                f.embedding = j.at("embedding").get<EmbeddingVector>();
                graph.load_fact_unchecked(std::move(f));
            } else if (kind == "event") {
                AssociativeEvent e;
                e.event_id = j.at("event_id").get<std::string>();
                e.narratives = j.at("narratives").get<std::vector<std::string>>();
                for (const auto& m : j.at("members")) {
                    e.members.push_back({m.at("context_id").get<std::string>(),
                                         m.at("fact_id").get<std::string>()});
                }
                e.embedding = j.at("embedding").get<EmbeddingVector>();
                graph.load_event_unchecked(std::move(e));
            } else if (kind == "assoc_edge") {
                auto ids = j.at("fact_ids").get<std::vector<std::string>>();
                if (ids.size() != 2) throw ParseError("assoc_edge needs exactly 2 fact_ids");
                graph.load_assoc_edge_unchecked(std::move(ids[0]), std::move(ids[1]));
            } else if (kind == "build_record") {
                graph.set_build_record(detail::build_record_from_json(j));
            } else {
                throw ParseError("unknown record kind '" + kind + "'");
            }
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError("graph file line " + std::to_string(line_no) + ": " + ex.what());
        } catch (const ParseError& ex) {
            throw ParseError("graph file line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return graph;
}

}  // namespace memanchor
