#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "memanchor/errors.hpp"
#include "memanchor/graph.hpp"

namespace memanchor {

enum class QaCategory { single_hop, multi_hop, open_domain, temporal };

inline const char* to_string(QaCategory c) {
    switch (c) {
        case QaCategory::single_hop: return "single_hop";
        case QaCategory::multi_hop: return "multi_hop";
        case QaCategory::open_domain: return "open_domain";
        case QaCategory::temporal: return "temporal";
    }
    return "unknown";
}

inline QaCategory parse_category(const std::string& label) {
    if (label == "single_hop") return QaCategory::single_hop;
    if (label == "multi_hop") return QaCategory::multi_hop;
    if (label == "open_domain") return QaCategory::open_domain;
    if (label == "temporal") return QaCategory::temporal;
    throw CategoryError("unknown QA category '" + label + "'");
}

struct QaItem {
    std::string question;
    std::string gold_answer;
    QaCategory category = QaCategory::single_hop;
    std::string source_conversation_id;
};

struct SessionTurn {
    std::string speaker;
    std::string text;
};

struct CorpusSession {
    std::string session_id;
    std::string timestamp;  // free text, never parsed
    std::vector<SessionTurn> turns;
};

struct Conversation {
    std::string conversation_id;
    std::vector<CorpusSession> sessions;
    std::vector<QaItem> qa;
};

struct ConversationCorpus {
    std::vector<Conversation> conversations;
    std::vector<std::string> warnings;  // dropped items, adapter notes
};

/// One session becomes one interaction context: speaker-tagged turns joined
/// by newlines, speakers listed in order of first appearance. The text set
/// here is what the graph stores verbatim forever.
inline InteractionContext to_context(const CorpusSession& session) {
    InteractionContext ctx;
    ctx.session_id = session.session_id;
    ctx.timestamp_label = session.timestamp;
    std::string body;
    for (const SessionTurn& turn : session.turns) {
        if (std::find(ctx.speakers.begin(), ctx.speakers.end(), turn.speaker) ==
            ctx.speakers.end()) {
            ctx.speakers.push_back(turn.speaker);
        }
        if (!body.empty()) body.push_back('\n');
        body += turn.speaker + ": " + turn.text;
    }
    ctx.text = std::move(body);
    return ctx;
}

namespace detail {

inline ConversationCorpus load_native_corpus(const nlohmann::json& doc) {
    ConversationCorpus corpus;
    const auto& conversations = doc.at("conversations");
    if (!conversations.is_array()) throw ParseError("'conversations' must be an array");
    for (std::size_t ci = 0; ci < conversations.size(); ++ci) {
        const auto& cj = conversations[ci];
        Conversation conv;
        try {
            conv.conversation_id = cj.at("conversation_id").get<std::string>();
            for (const auto& sj : cj.at("sessions")) {
                CorpusSession session;
                session.session_id = sj.at("session_id").get<std::string>();
                session.timestamp = sj.at("timestamp").get<std::string>();
                for (const auto& tj : sj.at("turns")) {
                    session.turns.push_back({tj.at("speaker").get<std::string>(),
                                             tj.at("text").get<std::string>()});
                }
                conv.sessions.push_back(std::move(session));
            }
            for (const auto& qj : cj.value("qa", nlohmann::json::array())) {
                QaItem item;
                item.question = qj.at("question").get<std::string>();
                item.gold_answer = qj.at("answer").get<std::string>();
                item.category = parse_category(qj.at("category").get<std::string>());
                item.source_conversation_id = conv.conversation_id;
                conv.qa.push_back(std::move(item));
            }
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError("corpus conversation " + std::to_string(ci) + ": " + ex.what());
        }
        corpus.conversations.push_back(std::move(conv));
    }
    return corpus;
}

// Adapter for the public LoCoMo release (an array of samples with
// session_<n> / session_<n>_date_time keys and integer QA categories).
// Category codes: 1 multi_hop, 2 temporal, 3 open_domain, 4 single_hop;
// code 5 (adversarial) and anything else is dropped with a warning.
inline ConversationCorpus load_locomo_corpus(const nlohmann::json& doc) {
    ConversationCorpus corpus;
    for (std::size_t si = 0; si < doc.size(); ++si) {
        const auto& sample = doc[si];
        Conversation conv;
        try {
            conv.conversation_id = sample.contains("sample_id")
                                       ? sample.at("sample_id").get<std::string>()
                                       : "sample_" + std::to_string(si);
            const auto& conversation = sample.at("conversation");

            std::vector<std::size_t> session_numbers;
            for (const auto& item : conversation.items()) {
                const std::string& key = item.key();
                if (key.rfind("session_", 0) == 0 && item.value().is_array()) {
                    std::string suffix = key.substr(8);
                    if (!suffix.empty() &&
                        std::all_of(suffix.begin(), suffix.end(),
                                    [](char c) { return c >= '0' && c <= '9'; })) {
                        session_numbers.push_back(static_cast<std::size_t>(std::stoul(suffix)));
                    }
                }
            }
            std::sort(session_numbers.begin(), session_numbers.end());

            for (std::size_t n : session_numbers) {
                std::string key = "session_" + std::to_string(n);
                CorpusSession session;
                session.session_id = key;
                session.timestamp = conversation.value(key + "_date_time", "");
                for (const auto& tj : conversation.at(key)) {
                    SessionTurn turn;
                    turn.speaker = tj.at("speaker").get<std::string>();
                    turn.text = tj.value("text", "");
                    std::string caption = tj.value("blip_caption", "");
                    if (!caption.empty()) turn.text += " [image: " + caption + "]";
                    session.turns.push_back(std::move(turn));
                }
                conv.sessions.push_back(std::move(session));
            }

            for (const auto& qj : sample.value("qa", nlohmann::json::array())) {
                int code = qj.value("category", -1);
                QaCategory category;
                switch (code) {
                    case 1: category = QaCategory::multi_hop; break;
                    case 2: category = QaCategory::temporal; break;
                    case 3: category = QaCategory::open_domain; break;
                    case 4: category = QaCategory::single_hop; break;
                    default:
                        corpus.warnings.push_back("conversation '" + conv.conversation_id +
                                                  "': dropped QA item with unmapped category " +
                                                  std::to_string(code));
                        continue;
                }
                QaItem item;
                item.question = qj.at("question").get<std::string>();
                const auto& answer = qj.at("answer");
                item.gold_answer = answer.is_string() ? answer.get<std::string>() : answer.dump();
                item.category = category;
                item.source_conversation_id = conv.conversation_id;
                conv.qa.push_back(std::move(item));
            }
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError("corpus sample " + std::to_string(si) + ": " + ex.what());
        }
        corpus.conversations.push_back(std::move(conv));
    }
    return corpus;
}

}  // namespace detail

/// Loads a conversation corpus. A top-level object with "conversations" is
/// the native schema; a top-level array is treated as a public LoCoMo
/// release and adapted.
inline ConversationCorpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("corpus file not found: '" + path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError("corpus '" + path.string() + "': " + ex.what());
    }
    if (doc.is_object() && doc.contains("conversations")) return detail::load_native_corpus(doc);
    if (doc.is_array()) return detail::load_locomo_corpus(doc);
    throw ParseError("corpus '" + path.string() +
                     "': expected {\"conversations\": [...]} or a LoCoMo-style array");
}

}  // namespace memanchor
