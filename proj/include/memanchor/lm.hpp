#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "memanchor/errors.hpp"
#include "memanchor/http.hpp"
#include "memanchor/text.hpp"

namespace memanchor {

struct ChatMessage {
    enum class Role { system, user };
    Role role = Role::user;
    std::string content;
};

inline ChatMessage system_message(std::string content) {
    return {ChatMessage::Role::system, std::move(content)};
}

inline ChatMessage user_message(std::string content) {
    return {ChatMessage::Role::user, std::move(content)};
}

struct LmEndpointConfig {
    std::string base_url;
    std::string model_name;
    std::string api_key_env_var = "OPENAI_API_KEY";
    double temperature = 0.0;
    std::chrono::milliseconds timeout{60000};
    int max_retries = 2;

    void validate() const {
        if (max_retries < 0) throw InvalidInputError("max_retries must be >= 0");
        if (temperature < 0.0) throw InvalidInputError("temperature must be >= 0");
    }
};

/// A chat-completion backend: one remote kind plus four rule-based stubs,
/// one per pipeline role, so every pipeline runs without a live model.
struct LmBackend {
    enum class Kind { remote, stub_extractor, stub_integrator, stub_answerer, stub_judge };
    Kind kind = Kind::stub_answerer;
    LmEndpointConfig endpoint;  // used when kind == remote
};

/// Thread-safe token/call accumulator, one per accounting phase.
class UsageMeter {
public:
    void add(std::uint64_t prompt_tokens, std::uint64_t completion_tokens) {
        std::lock_guard<std::mutex> lock(mutex_);
        prompt_tokens_ += prompt_tokens;
        completion_tokens_ += completion_tokens;
        ++calls_;
    }

    std::uint64_t prompt_tokens() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return prompt_tokens_;
    }
    std::uint64_t completion_tokens() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return completion_tokens_;
    }
    std::uint64_t total_tokens() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return prompt_tokens_ + completion_tokens_;
    }
    std::uint64_t calls() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return calls_;
    }

private:
    mutable std::mutex mutex_;
    std::uint64_t prompt_tokens_ = 0;
    std::uint64_t completion_tokens_ = 0;
    std::uint64_t calls_ = 0;
};

namespace detail {

inline const std::string& last_user_content(const std::vector<ChatMessage>& messages) {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == ChatMessage::Role::user) return it->content;
    }
    throw InvalidInputError("no user message present");
}

// Parses "Name: utterance"; returns nullopt when the line has no speaker tag.
inline std::optional<std::pair<std::string, std::string>> split_turn(const std::string& line) {
    std::size_t colon = line.find(':');
    if (colon == std::string::npos || colon == 0) return std::nullopt;
    std::string speaker = text::trim(line.substr(0, colon));
    if (speaker.empty() || speaker.find('\n') != std::string::npos) return std::nullopt;
    return std::make_pair(speaker, text::trim(line.substr(colon + 1)));
}

inline std::string stub_extract(const std::vector<ChatMessage>& messages) {
    const std::string& content = last_user_content(messages);
    std::vector<std::string> lines = text::split_lines(content);

    std::string fallback_speaker = "Speaker";
    std::size_t dialogue_start = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string trimmed = text::trim(lines[i]);
        if (trimmed.rfind("Speakers:", 0) == 0) {
            std::string names = text::trim(trimmed.substr(9));
            std::size_t sep = names.find_first_of(",&");
            if (sep == std::string::npos) sep = names.find(" and ");
            std::string first = text::trim(sep == std::string::npos ? names : names.substr(0, sep));
            if (!first.empty()) fallback_speaker = first;
        }
        if (trimmed == "Dialogue:") {
            dialogue_start = i + 1;
            break;
        }
    }

    nlohmann::json facts = nlohmann::json::array();
    for (std::size_t i = dialogue_start; i < lines.size(); ++i) {
        std::string line = text::trim(lines[i]);
        if (line.empty()) continue;
        std::string speaker;
        std::string turn_text;
        if (auto turn = split_turn(line)) {
            speaker = turn->first;
            turn_text = turn->second;
        } else {
            speaker = fallback_speaker;
            turn_text = line;
        }
        if (turn_text.size() > 200) turn_text.resize(200);
        facts.push_back(speaker + " said: " + turn_text);
    }
    return facts.dump();
}

inline std::string stub_integrate(const std::vector<ChatMessage>& messages) {
    const std::string& content = last_user_content(messages);
    std::vector<std::string> lines = text::split_lines(content);
    std::vector<std::string> topics;
    bool in_topics = false;
    for (const std::string& raw : lines) {
        std::string line = text::trim(raw);
        if (line == "Focus Topics:") {
            in_topics = true;
            continue;
        }
        if (line == "Source Contexts:") break;
        if (in_topics && line.rfind("- ", 0) == 0) topics.push_back(line.substr(2));
    }
    nlohmann::json narratives = nlohmann::json::array();
    narratives.push_back("Event linking " + std::to_string(topics.size()) +
                         " contexts: " + text::join(topics, "; "));
    return narratives.dump();
}

inline std::string stub_answer(const std::vector<ChatMessage>& messages) {
    const std::string& content = last_user_content(messages);
    std::size_t q_pos = content.rfind("\nQuestion: ");
    std::string block = q_pos == std::string::npos ? content : content.substr(0, q_pos);
    std::string question =
        q_pos == std::string::npos ? std::string() : content.substr(q_pos + 11);

    std::vector<std::string> question_tokens = text::normalize_tokens(question);

    // split into sentences on ., !, ? and newlines
    std::vector<std::string> sentences;
    std::string current;
    for (char c : block) {
        if (c == '.' || c == '!' || c == '?' || c == '\n') {
            std::string s = text::trim(current);
            if (!s.empty()) sentences.push_back(std::move(s));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    std::string tail = text::trim(current);
    if (!tail.empty()) sentences.push_back(std::move(tail));

    std::size_t best = 0;
    std::size_t best_overlap = 0;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        std::vector<std::string> sentence_tokens = text::normalize_tokens(sentences[i]);
        std::size_t overlap = 0;
        for (const std::string& qt : question_tokens) {
            if (std::find(sentence_tokens.begin(), sentence_tokens.end(), qt) !=
                sentence_tokens.end()) {
                ++overlap;
            }
        }
        if (overlap > best_overlap) {
            best_overlap = overlap;
            best = i;
        }
    }
    if (best_overlap == 0) return "No relevant memory found.";
    return sentences[best];
}

inline std::string stub_judge(const std::vector<ChatMessage>& messages) {
    const std::string& content = last_user_content(messages);
    // The template text contains an example "Gold answer:" line; the filled
    // slots are the last occurrences.
    std::size_t gold_pos = content.rfind("Gold answer:");
    std::size_t gen_pos = content.rfind("Generated answer:");
    if (gold_pos == std::string::npos || gen_pos == std::string::npos || gen_pos <= gold_pos) {
        return R"({"label": "WRONG"})";
    }
    std::string gold = text::trim(content.substr(gold_pos + 12, gen_pos - (gold_pos + 12)));
    std::string generated = content.substr(gen_pos + 17);
    std::size_t cut = generated.find("\nFirst, provide");
    if (cut != std::string::npos) generated = generated.substr(0, cut);
    generated = text::trim(generated);

    std::string gold_norm = text::normalize_answer(gold);
    std::string gen_norm = text::normalize_answer(generated);
    bool correct = !gold_norm.empty() && gen_norm.find(gold_norm) != std::string::npos;
    return correct ? R"({"label": "CORRECT"})" : R"({"label": "WRONG"})";
}

inline std::string complete_remote(const LmEndpointConfig& endpoint,
                                   const std::vector<ChatMessage>& messages, UsageMeter* usage) {
    endpoint.validate();
    nlohmann::json wire_messages = nlohmann::json::array();
    for (const ChatMessage& m : messages) {
        wire_messages.push_back(
            {{"role", m.role == ChatMessage::Role::system ? "system" : "user"},
             {"content", m.content}});
    }
    nlohmann::json body = {{"model", endpoint.model_name},
                           {"messages", wire_messages},
                           {"temperature", endpoint.temperature}};
    nlohmann::json response =
        post_json_with_retry(endpoint.base_url, "/chat/completions",
                             read_api_key(endpoint.api_key_env_var), body, endpoint.timeout,
                             endpoint.max_retries);
    if (!response.contains("choices") || !response["choices"].is_array() ||
        response["choices"].empty()) {
        throw TransportError("completion response has no choices");
    }
    std::string content;
    try {
        content = response["choices"][0].at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
        throw TransportError(std::string("malformed completion response: ") + ex.what());
    }
    if (usage) {
        std::uint64_t prompt = 0, completion = 0;
        if (response.contains("usage") && response["usage"].is_object()) {
            prompt = response["usage"].value("prompt_tokens", std::uint64_t{0});
            completion = response["usage"].value("completion_tokens", std::uint64_t{0});
        }
        usage->add(prompt, completion);
    }
    if (text::trim(content).empty()) throw EmptyCompletionError("model returned empty content");
    return content;
}

}  // namespace detail

/// Runs one chat completion. Remote backends return the first choice's text;
/// stub backends are pure functions of the messages. Every call is counted
/// into `usage` when provided (stubs report zero tokens).
inline std::string complete(const LmBackend& backend, const std::vector<ChatMessage>& messages,
                            UsageMeter* usage = nullptr) {
    if (messages.empty()) throw InvalidInputError("complete: messages must be nonempty");
    for (const ChatMessage& m : messages) {
        if (m.content.empty()) throw InvalidInputError("complete: message content must be nonempty");
    }
    switch (backend.kind) {
        case LmBackend::Kind::remote:
            return detail::complete_remote(backend.endpoint, messages, usage);
        case LmBackend::Kind::stub_extractor: {
            std::string out = detail::stub_extract(messages);
            if (usage) usage->add(0, 0);
            return out;
        }
        case LmBackend::Kind::stub_integrator: {
            std::string out = detail::stub_integrate(messages);
            if (usage) usage->add(0, 0);
            return out;
        }
        case LmBackend::Kind::stub_answerer: {
            std::string out = detail::stub_answer(messages);
            if (usage) usage->add(0, 0);
            return out;
        }
        case LmBackend::Kind::stub_judge: {
            std::string out = detail::stub_judge(messages);
            if (usage) usage->add(0, 0);
            return out;
        }
    }
    throw InvalidInputError("complete: unknown backend kind");
}

/// Extracts the first well-formed top-level JSON array of strings from raw
/// model output, tolerating prose and code fences around it. Empty and
/// whitespace-only elements are dropped.
inline std::vector<std::string> parse_json_string_list(const std::string& raw) {
    std::size_t search_from = 0;
    while (true) {
        std::size_t open = raw.find('[', search_from);
        if (open == std::string::npos) break;

        // match the bracket, skipping string literals
        std::size_t depth = 0;
        bool in_string = false;
        bool escaped = false;
        std::size_t close = std::string::npos;
        for (std::size_t i = open; i < raw.size(); ++i) {
            char c = raw[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '[') {
                ++depth;
            } else if (c == ']') {
                if (--depth == 0) {
                    close = i;
                    break;
                }
            }
        }
        if (close == std::string::npos) {
            search_from = open + 1;
            continue;
        }

        nlohmann::json parsed =
            nlohmann::json::parse(raw.substr(open, close - open + 1), nullptr, false);
        if (parsed.is_array() &&
            std::all_of(parsed.begin(), parsed.end(),
                        [](const nlohmann::json& el) { return el.is_string(); })) {
            std::vector<std::string> out;
            for (const auto& el : parsed) {
                std::string s = text::trim(el.get<std::string>());
                if (!s.empty()) out.push_back(std::move(s));
            }
            return out;
        }
        search_from = open + 1;
    }
    throw ExtractionParseError("no JSON string array found in model output");
}

enum class JudgeLabel { correct, wrong };

/// Reads a verdict out of raw judge output: the "label" field of the first
/// JSON object when present, otherwise a whole-word scan for exactly one of
/// CORRECT / WRONG.
inline JudgeLabel parse_judge_label(const std::string& raw) {
    std::size_t open = raw.find('{');
    if (open != std::string::npos) {
        std::size_t depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = open; i < raw.size(); ++i) {
            char c = raw[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    nlohmann::json parsed =
                        nlohmann::json::parse(raw.substr(open, i - open + 1), nullptr, false);
                    if (parsed.is_object() && parsed.contains("label") &&
                        parsed["label"].is_string()) {
                        std::string label = text::trim(parsed["label"].get<std::string>());
                        std::transform(label.begin(), label.end(), label.begin(),
                                       [](unsigned char ch) {
                                           return static_cast<char>(std::toupper(ch));
                                       });
                        if (label == "CORRECT") return JudgeLabel::correct;
                        if (label == "WRONG") return JudgeLabel::wrong;
                    }
                    break;
                }
            }
        }
    }

    // whole-word scan; INCORRECT must not count as CORRECT
    bool has_correct = false;
    bool has_wrong = false;
    std::string word;
    auto flush = [&] {
        if (word == "CORRECT") has_correct = true;
        if (word == "WRONG") has_wrong = true;
        word.clear();
    };
    for (char c : raw) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            word.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        } else {
            flush();
        }
    }
    flush();
    if (has_correct == has_wrong) {
        throw AmbiguousVerdictError(has_correct ? "output contains both CORRECT and WRONG"
                                                : "output contains neither CORRECT nor WRONG");
    }
    return has_correct ? JudgeLabel::correct : JudgeLabel::wrong;
}

}  // namespace memanchor
