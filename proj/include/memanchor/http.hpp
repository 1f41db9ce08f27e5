#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "memanchor/errors.hpp"

namespace memanchor {

struct HttpEndpoint {
    std::string origin;       // scheme://host[:port]
    std::string path_prefix;  // e.g. "/v1", may be empty
};

inline HttpEndpoint split_base_url(const std::string& base_url) {
    std::size_t scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw InvalidInputError("base_url must include a scheme: '" + base_url + "'");
    }
    std::size_t path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {base_url, ""};
    }
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

inline std::string read_api_key(const std::string& env_var) {
    if (env_var.empty()) return "";
    const char* value = std::getenv(env_var.c_str());
    return value ? std::string(value) : std::string();
}

// POST a JSON body and parse the JSON response. Any transport failure or
// non-2xx status is retried until max_retries is exhausted, then surfaced
// as TransportError carrying the attempt count.
inline nlohmann::json post_json_with_retry(const std::string& base_url, const std::string& path,
                                           const std::string& api_key, const nlohmann::json& body,
                                           std::chrono::milliseconds timeout, int max_retries) {
    HttpEndpoint endpoint = split_base_url(base_url);
    const int attempts_allowed = max_retries + 1;
    std::string last_failure = "no attempt made";

    for (int attempt = 1; attempt <= attempts_allowed; ++attempt) {
        httplib::Client client(endpoint.origin);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
        auto rem = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
        client.set_connection_timeout(static_cast<time_t>(secs.count()), rem.count());
        client.set_read_timeout(static_cast<time_t>(secs.count()), rem.count());
        client.set_write_timeout(static_cast<time_t>(secs.count()), rem.count());
        httplib::Headers headers;
        if (!api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + api_key);
        }

        auto result = client.Post(endpoint.path_prefix + path, headers, body.dump(),
                                  "application/json");
        if (!result) {
            last_failure = "transport failure: " + httplib::to_string(result.error());
        } else if (result->status < 200 || result->status >= 300) {
            last_failure = "HTTP " + std::to_string(result->status);
        } else {
            try {
                return nlohmann::json::parse(result->body);
            } catch (const nlohmann::json::exception& ex) {
                last_failure = std::string("unparseable response body: ") + ex.what();
            }
        }
        if (attempt < attempts_allowed) {
            std::this_thread::sleep_for(std::chrono::milliseconds(25) * attempt);
        }
    }
    throw TransportError("POST " + base_url + path + " failed after " +
                         std::to_string(attempts_allowed) + " attempts (" + last_failure + ")");
}

}  // namespace memanchor
