#pragma once

#include <cstdlib>
#include <string>

#include <httplib.h>

#include "permem/backend/backend.hpp"
#include "permem/json_util.hpp"
#include "permem/text.hpp"

namespace permem {

struct HttpEndpoint {
    std::string origin;  // scheme://host[:port]
    std::string base_path;  // e.g. "/v1"
};

inline HttpEndpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: '" + url + "'");
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ConfigError("unsupported endpoint scheme '" + scheme + "'");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (scheme == "https") throw ConfigError("https endpoints need a build with OpenSSL support");
#endif
    const auto path_start = url.find('/', scheme_end + 3);
    HttpEndpoint ep;
    ep.origin = url.substr(0, path_start);
    ep.base_path = path_start == std::string::npos ? std::string{} : url.substr(path_start);
    while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
    return ep;
}

// OpenAI-compatible chat-completions and embeddings client. A fresh client is
// opened per call so concurrent requests never share a connection.
class HttpBackend final : public Backend {
public:
    HttpBackend(std::string endpoint_url, ModelRoles models, double timeout_seconds, std::size_t embedding_dim,
                std::string api_key)
        : endpoint_(split_endpoint(endpoint_url)),
          models_(std::move(models)),
          timeout_seconds_(timeout_seconds),
          embedding_dim_(embedding_dim),
          api_key_(std::move(api_key)) {
        if (timeout_seconds_ <= 0) throw ConfigError("backend timeout must be positive");
    }

    std::string generate(const GenerationRequest& request) override {
        json messages = json::array();
        if (!request.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
        for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.text}});
        const json body = {{"model", request.model_id.empty() ? models_.generation : request.model_id},
                           {"messages", messages},
                           {"temperature", request.temperature}};
        const json reply = post("/chat/completions", body);
        try {
            const json& message = reply.at("choices").at(0).at("message");
            if (auto r = message.find("refusal"); r != message.end() && r->is_string() && !r->get<std::string>().empty())
                throw BackendError("model refused: " + r->get<std::string>());
            std::string content = message.at("content").get<std::string>();
            if (content.empty()) throw BackendError("model returned empty content");
            return content;
        } catch (const json::exception& e) {
            throw BackendError(std::string("unexpected chat completion payload: ") + e.what());
        }
    }

    EmbeddingVector embed(std::string_view text) const override {
        if (text::trim(text).empty()) throw BackendError("embed: empty text");
        const json body = {{"model", models_.embedding}, {"input", std::string(text)}};
        const json reply = post("/embeddings", body);
        EmbeddingVector v;
        try {
            v.values = reply.at("data").at(0).at("embedding").get<std::vector<double>>();
        } catch (const json::exception& e) {
            throw BackendError(std::string("unexpected embedding payload: ") + e.what());
        }
        if (embedding_dim_ != 0 && v.dimension() != embedding_dim_)
            throw BackendError("embedding dimension " + std::to_string(v.dimension()) + " != configured " +
                               std::to_string(embedding_dim_));
        return v;
    }

private:
    json post(const std::string& path, const json& body) const {
        httplib::Client client(endpoint_.origin);
        const auto secs = static_cast<time_t>(timeout_seconds_);
        const auto usecs = static_cast<time_t>((timeout_seconds_ - static_cast<double>(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        auto res = client.Post(endpoint_.base_path + path, headers, body.dump(), "application/json");
        if (!res) {
            const auto err = res.error();
            const std::string what = endpoint_.origin + endpoint_.base_path + path + ": " + httplib::to_string(err);
            if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) throw TimeoutError(what);
            throw TransportError(what);
        }
        if (res->status != 200)
            throw TransportError("HTTP " + std::to_string(res->status) + " from " + endpoint_.base_path + path + ": " +
                                 res->body.substr(0, 200));
        try {
            return json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw BackendError(std::string("backend returned malformed JSON: ") + e.what());
        }
    }

    HttpEndpoint endpoint_;
    ModelRoles models_;
    double timeout_seconds_;
    std::size_t embedding_dim_;
    std::string api_key_;
};

}  // namespace permem
