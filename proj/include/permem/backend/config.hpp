#pragma once

#include <cstdlib>
#include <memory>
#include <string>

#include "permem/backend/backend.hpp"
#include "permem/backend/mock_backend.hpp"
#include "permem/json_util.hpp"

namespace permem {

enum class BackendKind { mock, http };

// Backend configuration file:
//   {"kind": "mock"|"http", "endpoint": "...", "timeout_seconds": 60,
//    "embedding_dim": 64, "api_key_env": "PERMEM_API_KEY",
//    "models": {"generation": ..., "judge": ..., ...}, "rules": [...]}
// PERMEM_ENDPOINT overrides the endpoint; the key is read from the variable
// named by api_key_env.
struct BackendConfig {
    BackendKind kind = BackendKind::mock;
    std::string endpoint;
    ModelRoles models;
    double timeout_seconds = 60.0;
    std::size_t embedding_dim = ScriptedMock::kDefaultDimension;
    std::string api_key_env = "PERMEM_API_KEY";
    json raw = json::object();
};

inline BackendConfig backend_config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("backend config must be a JSON object");
    BackendConfig cfg;
    cfg.raw = j;
    const std::string kind = j.value("kind", "mock");
    if (kind == "mock") cfg.kind = BackendKind::mock;
    else if (kind == "http") cfg.kind = BackendKind::http;
    else throw ConfigError("unknown backend kind '" + kind + "'");
    try {
        cfg.endpoint = j.value("endpoint", "");
        cfg.timeout_seconds = j.value("timeout_seconds", 60.0);
        cfg.embedding_dim = j.value("embedding_dim", cfg.kind == BackendKind::mock ? ScriptedMock::kDefaultDimension : 0);
        cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
        if (auto m = j.find("models"); m != j.end()) {
            cfg.models.generation = m->value("generation", cfg.models.generation);
            cfg.models.simulator = m->value("simulator", cfg.models.simulator);
            cfg.models.memory = m->value("memory", cfg.models.memory);
            cfg.models.gating = m->value("gating", cfg.models.gating);
            cfg.models.judge = m->value("judge", cfg.models.judge);
            cfg.models.embedding = m->value("embedding", cfg.models.embedding);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("backend config: ") + e.what());
    }
    if (const char* ep = std::getenv("PERMEM_ENDPOINT"); ep && *ep) cfg.endpoint = ep;
    if (cfg.timeout_seconds <= 0) throw ConfigError("backend timeout_seconds must be positive");
    if (cfg.kind == BackendKind::http && cfg.endpoint.empty()) throw ConfigError("http backend needs an endpoint");
    return cfg;
}

inline BackendConfig load_backend_config(const std::string& path) {
    try {
        return backend_config_from_json(read_json_file(path));
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace permem
