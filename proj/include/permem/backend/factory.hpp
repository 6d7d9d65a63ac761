#pragma once

#include <cstdlib>
#include <memory>

#include "permem/backend/config.hpp"
#include "permem/backend/http_backend.hpp"
#include "permem/backend/mock_backend.hpp"

namespace permem {

inline std::unique_ptr<Backend> make_backend(const BackendConfig& cfg) {
    if (cfg.kind == BackendKind::mock) {
        json mock_cfg = cfg.raw;
        mock_cfg["embedding_dim"] = cfg.embedding_dim;
        return ScriptedMock::from_json(mock_cfg);
    }
    std::string key;
    if (const char* k = std::getenv(cfg.api_key_env.c_str()); k) key = k;
    return std::make_unique<HttpBackend>(cfg.endpoint, cfg.models, cfg.timeout_seconds, cfg.embedding_dim, key);
}

}  // namespace permem
