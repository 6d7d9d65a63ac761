#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "permem/error.hpp"

namespace permem {

struct Message {
    std::string role;  // "user" | "assistant"
    std::string text;

    bool operator==(const Message&) const = default;
};

struct GenerationRequest {
    std::string system_prompt;
    std::vector<Message> messages;
    std::string model_id;
    double temperature = 0.0;

    bool operator==(const GenerationRequest&) const = default;

    // Single-turn convenience.
    static GenerationRequest single(std::string system_prompt, std::string user_text, std::string model_id = {}) {
        GenerationRequest r;
        r.system_prompt = std::move(system_prompt);
        r.messages.push_back({"user", std::move(user_text)});
        r.model_id = std::move(model_id);
        return r;
    }

    std::string flattened() const {
        std::string out = system_prompt;
        for (const auto& m : messages) {
            out += '\n';
            out += m.text;
        }
        return out;
    }
};

struct EmbeddingVector {
    std::vector<double> values;

    bool operator==(const EmbeddingVector&) const = default;

    std::size_t dimension() const { return values.size(); }

    double norm() const {
        double s = 0.0;
        for (double v : values) s += v * v;
        return std::sqrt(s);
    }
};

// Cosine similarity; callers exclude zero-norm vectors beforehand.
inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) throw BackendError("embedding dimension mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (na * nb);
}

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual EmbeddingVector embed(std::string_view text) const = 0;
};

class Generator {
public:
    virtual ~Generator() = default;
    virtual std::string generate(const GenerationRequest& request) = 0;
};

// A complete backend serves both text generation and embeddings.
class Backend : public Generator, public Embedder {};

// Model identifiers per pipeline role. Values are opaque configuration.
struct ModelRoles {
    std::string generation = "gpt-5.4";
    std::string simulator = "gpt-5.4";
    std::string memory = "gpt-5-mini";
    std::string gating = "gpt-5-mini";
    std::string judge = "gpt-5-nano";
    std::string embedding = "all-MiniLM-L6-v2";
};

}  // namespace permem
