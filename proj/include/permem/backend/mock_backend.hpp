#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "permem/backend/backend.hpp"
#include "permem/json_util.hpp"
#include "permem/rng.hpp"
#include "permem/text.hpp"

namespace permem {

// One scripted generation rule. A rule matches when `match` occurs in the
// scoped request text, or when `pattern` (ECMAScript regex) finds a match
// there. Successive hits walk through `responses`; the last one repeats.
// Regex rules treat responses as format strings ($1, $2, ... expand to
// capture groups).
struct MockRule {
    enum class Scope { all, system, last };
    enum class Failure { none, transport, timeout };

    std::string match;
    std::string pattern;
    Scope scope = Scope::all;
    std::vector<std::string> responses;
    Failure failure = Failure::none;
};

class ScriptedMock final : public Backend {
public:
    static constexpr std::size_t kDefaultDimension = 64;

    explicit ScriptedMock(std::vector<MockRule> rules = {}, std::size_t dimension = kDefaultDimension)
        : dimension_(dimension) {
        if (dimension_ == 0) throw ConfigError("mock embedding dimension must be positive");
        for (auto& r : rules) add_rule(std::move(r));
    }

    static std::unique_ptr<ScriptedMock> from_json(const json& cfg) {
        const std::size_t dim = field_or<std::size_t>(cfg, "embedding_dim", "backend", kDefaultDimension);
        std::vector<MockRule> rules;
        if (auto it = cfg.find("rules"); it != cfg.end()) {
            if (!it->is_array()) throw ConfigError("backend.rules must be an array");
            for (const auto& r : *it) {
                if (!r.is_object()) throw ConfigError("backend.rules entries must be objects");
                MockRule rule;
                rule.match = r.value("match", "");
                rule.pattern = r.value("regex", "");
                const std::string scope = r.value("scope", "all");
                if (scope == "all") rule.scope = MockRule::Scope::all;
                else if (scope == "system") rule.scope = MockRule::Scope::system;
                else if (scope == "last") rule.scope = MockRule::Scope::last;
                else throw ConfigError("unknown mock rule scope '" + scope + "'");
                if (r.contains("response")) rule.responses.push_back(r.at("response").get<std::string>());
                if (r.contains("responses"))
                    for (const auto& s : r.at("responses")) rule.responses.push_back(s.get<std::string>());
                const std::string error = r.value("error", "");
                if (error == "transport") rule.failure = MockRule::Failure::transport;
                else if (error == "timeout") rule.failure = MockRule::Failure::timeout;
                else if (!error.empty()) throw ConfigError("unknown mock rule error kind '" + error + "'");
                rules.push_back(std::move(rule));
            }
        }
        return std::make_unique<ScriptedMock>(std::move(rules), dim);
    }

    void add_rule(MockRule rule) {
        if (rule.match.empty() && rule.pattern.empty()) throw ConfigError("mock rule needs 'match' or 'regex'");
        if (rule.responses.empty() && rule.failure == MockRule::Failure::none)
            throw ConfigError("mock rule '" + rule.match + rule.pattern + "' has no response");
        Compiled c{std::move(rule), std::nullopt, 0};
        if (!c.rule.pattern.empty()) {
            try {
                c.regex.emplace(c.rule.pattern, std::regex::ECMAScript);
            } catch (const std::regex_error& e) {
                throw ConfigError("invalid mock regex '" + c.rule.pattern + "': " + e.what());
            }
        }
        std::lock_guard lock(mutex_);
        rules_.push_back(std::move(c));
    }

    std::string generate(const GenerationRequest& request) override {
        std::lock_guard lock(mutex_);
        history_.push_back(request);
        for (auto& c : rules_) {
            const std::string scoped = scoped_text(request, c.rule.scope);
            std::smatch m;
            if (c.regex) {
                if (!std::regex_search(scoped, m, *c.regex)) continue;
            } else if (scoped.find(c.rule.match) == std::string::npos) {
                continue;
            }
            if (c.rule.failure == MockRule::Failure::transport) throw TransportError("mock: scripted transport failure");
            if (c.rule.failure == MockRule::Failure::timeout) throw TimeoutError("mock: scripted timeout");
            const std::size_t idx = std::min(c.hits, c.rule.responses.size() - 1);
            ++c.hits;
            const std::string& response = c.rule.responses[idx];
            return c.regex ? m.format(response) : response;
        }
        throw NoRuleError("mock: no rule matches request");
    }

    // Seeded pseudo-random unit vector keyed by FNV-1a-64 of the normalized
    // text: identical strings give identical vectors.
    EmbeddingVector embed(std::string_view text) const override {
        const std::string norm = text::normalize(text);
        if (norm.empty()) throw BackendError("embed: empty text");
        SeededRng rng(text::fnv1a64(norm));
        EmbeddingVector v;
        v.values.resize(dimension_);
        double sq = 0.0;
        for (auto& x : v.values) {
            x = 2.0 * rng.uniform01() - 1.0;
            sq += x * x;
        }
        const double n = std::sqrt(sq);
        for (auto& x : v.values) x /= n;
        return v;
    }

    std::size_t dimension() const { return dimension_; }

    std::vector<GenerationRequest> history() const {
        std::lock_guard lock(mutex_);
        return history_;
    }

private:
    struct Compiled {
        MockRule rule;
        std::optional<std::regex> regex;
        std::size_t hits;
    };

    static std::string scoped_text(const GenerationRequest& r, MockRule::Scope scope) {
        switch (scope) {
            case MockRule::Scope::system: return r.system_prompt;
            case MockRule::Scope::last: return r.messages.empty() ? std::string{} : r.messages.back().text;
            case MockRule::Scope::all: break;
        }
        return r.flattened();
    }

    std::size_t dimension_;
    mutable std::mutex mutex_;
    std::vector<Compiled> rules_;
    std::vector<GenerationRequest> history_;
};

}  // namespace permem
