#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "permem/backend/backend.hpp"
#include "permem/memory_bank.hpp"
#include "permem/model.hpp"
#include "permem/prompts.hpp"
#include "permem/text.hpp"

namespace permem {

enum class JudgeKind { substring_oracle, backend };

inline std::optional<JudgeKind> parse_judge_kind(std::string_view s) {
    if (s == "substring" || s == "substring_oracle") return JudgeKind::substring_oracle;
    if (s == "backend") return JudgeKind::backend;
    return std::nullopt;
}

struct RetentionConfig {
    std::size_t checkpoints = 20;  // K
    std::size_t k_retrieve = 10;
    JudgeKind judge = JudgeKind::substring_oracle;

    void validate() const {
        if (checkpoints < 2) throw ConfigError("checkpoint count K must be >= 2");
        if (k_retrieve < 1) throw ConfigError("retrieval depth must be >= 1");
    }
};

// Evenly spaced checkpoints over the session window [t_start, t_target]:
// s_i = S[round(i(|S|-1)/(K-1))], i = 0..K-1. Both ends are always kept.
// Windows no longer than K are enumerated in full.
inline std::vector<int> sample_checkpoints(int t_start, int t_target, std::size_t K) {
    if (t_start < 1 || t_target < t_start)
        throw ValidationError("invalid retention window [" + std::to_string(t_start) + ", " +
                              std::to_string(t_target) + "]");
    if (K < 2) throw ConfigError("checkpoint count K must be >= 2");
    const auto n = static_cast<std::size_t>(t_target - t_start + 1);
    std::vector<int> out;
    if (n <= K) {
        for (int t = t_start; t <= t_target; ++t) out.push_back(t);
        return out;
    }
    for (std::size_t i = 0; i < K; ++i) {
        const double pos = static_cast<double>(i) * static_cast<double>(n - 1) / static_cast<double>(K - 1);
        const int t = t_start + static_cast<int>(std::lround(pos));
        if (out.empty() || out.back() != t) out.push_back(t);
    }
    return out;
}

struct RetentionWindow {
    std::string reference_id;
    int t_start = 1;
    int t_target = 1;

    std::size_t length() const { return static_cast<std::size_t>(t_target - t_start + 1); }
};

struct ReferenceRetention {
    std::string reference_id;
    std::size_t window_length = 0;        // |S(r)|
    std::vector<int> checkpoints;         // sampled
    std::size_t evaluated = 0;            // K_r
    std::size_t present = 0;
    std::size_t unevaluated = 0;
    double weighted = 0.0;                // (|S|/K_r) * present
};

struct RetentionResult {
    double rr = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
    bool defined = false;  // false when no reference contributes
    std::vector<ReferenceRetention> references;
};

// Presence of reference r (by index) in bank state M_t. nullopt marks a
// checkpoint whose judgement failed; it is dropped and K_r shrinks.
using PresenceFn = std::function<std::optional<bool>(std::size_t ref_index, int t)>;

inline RetentionResult retention_rate(std::span<const RetentionWindow> windows, std::size_t K,
                                      const PresenceFn& presence) {
    RetentionResult res;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const auto& w = windows[i];
        ReferenceRetention rr;
        rr.reference_id = w.reference_id;
        rr.window_length = w.length();
        rr.checkpoints = sample_checkpoints(w.t_start, w.t_target, K);
        for (int t : rr.checkpoints) {
            const auto p = presence(i, t);
            if (!p) {
                ++rr.unevaluated;
                continue;
            }
            ++rr.evaluated;
            if (*p) ++rr.present;
        }
        if (rr.evaluated > 0) {
            rr.weighted = static_cast<double>(rr.window_length) / static_cast<double>(rr.evaluated) *
                          static_cast<double>(rr.present);
            res.numerator += rr.weighted;
            res.denominator += static_cast<double>(rr.window_length);
        }
        res.references.push_back(std::move(rr));
    }
    if (res.denominator > 0) {
        res.defined = true;
        res.rr = std::clamp(res.numerator / res.denominator, 0.0, 1.0);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Indicator: top-k retrieval with the fact as query, then a judge.

class PresenceJudge {
public:
    virtual ~PresenceJudge() = default;
    // Throws TransportError when the verdict could not be obtained.
    virtual bool judge(std::string_view fact, std::span<const ScoredEntry> retrieved) = 0;
};

// Normalized containment of the fact in any retrieved entry.
class SubstringJudge final : public PresenceJudge {
public:
    bool judge(std::string_view fact, std::span<const ScoredEntry> retrieved) override {
        return std::any_of(retrieved.begin(), retrieved.end(),
                           [&](const ScoredEntry& e) { return text::contains_normalized(e.entry.text, fact); });
    }
};

class BackendJudge final : public PresenceJudge {
public:
    BackendJudge(Generator& backend, const PromptSet& prompts, std::string model_id)
        : backend_(&backend), prompts_(&prompts), model_id_(std::move(model_id)) {}

    bool judge(std::string_view fact, std::span<const ScoredEntry> retrieved) override {
        if (retrieved.empty()) return false;
        std::string entries;
        for (std::size_t i = 0; i < retrieved.size(); ++i)
            entries += std::to_string(i + 1) + ". " + retrieved[i].entry.text + "\n";
        const auto prompt =
            prompts_->render("presence_judge", {{"fact", std::string(fact)}, {"retrieved_entries", entries}});
        for (int attempt = 0; attempt < 2; ++attempt) {
            const auto reply = text::to_lower(text::trim(backend_->generate(GenerationRequest::single("", prompt, model_id_))));
            if (text::starts_with(reply, "yes")) return true;
            if (text::starts_with(reply, "no")) return false;
        }
        throw TransportError("judge gave no YES/NO verdict after retry");
    }

private:
    Generator* backend_;
    const PromptSet* prompts_;
    std::string model_id_;
};

inline std::vector<ScoredEntry> retrieve_from_snapshot(const BankSnapshot& snapshot, const EmbeddingVector& query,
                                                       std::size_t k) {
    if (snapshot.entries.empty()) return {};
    return rank_by_similarity(snapshot.entries, query, k);
}

inline bool indicator(std::string_view fact, const EmbeddingVector& fact_embedding, const BankSnapshot& snapshot,
                      PresenceJudge& judge, std::size_t k_retrieve) {
    const auto top = retrieve_from_snapshot(snapshot, fact_embedding, k_retrieve);
    if (top.empty()) return false;
    return judge.judge(fact, top);
}

struct UserRetention {
    RetentionResult result;
    std::vector<std::string> errors;  // judge failures, one per unevaluated checkpoint
};

// Windows of all references with a computed horizon.
inline std::vector<RetentionWindow> retention_windows(std::span<const ReferenceMemory> refs) {
    std::vector<RetentionWindow> out;
    for (const auto& r : refs) out.push_back({r.id, r.t_start, r.target()});
    return out;
}

// Every session index at which some reference needs a bank snapshot.
inline std::set<int> required_checkpoints(std::span<const ReferenceMemory> refs, std::size_t K) {
    std::set<int> out;
    for (const auto& r : refs)
        for (int t : sample_checkpoints(r.t_start, r.target(), K)) out.insert(t);
    return out;
}

inline UserRetention evaluate_user_retention(std::span<const ReferenceMemory> refs,
                                             const std::map<int, BankSnapshot>& snapshots, const Embedder& embedder,
                                             PresenceJudge& judge, const RetentionConfig& cfg) {
    cfg.validate();
    const auto windows = retention_windows(refs);
    std::vector<std::optional<EmbeddingVector>> fact_vectors(refs.size());
    UserRetention out;
    auto presence = [&](std::size_t i, int t) -> std::optional<bool> {
        auto it = snapshots.find(t);
        if (it == snapshots.end())
            throw ValidationError("missing bank snapshot at session " + std::to_string(t) + " (reference " +
                                  refs[i].id + ")");
        if (it->second.entries.empty()) return false;
        if (!fact_vectors[i]) fact_vectors[i] = embedder.embed(refs[i].fact);
        try {
            return indicator(refs[i].fact, *fact_vectors[i], it->second, judge, cfg.k_retrieve);
        } catch (const TransportError& e) {
            out.errors.push_back("reference " + refs[i].id + " at session " + std::to_string(t) + ": " + e.what());
            return std::nullopt;
        }
    };
    out.result = retention_rate(windows, cfg.checkpoints, presence);
    return out;
}

inline json to_json(const RetentionResult& r) {
    json refs = json::array();
    for (const auto& x : r.references)
        refs.push_back({{"reference_id", x.reference_id},
                        {"window_length", x.window_length},
                        {"checkpoints", x.checkpoints},
                        {"evaluated", x.evaluated},
                        {"present", x.present},
                        {"unevaluated", x.unevaluated}});
    json j = {{"numerator", r.numerator}, {"denominator", r.denominator}, {"references", refs}};
    j["rr"] = r.defined ? json(r.rr) : json("undefined");
    return j;
}

}  // namespace permem
