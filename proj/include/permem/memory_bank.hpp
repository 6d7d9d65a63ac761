#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "permem/backend/backend.hpp"
#include "permem/error.hpp"
#include "permem/json_util.hpp"
#include "permem/text.hpp"

namespace permem {

using EntryId = std::int64_t;

struct MemoryEntry {
    EntryId entry_id = 0;
    std::string text;
    EmbeddingVector embedding;
    int created_session = 1;
    std::optional<std::string> source_domain;

    bool operator==(const MemoryEntry&) const = default;
};

struct ScoredEntry {
    MemoryEntry entry;
    double similarity = 0.0;
};

// Exhaustive cosine ranking: descending similarity, ties by ascending
// entry_id. Zero-norm entries never qualify; a zero-norm query yields nothing.
inline std::vector<ScoredEntry> rank_by_similarity(std::span<const MemoryEntry> entries, const EmbeddingVector& query,
                                                   std::size_t k) {
    if (k == 0) throw std::invalid_argument("retrieve_top_k: k must be >= 1");
    std::vector<ScoredEntry> scored;
    if (query.norm() == 0.0) return scored;
    scored.reserve(entries.size());
    for (const auto& e : entries) {
        if (e.embedding.norm() == 0.0) continue;
        scored.push_back({e, cosine_similarity(e.embedding, query)});
    }
    auto better = [](const ScoredEntry& a, const ScoredEntry& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.entry.entry_id < b.entry.entry_id;
    };
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), better);
    scored.resize(n);
    return scored;
}

// Plain-data bank state, used for checkpoint snapshots.
struct BankSnapshot {
    std::size_t budget = 0;
    int current_session = 0;
    EntryId next_entry_id = 1;
    std::vector<MemoryEntry> entries;  // ascending entry_id

    bool operator==(const BankSnapshot&) const = default;
};

inline json to_json(const MemoryEntry& e) {
    json j = {{"entry_id", e.entry_id},
              {"text", e.text},
              {"created_session", e.created_session},
              {"embedding", e.embedding.values}};
    if (e.source_domain) j["source_domain"] = *e.source_domain;
    return j;
}

inline MemoryEntry memory_entry_from_json(const json& j) {
    MemoryEntry e;
    e.entry_id = require<EntryId>(j, "entry_id", "entry");
    e.text = require<std::string>(j, "text", "entry");
    e.created_session = require<int>(j, "created_session", "entry");
    try {
        e.embedding.values = j.at("embedding").get<std::vector<double>>();
    } catch (const json::exception&) {
        throw ValidationError("entry " + std::to_string(e.entry_id) + ": embedding must be a number array");
    }
    e.source_domain = optional_field<std::string>(j, "source_domain", "entry");
    return e;
}

inline json to_json(const BankSnapshot& s) {
    json entries = json::array();
    for (const auto& e : s.entries) entries.push_back(to_json(e));
    return {{"budget", s.budget},
            {"current_session", s.current_session},
            {"next_entry_id", s.next_entry_id},
            {"entries", entries}};
}

inline BankSnapshot bank_snapshot_from_json(const json& j) {
    BankSnapshot s;
    s.budget = require<std::size_t>(j, "budget", "snapshot");
    s.current_session = require<int>(j, "current_session", "snapshot");
    s.next_entry_id = require<EntryId>(j, "next_entry_id", "snapshot");
    for (const auto& e : require_array(j, "entries", "snapshot")) s.entries.push_back(memory_entry_from_json(e));
    return s;
}

// Budget-constrained per-user store. Inserts never evict; the budget is
// enforced at session boundaries by end_session, oldest created_session
// first (ties: lowest entry_id).
class MemoryBank {
public:
    static constexpr std::size_t kDefaultBudget = 200;

    explicit MemoryBank(const Embedder& embedder, std::size_t budget = kDefaultBudget)
        : embedder_(&embedder), budget_(budget) {
        if (budget_ == 0) throw ConfigError("memory budget must be >= 1");
    }

    MemoryBank(const Embedder& embedder, const BankSnapshot& snapshot)
        : embedder_(&embedder), budget_(snapshot.budget), current_session_(snapshot.current_session),
          next_id_(snapshot.next_entry_id) {
        if (budget_ == 0) throw ConfigError("memory budget must be >= 1");
        for (const auto& e : snapshot.entries) {
            if (e.entry_id >= next_id_) throw ValidationError("snapshot entry_id not below next_entry_id");
            if (!entries_.emplace(e.entry_id, e).second) throw ValidationError("snapshot has duplicate entry_id");
        }
    }

    EntryId insert(std::string_view text, int session, std::optional<std::string> source_domain = std::nullopt) {
        if (text::trim(text).empty()) throw ValidationError("insert: empty memory text");
        if (session < 1) throw ValidationError("insert: created_session must be >= 1");
        MemoryEntry e;
        e.entry_id = next_id_++;
        e.text = std::string(text);
        e.embedding = embedder_->embed(text);
        e.created_session = session;
        e.source_domain = std::move(source_domain);
        const EntryId id = e.entry_id;
        entries_.emplace(id, std::move(e));
        return id;
    }

    // Re-embeds; entry_id and created_session are preserved.
    void update(EntryId id, std::string_view new_text) {
        auto it = entries_.find(id);
        if (it == entries_.end()) throw ValidationError("update: unknown entry_id " + std::to_string(id));
        if (text::trim(new_text).empty()) throw ValidationError("update: empty memory text");
        it->second.embedding = embedder_->embed(new_text);
        it->second.text = std::string(new_text);
    }

    void remove(EntryId id) {
        if (entries_.erase(id) == 0) throw ValidationError("delete: unknown entry_id " + std::to_string(id));
    }

    bool contains(EntryId id) const { return entries_.contains(id); }

    const MemoryEntry* find(EntryId id) const {
        auto it = entries_.find(id);
        return it == entries_.end() ? nullptr : &it->second;
    }

    std::vector<ScoredEntry> retrieve_top_k(std::string_view query, std::size_t k) const {
        if (k == 0) throw std::invalid_argument("retrieve_top_k: k must be >= 1");
        if (entries_.empty()) return {};
        const auto all = entry_list();
        return rank_by_similarity(all, embedder_->embed(query), k);
    }

    // Closes `session`: evicts oldest-first until within budget and returns
    // the evicted ids in eviction order.
    std::vector<EntryId> end_session(int session) {
        if (session < current_session_)
            throw ValidationError("end_session: session index regression (" + std::to_string(session) + " < " +
                                  std::to_string(current_session_) + ")");
        current_session_ = session;
        std::vector<EntryId> evicted;
        if (entries_.size() <= budget_) return evicted;
        std::vector<std::pair<int, EntryId>> order;
        order.reserve(entries_.size());
        for (const auto& [id, e] : entries_) order.emplace_back(e.created_session, id);
        std::sort(order.begin(), order.end());
        const std::size_t excess = entries_.size() - budget_;
        for (std::size_t i = 0; i < excess; ++i) {
            entries_.erase(order[i].second);
            evicted.push_back(order[i].second);
        }
        return evicted;
    }

    BankSnapshot snapshot() const { return {budget_, current_session_, next_id_, entry_list()}; }

    std::vector<MemoryEntry> entry_list() const {
        std::vector<MemoryEntry> out;
        out.reserve(entries_.size());
        for (const auto& [id, e] : entries_) out.push_back(e);
        return out;
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::size_t budget() const { return budget_; }
    int current_session() const { return current_session_; }

private:
    const Embedder* embedder_;
    std::size_t budget_;
    int current_session_ = 0;
    EntryId next_id_ = 1;
    std::map<EntryId, MemoryEntry> entries_;
};

}  // namespace permem
