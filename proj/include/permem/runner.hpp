#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "permem/evaluation/retention.hpp"
#include "permem/gating.hpp"
#include "permem/memory_bank.hpp"
#include "permem/memory_ops.hpp"
#include "permem/model.hpp"

namespace permem {

enum class ExtractorKind { marker, backend };

inline std::optional<ExtractorKind> parse_extractor_kind(std::string_view s) {
    if (s == "marker") return ExtractorKind::marker;
    if (s == "backend") return ExtractorKind::backend;
    return std::nullopt;
}

struct RunConfig {
    std::size_t budget = MemoryBank::kDefaultBudget;
    Granularity granularity = Granularity::session_level;
    ExtractorKind extractor = ExtractorKind::backend;
    std::size_t checkpoints = 20;  // K, decides which bank states are kept
    std::size_t bank_view_size = 10;
    GatingOptions gating;
    std::string memory_model;
    std::size_t jobs = 1;

    void validate() const {
        if (budget < 1) throw ConfigError("--budget must be >= 1");
        if (checkpoints < 2) throw ConfigError("--checkpoints must be >= 2");
        if (jobs < 1) throw ConfigError("--jobs must be >= 1");
    }
};

struct UserRun {
    std::string user;
    std::vector<GateDecision> decisions;
    std::vector<SessionTrace> traces;
    std::map<int, BankSnapshot> snapshots;  // only at evaluation checkpoints
};

// Sessions in timeline order: gate, memory ops (skipped when the gate says
// no), end_session; the bank is snapshotted at every precomputed checkpoint.
inline UserRun run_user(const UserRecord& user, const std::string& policy_name, Backend& backend,
                        const PromptSet& prompts, const RunConfig& cfg) {
    UserRun out;
    out.user = user.persona.id;
    const auto checkpoints = required_checkpoints(user.references, cfg.checkpoints);
    auto policy = make_policy(policy_name, user, backend, prompts, cfg.gating);
    std::unique_ptr<Extractor> extractor;
    if (cfg.extractor == ExtractorKind::marker) extractor = std::make_unique<MarkerExtractor>();
    else extractor = std::make_unique<BackendExtractor>(backend, prompts, cfg.memory_model);
    MemoryBank bank(backend, cfg.budget);
    const ApplyOptions apply{cfg.granularity, cfg.bank_view_size};
    for (const auto& session : user.timeline) {
        try {
            auto decision = policy->decide(session);
            out.traces.push_back(apply_session(bank, session, decision.memory_required, *extractor, apply));
            out.decisions.push_back(std::move(decision));
        } catch (Error& e) {
            e.add_context("user " + user.persona.id + ", session " + std::to_string(session.session_id) +
                          ", policy " + policy_name);
            throw;
        }
        if (checkpoints.contains(session.session_id)) out.snapshots.emplace(session.session_id, bank.snapshot());
    }
    return out;
}

// Runs `fn(i)` for i in [0, n) on up to `jobs` threads; the first failure is
// rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr failure;
    std::mutex m;
    auto worker = [&] {
        for (std::size_t i = next++; i < n && !stop; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(m);
                if (!failure) failure = std::current_exception();
                stop = true;
            }
        }
    };
    const std::size_t t = std::max<std::size_t>(1, std::min(jobs, n));
    if (t == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t i = 0; i < t; ++i) threads.emplace_back(worker);
        for (auto& th : threads) th.join();
    }
    if (failure) std::rethrow_exception(failure);
}

inline std::vector<UserRun> run_policy(const BenchmarkDataset& ds, const std::string& policy, Backend& backend,
                                       const PromptSet& prompts, const RunConfig& cfg) {
    cfg.validate();
    std::vector<UserRun> runs(ds.users.size());
    parallel_for(ds.users.size(), cfg.jobs,
                 [&](std::size_t i) { runs[i] = run_user(ds.users[i], policy, backend, prompts, cfg); });
    return runs;
}

// ---------------------------------------------------------------------------
// On-disk layout under a run directory:
//   <policy>/run_log.jsonl             one record per (user, session)
//   <policy>/snapshots/<user>.json     {"<session>": snapshot, ...}

inline std::string run_log_line(const std::string& user, const GateDecision& d, const SessionTrace& t) {
    return json{{"user", user}, {"decision", to_json(d)}, {"trace", to_json(t)}}.dump();
}

inline std::string snapshot_file_name(const std::string& user) { return text::slugify(user) + "-" + std::to_string(text::fnv1a64(user) & 0xffff) + ".json"; }

inline std::vector<std::string> write_policy_run(const std::filesystem::path& dir, const std::string& policy,
                                                 const std::vector<UserRun>& runs) {
    namespace fs = std::filesystem;
    const fs::path pdir = dir / policy;
    fs::create_directories(pdir / "snapshots");
    std::vector<std::string> files;
    std::string log;
    for (const auto& r : runs)
        for (std::size_t i = 0; i < r.decisions.size(); ++i) log += run_log_line(r.user, r.decisions[i], r.traces[i]) + "\n";
    write_text_file((pdir / "run_log.jsonl").string(), log);
    files.push_back(policy + "/run_log.jsonl");
    for (const auto& r : runs) {
        json snaps = json::object();
        for (const auto& [t, s] : r.snapshots) snaps[std::to_string(t)] = to_json(s);
        const std::string name = snapshot_file_name(r.user);
        write_text_file((pdir / "snapshots" / name).string(), json{{"user", r.user}, {"snapshots", snaps}}.dump() + "\n");
        files.push_back(policy + "/snapshots/" + name);
    }
    return files;
}

struct LoadedPolicyRun {
    std::map<std::string, std::map<int, bool>> decisions;           // user -> session -> gate
    std::map<std::string, std::map<int, BankSnapshot>> snapshots;   // user -> session -> bank
};

// In-process equivalent of write_policy_run followed by load_policy_run.
inline LoadedPolicyRun loaded_from_runs(const std::vector<UserRun>& runs) {
    LoadedPolicyRun out;
    for (const auto& r : runs) {
        auto& d = out.decisions[r.user];
        for (const auto& g : r.decisions) d[g.session_id] = g.memory_required;
        out.snapshots[r.user] = r.snapshots;
    }
    return out;
}

inline LoadedPolicyRun load_policy_run(const std::filesystem::path& dir, const std::string& policy,
                                       const BenchmarkDataset& ds) {
    namespace fs = std::filesystem;
    const fs::path pdir = dir / policy;
    if (!fs::is_directory(pdir)) throw ValidationError("no run output for policy '" + policy + "' in " + dir.string());
    LoadedPolicyRun out;
    const std::string log = read_file((pdir / "run_log.jsonl").string());
    std::size_t line_no = 0;
    for (auto line : text::split_lines(log)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const json j = parse_json_text(std::string(line), policy + "/run_log.jsonl line " + std::to_string(line_no));
        const auto user = require<std::string>(j, "user", "run_log");
        const json& d = j.at("decision");
        out.decisions[user][require<int>(d, "session_id", "decision")] = require<bool>(d, "memory_required", "decision");
    }
    for (const auto& u : ds.users) {
        const fs::path f = pdir / "snapshots" / snapshot_file_name(u.persona.id);
        if (!fs::exists(f)) throw ValidationError("missing snapshots for user " + u.persona.id + " (" + f.string() + ")");
        const json j = read_json_file(f.string());
        auto& m = out.snapshots[u.persona.id];
        for (const auto& [k, v] : j.at("snapshots").items()) m.emplace(std::stoi(k), bank_snapshot_from_json(v));
    }
    return out;
}

}  // namespace permem
