#pragma once

// Offline mini-benchmark: every session states its facts with FACT: lines,
// long-horizon sessions carry reference memories, transient sessions carry
// one-off details nobody needs later.

#include <string>
#include <vector>

#include "permem/permem.hpp"
#include "support/fixtures.hpp"

namespace permem::testing {

struct MiniBenchmarkConfig {
    std::uint64_t seed = 2024;
    std::size_t users = 4;
    int sessions = 40;
    int transient_facts = 2;  // FACT lines per transient session
};

inline const std::vector<std::string>& mini_long_domains() {
    static const std::vector<std::string> d = {"Software Development & Coding", "Language Learning"};
    return d;
}

inline const std::vector<std::string>& mini_transient_domains() {
    static const std::vector<std::string> d = {"Travel Planning", "Recipe Advice & Meal Planning"};
    return d;
}

inline UserRecord mini_user(std::size_t index, const MiniBenchmarkConfig& cfg) {
    UserRecord u;
    const std::string id = "mini-" + std::to_string(index + 1);
    u.persona = {id, "Synthetic user " + std::to_string(index + 1), {}};
    std::vector<std::pair<std::string, DomainUse>> actives;
    std::vector<std::string> selected;
    for (const auto& d : mini_long_domains()) actives.push_back({d, active(Frequency::high, true)}), selected.push_back(d);
    for (const auto& d : mini_transient_domains())
        actives.push_back({d, active(Frequency::high, false)}), selected.push_back(d);
    u.profile = make_profile(id, actives, selected);

    SeededRng rng = persona_rng(cfg.seed, id);
    std::vector<std::string> all = mini_long_domains();
    all.insert(all.end(), mini_transient_domains().begin(), mini_transient_domains().end());
    for (int sid = 1; sid <= cfg.sessions; ++sid) {
        const std::string domain = all[rng.below(all.size())];
        const bool memory = std::find(mini_long_domains().begin(), mini_long_domains().end(), domain) !=
                            mini_long_domains().end();
        std::vector<std::string> lines;
        if (memory) {
            const std::string fact = "user " + id + " settled detail " + std::to_string(sid) + " of " + text::slugify(domain);
            lines.push_back("FACT: " + fact);
            ReferenceMemory r;
            r.id = id + "-s" + std::to_string(sid) + "-m1";
            r.kind = ReferenceKind::user_profile;
            r.fact = fact;
            r.t_start = sid;
            u.references.push_back(std::move(r));
        } else {
            for (int k = 1; k <= cfg.transient_facts; ++k)
                lines.push_back("FACT: one-off detail " + std::to_string(k) + " from session " + std::to_string(sid));
        }
        lines.push_back("Thanks for the help.");
        Session s = make_session(sid, domain, lines, memory);
        s.event_id = "ev-" + std::to_string(sid);
        u.timeline.push_back(std::move(s));
    }
    compute_retention_horizons(u);
    return u;
}

inline BenchmarkDataset mini_benchmark(const MiniBenchmarkConfig& cfg = {}) {
    BenchmarkDataset ds;
    for (std::size_t i = 0; i < cfg.users; ++i) ds.users.push_back(mini_user(i, cfg));
    validate_dataset(ds);
    return ds;
}

// Runs one policy in-process with the marker extractor and the substring judge.
inline PolicyEvaluation mini_evaluate(const BenchmarkDataset& ds, const std::string& policy, std::size_t budget,
                                      std::size_t checkpoints = 20) {
    ScriptedMock backend;
    PromptSet prompts;
    RunConfig cfg;
    cfg.budget = budget;
    cfg.extractor = ExtractorKind::marker;
    cfg.checkpoints = checkpoints;
    const auto runs = run_policy(ds, policy, backend, prompts, cfg);
    SubstringJudge judge;
    RetentionConfig rcfg;
    rcfg.checkpoints = checkpoints;
    return evaluate_policy(ds, policy, loaded_from_runs(runs), backend, judge, rcfg);
}

}  // namespace permem::testing
