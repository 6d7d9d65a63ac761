#pragma once

#include <set>
#include <string>
#include <vector>

#include "permem/backend/backend.hpp"
#include "permem/backend/json_extract.hpp"
#include "permem/model.hpp"
#include "permem/prompts.hpp"
#include "permem/text.hpp"

namespace permem::synthgen {

struct DialogueOptions {
    int min_turns = 6;   // user+agent exchanges
    int max_turns = 20;  // hard cap
    std::string simulator_model;
    std::string agent_model;
    std::string judge_model;
};

struct DialogueRequest {
    std::string persona;
    std::string domain;
    std::string event_description;
    std::vector<std::string> prior_facts;  // established earlier in the same project
    std::vector<MemorySeed> facts;         // empty for transient sessions
};

struct DialogueResult {
    std::vector<Turn> turns;
    std::set<std::size_t> revealed;  // indices into request.facts
    bool ended_by_marker = false;
    bool hit_cap = false;
    std::vector<std::string> warnings;
};

inline constexpr std::string_view kEndMarker = "[END]";

namespace detail {

inline std::string bullet_list(const std::vector<std::string>& items) {
    if (items.empty()) return "(none)";
    std::string out;
    for (const auto& s : items) out += "- " + s + "\n";
    return out;
}

inline std::string fact_briefing(const std::vector<MemorySeed>& facts) {
    if (facts.empty()) return "(nothing specific; just get your one-off need met)";
    std::string out;
    for (const auto& f : facts) {
        if (f.kind == ReferenceKind::user_profile)
            out += "- [user_profile] " + f.fact + " (let this shape how you react; do not announce it upfront)\n";
        else
            out += "- [ongoing_state] Not decided yet: " + f.fact + " (let this emerge through the conversation)\n";
    }
    return out;
}

// Removes every end marker; returns true if one was present.
inline bool strip_end_marker(std::string& s) {
    bool found = false;
    for (auto pos = s.find(kEndMarker); pos != std::string::npos; pos = s.find(kEndMarker)) {
        s.erase(pos, kEndMarker.size());
        found = true;
    }
    s = std::string(text::trim(s));
    return found;
}

}  // namespace detail

// Two isolated conversations: the user simulator sees the event and facts,
// the agent sees only user utterances. A judge marks facts revealed after
// every user turn. Stops when every fact is revealed and min_turns is met,
// on the end marker, or at max_turns.
inline DialogueResult generate_dialogue(Generator& backend, const PromptSet& prompts, const DialogueRequest& req,
                                        const DialogueOptions& opts = {}) {
    if (opts.min_turns < 1 || opts.max_turns < opts.min_turns)
        throw ConfigError("dialogue turn limits must satisfy 1 <= min_turns <= max_turns");
    DialogueResult out;

    GenerationRequest user_sim;
    user_sim.system_prompt = prompts.render("user_sim_system", {{"persona", req.persona}});
    user_sim.model_id = opts.simulator_model;
    user_sim.messages.push_back({"user", prompts.render("user_sim_opening", {{"domain_name", req.domain},
                                                                             {"event_description", req.event_description},
                                                                             {"prior_context", detail::bullet_list(req.prior_facts)},
                                                                             {"fact_briefing", detail::fact_briefing(req.facts)}})});
    GenerationRequest agent;
    agent.system_prompt = prompts.render("agent_system", {});
    agent.model_id = opts.agent_model;

    std::string numbered;
    for (std::size_t i = 0; i < req.facts.size(); ++i) numbered += std::to_string(i + 1) + ". " + req.facts[i].fact + "\n";
    std::string utterances;

    for (int turn = 1; turn <= opts.max_turns; ++turn) {
        std::string said = backend.generate(user_sim);
        user_sim.messages.push_back({"assistant", said});
        const bool ended = detail::strip_end_marker(said);
        if (said.empty()) {
            if (!ended) throw GenerationError("user simulator returned an empty utterance");
            out.ended_by_marker = true;
            break;
        }
        out.turns.push_back({Speaker::user, said});
        utterances += "- " + said + "\n";

        if (!req.facts.empty() && out.revealed.size() < req.facts.size()) {
            const auto prompt = prompts.render("fact_judge", {{"facts", numbered}, {"user_utterances", utterances}});
            bool parsed = false;
            for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
                const auto j = extract_json_object(backend.generate(GenerationRequest::single("", prompt, opts.judge_model)));
                if (!j || !j->contains("revealed") || !(*j)["revealed"].is_array()) continue;
                parsed = true;
                for (const auto& n : (*j)["revealed"]) {
                    if (!n.is_number_integer() || n.get<long long>() < 1 ||
                        n.get<long long>() > static_cast<long long>(req.facts.size())) {
                        out.warnings.push_back("judge returned out-of-range fact number " + n.dump());
                        continue;
                    }
                    out.revealed.insert(static_cast<std::size_t>(n.get<long long>() - 1));
                }
            }
            if (!parsed) out.warnings.push_back("fact judge reply unparseable at turn " + std::to_string(turn));
        }

        agent.messages.push_back({"user", said});
        const std::string reply = backend.generate(agent);
        agent.messages.push_back({"assistant", reply});
        out.turns.push_back({Speaker::agent, reply});

        if (ended) {
            out.ended_by_marker = true;
            break;
        }
        if (out.revealed.size() == req.facts.size() && turn >= opts.min_turns) break;
        if (turn == opts.max_turns) {
            out.hit_cap = true;
            break;
        }

        std::vector<std::string> unrevealed, revealed;
        for (std::size_t i = 0; i < req.facts.size(); ++i)
            (out.revealed.contains(i) ? revealed : unrevealed).push_back(req.facts[i].fact);
        user_sim.messages.push_back({"user", prompts.render("user_sim_continuation",
                                                            {{"agent_reply", reply},
                                                             {"unrevealed_facts", detail::bullet_list(unrevealed)},
                                                             {"revealed_facts", detail::bullet_list(revealed)}})});
    }
    if (out.turns.empty()) throw GenerationError("dialogue ended before any user turn");
    if (out.revealed.size() < req.facts.size())
        out.warnings.push_back("coverage: " + std::to_string(req.facts.size() - out.revealed.size()) + " of " +
                               std::to_string(req.facts.size()) + " facts never revealed");
    return out;
}

}  // namespace permem::synthgen
