#pragma once

#include <set>
#include <string>
#include <vector>

#include "permem/backend/json_extract.hpp"
#include "permem/domain_pool.hpp"
#include "permem/model.hpp"
#include "permem/synthgen/skeleton.hpp"

namespace permem::synthgen {

namespace detail {

inline AgentUseProfile parse_profile_reply(std::string_view reply, const Persona& persona, const DomainPool& pool,
                                           std::vector<std::string>& problems) {
    AgentUseProfile profile;
    profile.persona = persona.id;
    auto arr = extract_json_array(reply);
    if (!arr) {
        if (auto obj = extract_json_object(reply); obj && obj->contains("domains") && (*obj)["domains"].is_array())
            arr = (*obj)["domains"];
    }
    if (!arr) {
        problems.push_back("reply must be a JSON array with one object per domain");
        return profile;
    }
    for (const auto& e : *arr) {
        const std::string name = e.is_object() ? e.value("domain_name", "") : "";
        if (!pool.contains(name)) {
            problems.push_back("unknown domain_name \"" + name + "\"");
            continue;
        }
        if (profile.entries.contains(name)) {
            problems.push_back("domain \"" + name + "\" listed twice");
            continue;
        }
        if (!e.contains("use") || !e["use"].is_boolean()) {
            problems.push_back("domain \"" + name + "\" needs a boolean use");
            continue;
        }
        DomainUse use;
        use.active = e["use"].get<bool>();
        use.reason = e.value("reason", "");
        const json mr = e.value("memory_required", json());
        const json fr = e.value("frequency", json());
        if (use.active) {
            const auto f = fr.is_string() ? parse_frequency(fr.get<std::string>()) : std::nullopt;
            if (!mr.is_boolean() || !f) {
                problems.push_back("domain \"" + name + "\" has use=true but lacks memory_required or frequency");
                continue;
            }
            use.memory_required = mr.get<bool>();
            use.frequency = f;
        } else if (!mr.is_null() || !fr.is_null()) {
            problems.push_back("domain \"" + name + "\" has use=false but non-null memory_required or frequency");
            continue;
        }
        profile.entries.emplace(name, std::move(use));
    }
    for (const auto& d : pool.names())
        if (!profile.entries.contains(d)) problems.push_back("domain \"" + d + "\" was not evaluated");
    return profile;
}

}  // namespace detail

// Per-domain triplets (use, memory_required, frequency) for every pool
// domain; one retry with feedback.
inline AgentUseProfile assign_profile(const GenerationContext& ctx, const Persona& persona, const DomainPool& pool) {
    std::string domain_list;
    for (std::size_t i = 0; i < pool.size(); ++i) domain_list += std::to_string(i + 1) + ". " + pool.names()[i] + "\n";
    std::vector<std::string> problems;
    for (int attempt = 0; attempt < 2; ++attempt) {
        PromptVars vars = {{"persona", persona.description},
                           {"domain_list", domain_list + feedback_block(problems)},
                           {"n_domains", std::to_string(pool.size())}};
        const auto reply = ask(ctx, "", "profile_assignment", vars);
        problems.clear();
        auto profile = detail::parse_profile_reply(reply, persona, pool, problems);
        if (problems.empty()) return profile;
    }
    throw GenerationError("profile assignment rejected after retry: " + problems.front());
}

// Optional single verifier call; flagged domains are deactivated. Returns
// the flagged names.
inline std::vector<std::string> verify_profile(const GenerationContext& ctx, const Persona& persona,
                                               AgentUseProfile& profile) {
    json domains = json::array();
    for (const auto& [name, use] : profile.entries)
        domains.push_back({{"domain_name", name},
                           {"use", use.active},
                           {"memory_required", use.memory_required ? json(*use.memory_required) : json()},
                           {"frequency", use.frequency ? json(std::string(to_string(*use.frequency))) : json()},
                           {"reason", use.reason}});
    const auto reply = ask(ctx, "", "profile_verify", {{"persona", persona.description}, {"domains_json", domains.dump(2)}});
    std::vector<std::string> flagged;
    const auto j = extract_json_object(reply);
    if (!j || !j->contains("implausible") || !(*j)["implausible"].is_array()) return flagged;
    for (const auto& d : (*j)["implausible"]) {
        if (!d.is_string()) continue;
        auto it = profile.entries.find(d.get<std::string>());
        if (it == profile.entries.end() || !it->second.active) continue;
        it->second = DomainUse{false, std::nullopt, std::nullopt, it->second.reason};
        flagged.push_back(it->first);
    }
    return flagged;
}

}  // namespace permem::synthgen
