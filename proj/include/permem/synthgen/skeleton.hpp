#pragma once

#include <set>
#include <string>
#include <vector>

#include "permem/backend/backend.hpp"
#include "permem/backend/json_extract.hpp"
#include "permem/model.hpp"
#include "permem/prompts.hpp"
#include "permem/synthgen/scaling.hpp"
#include "permem/synthgen/timeline.hpp"
#include "permem/text.hpp"

namespace permem::synthgen {

struct GenerationContext {
    Generator* backend = nullptr;
    const PromptSet* prompts = nullptr;
    std::string model_id;
};

inline std::string ask(const GenerationContext& ctx, const std::string& system_name, const std::string& user_name,
                       const PromptVars& vars) {
    GenerationRequest r;
    r.system_prompt = system_name.empty() ? std::string{} : ctx.prompts->render(system_name, vars);
    r.messages.push_back({"user", ctx.prompts->render(user_name, vars)});
    r.model_id = ctx.model_id;
    return ctx.backend->generate(r);
}

inline std::string feedback_block(const std::vector<std::string>& problems) {
    if (problems.empty()) return {};
    std::string out = "\n## Problems with your previous answer (fix all of them)\n";
    for (const auto& p : problems) out += "- " + p + "\n";
    return out;
}

// Canonical ids make skeletons independent of whatever ids the model chose.
inline std::string project_id_for(const std::string& domain, int phase, std::size_t p) {
    return text::slugify(domain) + (phase > 1 ? "-ph" + std::to_string(phase) : std::string{}) + "-p" +
           std::to_string(p + 1);
}

inline std::string transient_event_id(const std::string& domain, int phase, std::size_t e) {
    return text::slugify(domain) + (phase > 1 ? "-ph" + std::to_string(phase) : std::string{}) + "-o" +
           std::to_string(e + 1);
}

struct SkeletonRequest {
    std::string persona;
    std::string domain;
    Frequency frequency = Frequency::low;
    std::string reason;
    int phase = 1;
    std::string transition_context;  // empty in phase 1
};

namespace detail {

inline std::string text_field(const json& j, const char* key) {
    auto it = j.find(key);
    return it != j.end() && it->is_string() ? it->get<std::string>() : std::string{};
}

// Parses and checks a skeleton reply; problems are appended to `problems`.
inline DomainSkeleton parse_skeleton_reply(std::string_view reply, const SkeletonRequest& req,
                                           const std::set<std::string>& covered_norm,
                                           std::vector<std::string>& problems) {
    DomainSkeleton sk;
    sk.domain = req.domain;
    sk.memory_required = true;
    sk.phase = req.phase;
    const auto j = extract_json_object(reply);
    if (!j || !j->contains("projects") || !(*j)["projects"].is_array()) {
        problems.push_back("reply must be a JSON object with a projects array");
        return sk;
    }
    std::set<std::string> own;
    for (const auto& pj : (*j)["projects"]) {
        SkeletonProject p;
        p.project_id = project_id_for(req.domain, req.phase, sk.projects.size());
        p.title = text_field(pj, "title");
        if (p.title.empty()) p.title = p.project_id;
        if (!pj.contains("events") || !pj["events"].is_array()) {
            problems.push_back("project " + std::to_string(sk.projects.size() + 1) + " has no events array");
            sk.projects.push_back(std::move(p));
            continue;
        }
        for (const auto& ej : pj["events"]) {
            SkeletonEvent e;
            e.event_id = p.project_id + "-e" + std::to_string(p.events.size() + 1);
            e.title = text_field(ej, "title");
            if (e.title.empty()) e.title = text_field(ej, "event_title");
            e.description = text_field(ej, "description");
            if (e.description.empty()) e.description = text_field(ej, "event_description");
            if (text::trim(e.description).empty()) problems.push_back("event " + e.event_id + " has no description");
            if (auto g = ej.find("gt_memory"); g != ej.end() && g->is_array()) {
                for (const auto& mj : *g) {
                    MemorySeed m;
                    const auto kind = parse_reference_kind(text_field(mj, "type"));
                    m.fact = text_field(mj, "fact");
                    m.probing_question = text_field(mj, "probing_question");
                    m.answer = text_field(mj, "answer");
                    if (!kind) {
                        problems.push_back("event " + e.event_id + ": gt_memory type must be user_profile or ongoing_state");
                        continue;
                    }
                    m.kind = *kind;
                    const auto norm = text::normalize(m.fact);
                    if (norm.empty()) {
                        problems.push_back("event " + e.event_id + ": empty fact");
                        continue;
                    }
                    if (covered_norm.contains(norm))
                        problems.push_back("fact duplicates an already covered fact: \"" + m.fact + "\"");
                    else if (!own.insert(norm).second)
                        problems.push_back("fact appears twice in this skeleton: \"" + m.fact + "\"");
                    e.gt_memory.push_back(std::move(m));
                }
            }
            p.events.push_back(std::move(e));
        }
        sk.projects.push_back(std::move(p));
    }
    const auto scale = project_scale(req.frequency);
    if (static_cast<int>(sk.projects.size()) != scale.n_projects)
        problems.push_back("expected exactly " + std::to_string(scale.n_projects) + " projects, got " +
                           std::to_string(sk.projects.size()));
    for (const auto& p : sk.projects) {
        const int n = static_cast<int>(p.events.size());
        if (n < scale.events_min || n > scale.events_max)
            problems.push_back("project " + p.project_id + " has " + std::to_string(n) + " events; allowed " +
                               std::to_string(scale.events_min) + "-" + std::to_string(scale.events_max));
    }
    return sk;
}

}  // namespace detail

// Memory-required domain skeleton. Count or duplicate-fact violations get one
// regeneration with feedback; a second failure is a GenerationError.
inline DomainSkeleton generate_skeleton(const GenerationContext& ctx, const SkeletonRequest& req,
                                        const std::vector<std::string>& covered_facts) {
    std::set<std::string> covered_norm;
    std::string covered_list;
    for (const auto& f : covered_facts) {
        covered_norm.insert(text::normalize(f));
        covered_list += "- " + f + "\n";
    }
    if (covered_list.empty()) covered_list = "(none)\n";
    const auto scale = project_scale(req.frequency);
    std::vector<std::string> problems;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const PromptVars vars = {{"persona", req.persona},
                                 {"domain_name", req.domain},
                                 {"frequency", std::string(to_string(req.frequency))},
                                 {"reason", req.reason},
                                 {"transition_context", req.transition_context},
                                 {"n_projects", std::to_string(scale.n_projects)},
                                 {"n_events_min", std::to_string(scale.events_min)},
                                 {"n_events_max", std::to_string(scale.events_max)},
                                 {"covered_facts", covered_list},
                                 {"feedback", feedback_block(problems)}};
        const auto reply = ask(ctx, "skeleton_system", "skeleton_user", vars);
        problems.clear();
        auto sk = detail::parse_skeleton_reply(reply, req, covered_norm, problems);
        if (problems.empty()) return sk;
    }
    throw GenerationError("skeleton for " + req.domain + " rejected after retry: " + problems.front());
}

// Exactly n one-off events for a transient domain; one retry.
inline std::vector<SkeletonEvent> generate_transient_events(const GenerationContext& ctx, const SkeletonRequest& req,
                                                            int n_events, int total_months) {
    if (n_events <= 0) return {};
    std::vector<std::string> problems;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const PromptVars vars = {{"persona", req.persona},
                                 {"domain_name", req.domain},
                                 {"frequency", std::string(to_string(req.frequency))},
                                 {"transition_context", req.transition_context},
                                 {"n_events", std::to_string(n_events)},
                                 {"total_months", std::to_string(total_months)},
                                 {"feedback", feedback_block(problems)}};
        const auto reply = ask(ctx, "oneoff_system", "oneoff_user", vars);
        problems.clear();
        const auto j = extract_json_object(reply);
        if (!j || !j->contains("events") || !(*j)["events"].is_array()) {
            problems.push_back("reply must be a JSON object with an events array");
            continue;
        }
        std::vector<SkeletonEvent> out;
        for (const auto& ej : (*j)["events"]) {
            SkeletonEvent e;
            e.event_id = transient_event_id(req.domain, req.phase, out.size());
            e.title = detail::text_field(ej, "event_title");
            if (e.title.empty()) e.title = detail::text_field(ej, "title");
            e.description = detail::text_field(ej, "event_description");
            if (e.description.empty()) e.description = detail::text_field(ej, "description");
            if (text::trim(e.description).empty()) problems.push_back("event " + std::to_string(out.size() + 1) + " has no description");
            out.push_back(std::move(e));
        }
        if (static_cast<int>(out.size()) != n_events)
            problems.push_back("expected exactly " + std::to_string(n_events) + " events, got " +
                               std::to_string(out.size()));
        if (problems.empty()) return out;
    }
    throw GenerationError("one-off events for " + req.domain + " rejected after retry: " + problems.front());
}

struct ArrangedTimeline {
    int total_months = 0;
    std::vector<TimelineSlot> slots;
    std::vector<std::string> anchor_events;
};

// Places all memory-required events via the model and validates the result
// (one retry with the violations as feedback).
inline ArrangedTimeline arrange_timeline(const GenerationContext& ctx, const std::string& persona,
                                         const std::vector<DomainSkeleton>& skeletons, int max_month) {
    std::string summary, table;
    for (const auto& sk : skeletons) {
        summary += "### " + sk.domain + "\n";
        for (const auto& p : sk.projects) {
            summary += "- " + p.project_id + ": " + p.title + " (" + std::to_string(p.events.size()) + " events)\n";
            for (const auto& e : p.events) table += sk.domain + " | " + p.project_id + " | " + e.event_id + " | " + e.title + "\n";
        }
    }
    std::vector<std::string> problems;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const PromptVars vars = {{"persona", persona},
                                 {"skeleton_summary", summary},
                                 {"event_table", table},
                                 {"max_month", std::to_string(max_month)},
                                 {"feedback", feedback_block(problems)}};
        const auto reply = ask(ctx, "timeline_system", "timeline_user", vars);
        problems.clear();
        const auto j = extract_json_object(reply);
        if (!j || !j->contains("session_sequence") || !(*j)["session_sequence"].is_array() ||
            !j->contains("total_months") || !(*j)["total_months"].is_number_integer()) {
            problems.push_back("reply must contain integer total_months and a session_sequence array");
            continue;
        }
        ArrangedTimeline out;
        out.total_months = (*j)["total_months"].get<int>();
        if (auto a = j->find("anchor_life_events"); a != j->end() && a->is_array())
            for (const auto& x : *a)
                if (x.is_string()) out.anchor_events.push_back(x.get<std::string>());
        bool malformed = false;
        for (const auto& sj : (*j)["session_sequence"]) {
            if (!sj.is_object() || !sj.contains("session_id") || !sj["session_id"].is_number_integer() ||
                !sj.contains("month") || !sj["month"].is_number_integer() || !sj.contains("event_id") ||
                !sj["event_id"].is_string()) {
                malformed = true;
                break;
            }
            TimelineSlot s;
            s.session_id = sj["session_id"].get<int>();
            s.month = sj["month"].get<int>();
            s.event_id = sj["event_id"].get<std::string>();
            s.domain = detail::text_field(sj, "domain");
            const auto pid = detail::text_field(sj, "project_id");
            if (!pid.empty()) s.project = pid;
            out.slots.push_back(std::move(s));
        }
        if (malformed) {
            problems.push_back("every session_sequence entry needs integer session_id and month and a string event_id");
            continue;
        }
        if (out.total_months < 1 || out.total_months > max_month)
            problems.push_back("total_months must be within 1-" + std::to_string(max_month));
        for (const auto& s : out.slots)
            if (s.month > out.total_months) {
                problems.push_back("session " + std::to_string(s.session_id) + " is placed after total_months");
                break;
            }
        for (auto& p : validate_timeline(skeletons, out.slots, std::max(1, std::min(out.total_months, max_month))))
            problems.push_back(std::move(p));
        if (problems.empty()) return out;
    }
    throw GenerationError("timeline rejected after retry: " + problems.front());
}

}  // namespace permem::synthgen
