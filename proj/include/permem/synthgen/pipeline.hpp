#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "permem/dataset_io.hpp"
#include "permem/domain_pool.hpp"
#include "permem/horizons.hpp"
#include "permem/model.hpp"
#include "permem/rng.hpp"
#include "permem/synthgen/dialogue.hpp"
#include "permem/synthgen/profile.hpp"
#include "permem/synthgen/shift.hpp"
#include "permem/synthgen/skeleton.hpp"
#include "permem/synthgen/timeline.hpp"

namespace permem::synthgen {

struct GenerateConfig {
    std::uint64_t seed = 0;
    Variant variant = Variant::static_;
    std::size_t selected_count = 6;
    int max_month = 24;  // upper bound offered to the timeline arranger, per phase
    bool verify_profile = false;
    DialogueOptions dialogue;
    ModelRoles models;
    std::size_t jobs = 1;
};

struct UserGeneration {
    UserRecord user;
    std::vector<json> trace;
};

namespace detail {

template <typename Fn>
auto stage(const std::string& user, const std::string& name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (Error& e) {
        e.add_context("user " + user + ", stage " + name);
        throw;
    }
}

struct PhaseResult {
    std::vector<DomainSkeleton> skeletons;
    std::vector<TimelineSlot> slots;
    int total_months = 0;
};

struct PhaseInput {
    int phase = 1;
    const AgentUseProfile* profile = nullptr;
    std::string transition_context;
    int first_session_id = 1;
    int month_offset = 0;
};

inline SkeletonRequest request_for(const Persona& persona, const AgentUseProfile& profile, const std::string& domain,
                                   const PhaseInput& in) {
    const DomainUse* use = profile.find(domain);
    return {persona.description, domain, *use->frequency, use->reason, in.phase, in.transition_context};
}

inline PhaseResult build_phase(const GenerationContext& ctx, const Persona& persona, const PhaseInput& in,
                               const GenerateConfig& cfg, std::vector<std::string>& covered_facts,
                               std::vector<json>& trace) {
    const AgentUseProfile& profile = *in.profile;
    const std::string ph = "phase " + std::to_string(in.phase);
    PhaseResult out;
    std::vector<DomainSkeleton> mem;
    for (const auto& d : profile.selected_with_memory(true)) {
        auto sk = stage(persona.id, ph + " skeleton " + d, [&] {
            return generate_skeleton(ctx, request_for(persona, profile, d, in), covered_facts);
        });
        for (const auto& p : sk.projects)
            for (const auto& e : p.events)
                for (const auto& m : e.gt_memory) covered_facts.push_back(m.fact);
        trace.push_back({{"stage", "skeleton"}, {"phase", in.phase}, {"domain", d}, {"events", sk.event_count()}});
        mem.push_back(std::move(sk));
    }
    const auto arranged =
        stage(persona.id, ph + " timeline", [&] { return arrange_timeline(ctx, persona.description, mem, cfg.max_month); });
    out.total_months = arranged.total_months;
    trace.push_back({{"stage", "timeline"},
                     {"phase", in.phase},
                     {"total_months", arranged.total_months},
                     {"sessions", arranged.slots.size()},
                     {"anchor_life_events", arranged.anchor_events}});

    // (month, group, order): model-placed sessions first within a month.
    struct Keyed {
        TimelineSlot slot;
        int group;
        std::size_t order;
    };
    std::vector<Keyed> merged;
    for (const auto& s : arranged.slots) merged.push_back({s, 0, merged.size()});
    out.skeletons = std::move(mem);
    for (const auto& d : profile.selected_with_memory(false)) {
        const auto req = request_for(persona, profile, d, in);
        const int n = transient_event_count(arranged.total_months, req.frequency);
        auto events = stage(persona.id, ph + " one-off events " + d,
                            [&] { return generate_transient_events(ctx, req, n, arranged.total_months); });
        auto sched = place_transient_events(events, req.frequency, arranged.total_months, 1);
        trace.push_back({{"stage", "transient"},
                         {"phase", in.phase},
                         {"domain", d},
                         {"requested", n},
                         {"scheduled", sched.scheduled.size()},
                         {"dropped", sched.dropped}});
        DomainSkeleton sk;
        sk.domain = d;
        sk.memory_required = false;
        sk.phase = in.phase;
        for (auto& se : sched.scheduled) {
            merged.push_back({{0, se.month, d, std::nullopt, se.event.event_id}, 1, merged.size()});
            sk.events.push_back(std::move(se.event));
        }
        if (!sk.events.empty()) out.skeletons.push_back(std::move(sk));
    }
    std::stable_sort(merged.begin(), merged.end(), [](const Keyed& a, const Keyed& b) {
        if (a.slot.month != b.slot.month) return a.slot.month < b.slot.month;
        if (a.group != b.group) return a.group < b.group;
        return a.order < b.order;
    });
    for (std::size_t i = 0; i < merged.size(); ++i) {
        TimelineSlot s = merged[i].slot;
        s.session_id = in.first_session_id + static_cast<int>(i);
        s.month += in.month_offset;
        out.slots.push_back(std::move(s));
    }
    const auto problems = validate_timeline(out.skeletons, out.slots, in.month_offset + out.total_months,
                                            in.first_session_id, in.month_offset + 1);
    if (!problems.empty())
        throw GenerationError("user " + persona.id + ", " + ph + ": merged timeline invalid: " + problems.front());
    return out;
}

inline ShiftPlan transition_narrative(const GenerationContext& ctx, const Persona& persona,
                                      const AgentUseProfile& profile, ShiftPlan plan, int total_months) {
    const PromptVars vars = {{"persona", persona.description},
                             {"total_months", std::to_string(total_months)},
                             {"mem_domains", text::join(profile.selected_with_memory(true), ", ")},
                             {"oneoff_domains", text::join(profile.selected_with_memory(false), ", ")},
                             {"demoted", plan.demoted},
                             {"added_longitudinal", plan.added_longitudinal},
                             {"added_transient", plan.added_transient.value_or("(none)")}};
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto j = extract_json_object(ask(ctx, "transition_system", "transition_user", vars));
        if (!j) continue;
        const std::string name = j->value("name", "");
        const std::string desc = j->value("description", "");
        if (text::trim(name).empty() || text::trim(desc).empty()) continue;
        plan.narrative = name + ": " + desc;
        return plan;
    }
    throw GenerationError("transition narrative unparseable after retry");
}

struct EventRef {
    const DomainSkeleton* domain = nullptr;
    const SkeletonProject* project = nullptr;
    std::size_t index = 0;  // within project or loose events
};

}  // namespace detail

// Full per-persona pipeline: profile, balanced selection, phase-1 skeletons
// and timeline, optional profile shift with phase 2, then dialogues and
// reference memories with retention horizons.
inline UserGeneration generate_user(Generator& backend, const PromptSet& prompts, const DomainPool& pool,
                                    const Persona& persona, const GenerateConfig& cfg) {
    UserGeneration out;
    auto& trace = out.trace;
    UserRecord& user = out.user;
    user.persona = persona;
    const GenerationContext ctx{&backend, &prompts, cfg.models.generation};
    SeededRng rng = persona_rng(cfg.seed, persona.id);

    user.profile = detail::stage(persona.id, "profile", [&] { return assign_profile(ctx, persona, pool); });
    if (cfg.verify_profile) {
        const auto flagged = detail::stage(persona.id, "profile verify", [&] { return verify_profile(ctx, persona, user.profile); });
        trace.push_back({{"stage", "profile_verify"}, {"deactivated", flagged}});
    }
    const auto selected = detail::stage(persona.id, "selection", [&] {
        return sample_selected_domains(user.profile, cfg.selected_count, rng);
    });
    user.profile.selected = {selected.begin(), selected.end()};
    trace.push_back({{"stage", "selection"}, {"selected", selected}});
    if (cfg.variant == Variant::dynamic && user.profile.unused_active().empty())
        throw GenerationError("user " + persona.id + ": no unused active domain left for a profile shift");

    std::vector<std::string> covered;
    auto phase1 = detail::build_phase(ctx, persona, {1, &user.profile, "", 1, 0}, cfg, covered, trace);
    std::vector<DomainSkeleton> skeletons = std::move(phase1.skeletons);
    std::vector<TimelineSlot> slots = std::move(phase1.slots);

    std::optional<AgentUseProfile> shifted;
    if (cfg.variant == Variant::dynamic) {
        ShiftPlan plan = detail::stage(persona.id, "shift", [&] { return sample_shift(user.profile, rng); });
        plan = detail::stage(persona.id, "transition", [&] {
            return detail::transition_narrative(ctx, persona, user.profile, plan, phase1.total_months);
        });
        trace.push_back({{"stage", "shift"}, {"plan", to_json(plan)}});
        const int shift_point = static_cast<int>(slots.size()) + 1;
        user.shift = ProfileShift{plan, shift_point};
        shifted = apply_shift(user.profile, plan);
        const std::string context = "\n## Life Transition\n" + plan.narrative + "\n";
        auto phase2 = detail::build_phase(ctx, persona, {2, &*shifted, context, shift_point, phase1.total_months}, cfg,
                                          covered, trace);
        for (auto& sk : phase2.skeletons) skeletons.push_back(std::move(sk));
        for (auto& s : phase2.slots) slots.push_back(std::move(s));
    }
    user.skeleton.domains = skeletons;

    std::map<std::string, detail::EventRef> events;
    for (const auto& sk : user.skeleton.domains) {
        for (const auto& p : sk.projects)
            for (std::size_t i = 0; i < p.events.size(); ++i) events[p.events[i].event_id] = {&sk, &p, i};
        for (std::size_t i = 0; i < sk.events.size(); ++i) events[sk.events[i].event_id] = {&sk, nullptr, i};
    }

    for (const auto& slot : slots) {
        const auto& ref = events.at(slot.event_id);
        const SkeletonEvent& ev = ref.project ? ref.project->events[ref.index] : ref.domain->events[ref.index];
        DialogueRequest req;
        req.persona = persona.description;
        req.domain = slot.domain;
        req.event_description = ev.description;
        if (ref.project) {
            req.facts = ev.gt_memory;
            for (std::size_t i = 0; i < ref.index; ++i)
                for (const auto& m : ref.project->events[i].gt_memory) req.prior_facts.push_back(m.fact);
        }
        DialogueOptions dopts = cfg.dialogue;
        dopts.simulator_model = cfg.models.simulator;
        dopts.agent_model = cfg.models.generation;
        dopts.judge_model = cfg.models.judge;
        const auto dlg = detail::stage(persona.id, "dialogue session " + std::to_string(slot.session_id),
                                       [&] { return generate_dialogue(backend, prompts, req, dopts); });
        json rec = {{"stage", "dialogue"},
                    {"session_id", slot.session_id},
                    {"turns", dlg.turns.size() / 2},
                    {"revealed", dlg.revealed.size()},
                    {"facts", req.facts.size()},
                    {"ended_by_marker", dlg.ended_by_marker},
                    {"hit_cap", dlg.hit_cap}};
        if (!dlg.warnings.empty()) rec["warnings"] = dlg.warnings;
        trace.push_back(std::move(rec));

        Session s;
        s.session_id = slot.session_id;
        s.domain = slot.domain;
        s.month = slot.month;
        s.turns = dlg.turns;
        s.project = slot.project;
        s.event_id = slot.event_id;
        s.gt_memory_required = memory_required_at(user.profile, user.shift, s.domain, s.session_id);
        user.timeline.push_back(std::move(s));

        if (ref.project) {
            for (std::size_t i = 0; i < ev.gt_memory.size(); ++i) {
                const auto& m = ev.gt_memory[i];
                ReferenceMemory r;
                r.id = ev.event_id + "-m" + std::to_string(i + 1);
                r.kind = m.kind;
                r.fact = m.fact;
                if (!m.probing_question.empty()) r.probing_question = m.probing_question;
                if (!m.answer.empty()) r.answer = m.answer;
                r.t_start = slot.session_id;
                if (m.kind == ReferenceKind::ongoing_state) r.project = ref.project->project_id;
                user.references.push_back(std::move(r));
            }
        }
    }
    detail::stage(persona.id, "horizons", [&] { compute_retention_horizons(user); });
    for (auto& t : trace) t["user"] = persona.id;
    return out;
}

struct DatasetGeneration {
    BenchmarkDataset dataset;
    std::vector<json> trace;
};

// Users run in parallel up to cfg.jobs; output order follows `personas`.
// With a scripted mock, byte-identical output across runs is guaranteed only
// when jobs == 1 or every rule has a single response.
inline DatasetGeneration generate_dataset(Generator& backend, const PromptSet& prompts, const DomainPool& pool,
                                          const std::vector<Persona>& personas, const GenerateConfig& cfg) {
    if (personas.empty()) throw ValidationError("no personas to generate");
    std::vector<std::optional<UserGeneration>> results(personas.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < personas.size(); i = next++) {
            {
                std::lock_guard lock(failure_mutex);
                if (failure) return;
            }
            try {
                results[i] = generate_user(backend, prompts, pool, personas[i], cfg);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    const std::size_t n_threads = std::max<std::size_t>(1, std::min(cfg.jobs, personas.size()));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    DatasetGeneration out;
    out.dataset.variant = cfg.variant;
    for (auto& r : results) {
        out.dataset.users.push_back(std::move(r->user));
        for (auto& t : r->trace) out.trace.push_back(std::move(t));
    }
    validate_dataset(out.dataset, pool);
    return out;
}

inline std::vector<Persona> load_personas(const std::string& path) {
    const json j = read_json_file(path);
    const json& arr = j.is_object() && j.contains("personas") ? j.at("personas") : j;
    if (!arr.is_array()) throw ValidationError(path + ": expected an array of personas");
    std::vector<Persona> out;
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(persona_from_json(arr[i], "personas[" + std::to_string(i) + "]"));
    return out;
}

}  // namespace permem::synthgen
