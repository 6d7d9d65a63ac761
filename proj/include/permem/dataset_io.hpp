#pragma once

#include <algorithm>
#include <cstdlib>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "permem/domain_pool.hpp"
#include "permem/json_util.hpp"
#include "permem/model.hpp"
#include "permem/synthgen/scaling.hpp"
#include "permem/text.hpp"

namespace permem {

// ---------------------------------------------------------------------------
// Serialization. Optional fields are omitted when absent; objects are emitted
// with sorted keys so output is canonical.
// ---------------------------------------------------------------------------

inline json to_json(const Persona& p) {
    return {{"id", p.id}, {"description", p.description}, {"attributes", p.attributes}};
}

inline Persona persona_from_json(const json& j, std::string_view where) {
    Persona p;
    p.id = require<std::string>(j, "id", where);
    p.description = require<std::string>(j, "description", where);
    if (auto it = j.find("attributes"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw ValidationError(std::string(where) + ".attributes must be an object");
        for (const auto& [k, v] : it->items()) {
            if (!v.is_string()) throw ValidationError(std::string(where) + ".attributes." + k + " must be text");
            p.attributes[k] = v.get<std::string>();
        }
    }
    return p;
}

inline json to_json(const AgentUseProfile& profile) {
    json domains = json::object();
    for (const auto& [name, use] : profile.entries) {
        json e = {{"active", use.active}};
        e["frequency"] = use.frequency ? json(std::string(to_string(*use.frequency))) : json(nullptr);
        e["memory_required"] = use.memory_required ? json(*use.memory_required) : json(nullptr);
        if (!use.reason.empty()) e["reason"] = use.reason;
        domains[name] = std::move(e);
    }
    return {{"persona", profile.persona}, {"domains", domains}, {"selected", profile.selected}};
}

inline AgentUseProfile profile_from_json(const json& j, std::string_view where) {
    AgentUseProfile profile;
    profile.persona = field_or<std::string>(j, "persona", where, "");
    auto it = j.find("domains");
    if (it == j.end() || !it->is_object()) throw ValidationError(std::string(where) + ".domains must be an object");
    for (const auto& [name, e] : it->items()) {
        const std::string w = std::string(where) + ".domains[" + name + "]";
        DomainUse use;
        use.active = require<bool>(e, "active", w);
        if (auto f = optional_field<std::string>(e, "frequency", w)) {
            use.frequency = parse_frequency(*f);
            if (!use.frequency) throw ValidationError(w + ": unknown frequency '" + *f + "'");
        }
        use.memory_required = optional_field<bool>(e, "memory_required", w);
        use.reason = field_or<std::string>(e, "reason", w, "");
        profile.entries.emplace(name, std::move(use));
    }
    for (const auto& d : require_array(j, "selected", where)) {
        if (!d.is_string()) throw ValidationError(std::string(where) + ".selected must hold domain names");
        profile.selected.insert(d.get<std::string>());
    }
    return profile;
}

inline json to_json(const ShiftPlan& plan) {
    json j = {{"demoted", plan.demoted}, {"added_longitudinal", plan.added_longitudinal}, {"narrative", plan.narrative}};
    j["added_transient"] = plan.added_transient ? json(*plan.added_transient) : json(nullptr);
    return j;
}

inline ShiftPlan shift_plan_from_json(const json& j, std::string_view where) {
    ShiftPlan plan;
    plan.demoted = require<std::string>(j, "demoted", where);
    plan.added_longitudinal = require<std::string>(j, "added_longitudinal", where);
    plan.added_transient = optional_field<std::string>(j, "added_transient", where);
    plan.narrative = field_or<std::string>(j, "narrative", where, "");
    return plan;
}

inline json to_json(const ProfileShift& s) {
    json j = to_json(s.plan);
    j["shift_point"] = s.shift_point;
    return j;
}

inline ProfileShift profile_shift_from_json(const json& j, std::string_view where) {
    return {shift_plan_from_json(j, where), require<int>(j, "shift_point", where)};
}

inline json to_json(const MemorySeed& m) {
    return {{"type", to_string(m.kind)}, {"fact", m.fact}, {"probing_question", m.probing_question}, {"answer", m.answer}};
}

inline MemorySeed memory_seed_from_json(const json& j, std::string_view where) {
    MemorySeed m;
    const auto type = require<std::string>(j, "type", where);
    auto kind = parse_reference_kind(type);
    if (!kind) throw ValidationError(std::string(where) + ": unknown memory type '" + type + "'");
    m.kind = *kind;
    m.fact = require<std::string>(j, "fact", where);
    m.probing_question = field_or<std::string>(j, "probing_question", where, "");
    m.answer = field_or<std::string>(j, "answer", where, "");
    return m;
}

inline json to_json(const SkeletonEvent& e) {
    json mem = json::array();
    for (const auto& m : e.gt_memory) mem.push_back(to_json(m));
    return {{"event_id", e.event_id}, {"title", e.title}, {"description", e.description}, {"gt_memory", mem}};
}

inline SkeletonEvent skeleton_event_from_json(const json& j, std::string_view where) {
    SkeletonEvent e;
    e.event_id = require<std::string>(j, "event_id", where);
    const std::string w = std::string(where) + "[" + e.event_id + "]";
    e.title = field_or<std::string>(j, "title", w, "");
    e.description = field_or<std::string>(j, "description", w, "");
    if (auto it = j.find("gt_memory"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw ValidationError(w + ".gt_memory must be an array");
        for (const auto& m : *it) e.gt_memory.push_back(memory_seed_from_json(m, w + ".gt_memory"));
    }
    return e;
}

inline json to_json(const DomainSkeleton& d) {
    json projects = json::array();
    for (const auto& p : d.projects) {
        json events = json::array();
        for (const auto& e : p.events) events.push_back(to_json(e));
        projects.push_back({{"project_id", p.project_id}, {"title", p.title}, {"events", events}});
    }
    json events = json::array();
    for (const auto& e : d.events) events.push_back(to_json(e));
    return {{"domain", d.domain},   {"memory_required", d.memory_required}, {"phase", d.phase},
            {"projects", projects}, {"events", events}};
}

inline DomainSkeleton domain_skeleton_from_json(const json& j, std::string_view where) {
    DomainSkeleton d;
    d.domain = require<std::string>(j, "domain", where);
    const std::string w = std::string(where) + "[" + d.domain + "]";
    d.memory_required = require<bool>(j, "memory_required", w);
    d.phase = field_or<int>(j, "phase", w, 1);
    if (auto it = j.find("projects"); it != j.end() && !it->is_null()) {
        for (const auto& p : *it) {
            SkeletonProject proj;
            proj.project_id = require<std::string>(p, "project_id", w + ".projects");
            proj.title = field_or<std::string>(p, "title", w, "");
            for (const auto& e : require_array(p, "events", w + ".projects[" + proj.project_id + "]"))
                proj.events.push_back(skeleton_event_from_json(e, w + ".events"));
            d.projects.push_back(std::move(proj));
        }
    }
    if (auto it = j.find("events"); it != j.end() && !it->is_null()) {
        for (const auto& e : *it) d.events.push_back(skeleton_event_from_json(e, w + ".events"));
    }
    return d;
}

inline json to_json(const LifeSkeleton& s) {
    json domains = json::array();
    for (const auto& d : s.domains) domains.push_back(to_json(d));
    return {{"domains", domains}};
}

inline LifeSkeleton life_skeleton_from_json(const json& j, std::string_view where) {
    LifeSkeleton s;
    for (const auto& d : require_array(j, "domains", where)) s.domains.push_back(domain_skeleton_from_json(d, where));
    return s;
}

inline json to_json(const Session& s) {
    json turns = json::array();
    for (const auto& t : s.turns) turns.push_back({{"speaker", to_string(t.speaker)}, {"text", t.text}});
    json j = {{"session_id", s.session_id}, {"domain", s.domain}, {"month", s.month},
              {"event_id", s.event_id},     {"turns", turns},     {"gt_memory_required", s.gt_memory_required}};
    j["project"] = s.project ? json(*s.project) : json(nullptr);
    return j;
}

inline Session session_from_json(const json& j, std::string_view where) {
    Session s;
    s.session_id = require<int>(j, "session_id", where);
    const std::string w = std::string(where) + "[session " + std::to_string(s.session_id) + "]";
    s.domain = require<std::string>(j, "domain", w);
    s.month = require<int>(j, "month", w);
    s.event_id = field_or<std::string>(j, "event_id", w, "");
    s.gt_memory_required = require<bool>(j, "gt_memory_required", w);
    s.project = optional_field<std::string>(j, "project", w);
    for (const auto& t : require_array(j, "turns", w)) {
        const auto speaker = require<std::string>(t, "speaker", w + ".turns");
        Turn turn;
        if (speaker == "user") turn.speaker = Speaker::user;
        else if (speaker == "agent" || speaker == "assistant") turn.speaker = Speaker::agent;
        else throw ValidationError(w + ": unknown speaker '" + speaker + "'");
        turn.text = require<std::string>(t, "text", w + ".turns");
        s.turns.push_back(std::move(turn));
    }
    return s;
}

inline json to_json(const ReferenceMemory& r) {
    json j = {{"id", r.id}, {"type", to_string(r.kind)}, {"fact", r.fact}, {"t_start", r.t_start}};
    if (r.probing_question) j["probing_question"] = *r.probing_question;
    if (r.answer) j["answer"] = *r.answer;
    if (r.t_target) j["t_target"] = *r.t_target;
    if (r.project) j["project"] = *r.project;
    if (r.superseded_by) j["superseded_by"] = *r.superseded_by;
    return j;
}

inline ReferenceMemory reference_from_json(const json& j, std::string_view where) {
    ReferenceMemory r;
    r.id = require<std::string>(j, "id", where);
    const std::string w = std::string(where) + "[" + r.id + "]";
    const auto type = require<std::string>(j, "type", w);
    auto kind = parse_reference_kind(type);
    if (!kind) throw ValidationError(w + ": unknown reference type '" + type + "'");
    r.kind = *kind;
    r.fact = require<std::string>(j, "fact", w);
    r.probing_question = optional_field<std::string>(j, "probing_question", w);
    r.answer = optional_field<std::string>(j, "answer", w);
    r.t_start = require<int>(j, "t_start", w);
    r.t_target = optional_field<int>(j, "t_target", w);
    r.project = optional_field<std::string>(j, "project", w);
    r.superseded_by = optional_field<std::string>(j, "superseded_by", w);
    return r;
}

inline json to_json(const UserRecord& u) {
    json timeline = json::array();
    for (const auto& s : u.timeline) timeline.push_back(to_json(s));
    json refs = json::array();
    for (const auto& r : u.references) refs.push_back(to_json(r));
    json j = {{"persona", to_json(u.persona)},
              {"profile", to_json(u.profile)},
              {"skeleton", to_json(u.skeleton)},
              {"timeline", timeline},
              {"references", refs}};
    if (u.shift) j["shift"] = to_json(*u.shift);
    return j;
}

inline UserRecord user_from_json(const json& j, std::string_view where) {
    UserRecord u;
    if (!j.contains("persona")) throw ValidationError("missing field '" + std::string(where) + ".persona'");
    u.persona = persona_from_json(j.at("persona"), std::string(where) + ".persona");
    const std::string w = "user " + u.persona.id;
    if (!j.contains("profile")) throw ValidationError(w + ": missing field 'profile'");
    u.profile = profile_from_json(j.at("profile"), w + ".profile");
    if (u.profile.persona.empty()) u.profile.persona = u.persona.id;
    if (auto it = j.find("shift"); it != j.end() && !it->is_null()) u.shift = profile_shift_from_json(*it, w + ".shift");
    if (auto it = j.find("skeleton"); it != j.end() && !it->is_null()) u.skeleton = life_skeleton_from_json(*it, w + ".skeleton");
    for (const auto& s : require_array(j, "timeline", w)) u.timeline.push_back(session_from_json(s, w + ".timeline"));
    for (const auto& r : require_array(j, "references", w)) u.references.push_back(reference_from_json(r, w + ".references"));
    return u;
}

inline json to_json(const BenchmarkDataset& ds) {
    json users = json::array();
    for (const auto& u : ds.users) users.push_back(to_json(u));
    return {{"variant", to_string(ds.variant)}, {"users", users}};
}

inline BenchmarkDataset dataset_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("dataset: top level must be an object");
    BenchmarkDataset ds;
    const auto variant = require<std::string>(j, "variant", "dataset");
    if (variant == "static") ds.variant = Variant::static_;
    else if (variant == "dynamic") ds.variant = Variant::dynamic;
    else throw ValidationError("dataset: unknown variant '" + variant + "'");
    std::size_t i = 0;
    for (const auto& u : require_array(j, "users", "dataset"))
        ds.users.push_back(user_from_json(u, "dataset.users[" + std::to_string(i++) + "]"));
    return ds;
}

// ---------------------------------------------------------------------------
// Validation: throws ValidationError naming the first violated invariant and
// the offending id.
// ---------------------------------------------------------------------------

namespace detail {

inline void fail(const std::string& who, const std::string& what) { throw ValidationError(who + ": " + what); }

inline void validate_profile(const UserRecord& u, const DomainPool& pool) {
    const std::string who = "user " + u.persona.id;
    const AgentUseProfile& p = u.profile;
    if (p.persona != u.persona.id) fail(who, "profile.persona does not match persona id");
    for (const auto& [name, use] : p.entries) {
        if (!pool.contains(name)) fail(who, "domain '" + name + "' is not in the domain pool");
        if (!use.active && (use.frequency || use.memory_required))
            fail(who, "inactive domain '" + name + "' must not carry frequency or memory_required");
        if (use.active && (!use.frequency || !use.memory_required))
            fail(who, "active domain '" + name + "' needs frequency and memory_required");
    }
    for (const auto& d : p.selected) {
        const DomainUse* use = p.find(d);
        if (!use || !use->active) fail(who, "selected domain '" + d + "' is not in the active pool");
    }
    const auto n1 = static_cast<long>(p.selected_with_memory(true).size());
    const auto n0 = static_cast<long>(p.selected_with_memory(false).size());
    if (std::labs(n1 - n0) > 1) fail(who, "selected domains are not balanced between memory-required and transient");
}

inline void validate_shift(const UserRecord& u) {
    const std::string who = "user " + u.persona.id;
    const ShiftPlan& plan = u.shift->plan;
    const auto mem = u.profile.selected_with_memory(true);
    if (std::find(mem.begin(), mem.end(), plan.demoted) == mem.end())
        fail(who, "demoted domain '" + plan.demoted + "' is not a selected memory-required domain");
    const auto unused = u.profile.unused_active();
    auto in_unused = [&](const std::string& d) { return std::find(unused.begin(), unused.end(), d) != unused.end(); };
    if (!in_unused(plan.added_longitudinal))
        fail(who, "added longitudinal domain '" + plan.added_longitudinal + "' is not in the unused active pool");
    if (plan.added_transient) {
        if (!in_unused(*plan.added_transient))
            fail(who, "added transient domain '" + *plan.added_transient + "' is not in the unused active pool");
        if (*plan.added_transient == plan.added_longitudinal) fail(who, "added domains must differ");
    }
    if (u.shift->shift_point < 2 || u.shift->shift_point > u.last_session())
        fail(who, "shift_point " + std::to_string(u.shift->shift_point) + " outside the timeline");
}

inline void validate_skeleton(const UserRecord& u, const DomainPool& pool) {
    const std::string who = "user " + u.persona.id;
    std::unordered_set<std::string> event_ids;
    auto note_event = [&](const SkeletonEvent& e) {
        if (!event_ids.insert(e.event_id).second) fail(who, "duplicate skeleton event_id '" + e.event_id + "'");
    };
    for (const auto& d : u.skeleton.domains) {
        if (!pool.contains(d.domain)) fail(who, "skeleton domain '" + d.domain + "' is not in the domain pool");
        const AgentUseProfile governing =
            (d.phase >= 2 && u.shift) ? apply_shift(u.profile, u.shift->plan) : u.profile;
        const DomainUse* use = governing.find(d.domain);
        if (!use || !use->active || !use->memory_required)
            fail(who, "skeleton domain '" + d.domain + "' is not active in the profile");
        if (*use->memory_required != d.memory_required)
            fail(who, "skeleton domain '" + d.domain + "' disagrees with the profile's memory_required");
        if (d.memory_required) {
            if (d.projects.empty()) fail(who, "memory-required domain '" + d.domain + "' has no projects");
            if (!d.events.empty()) fail(who, "memory-required domain '" + d.domain + "' has loose events");
            if (!synthgen::counts_within_scale(d, *use->frequency))
                fail(who, "domain '" + d.domain + "' violates the frequency scaling table");
            for (const auto& p : d.projects)
                for (const auto& e : p.events) note_event(e);
        } else {
            if (!d.projects.empty()) fail(who, "transient domain '" + d.domain + "' has projects");
            for (const auto& e : d.events) {
                if (!e.gt_memory.empty()) fail(who, "transient event '" + e.event_id + "' carries reference memories");
                note_event(e);
            }
        }
    }
}

inline void validate_timeline(const UserRecord& u, const DomainPool& pool) {
    const std::string who = "user " + u.persona.id;
    if (u.timeline.empty()) fail(who, "empty timeline");
    int prev_month = 0;
    for (std::size_t i = 0; i < u.timeline.size(); ++i) {
        const Session& s = u.timeline[i];
        const std::string sid = "session " + std::to_string(s.session_id);
        if (s.session_id != static_cast<int>(i) + 1) fail(who, "non-sequential session_id at " + sid);
        if (s.month < 1) fail(who, sid + " has month < 1");
        if (s.month < prev_month) fail(who, sid + " month decreases along the timeline");
        prev_month = s.month;
        if (!pool.contains(s.domain)) fail(who, sid + " domain '" + s.domain + "' is not in the domain pool");
        if (s.turns.empty()) fail(who, sid + " has no turns");
        for (std::size_t t = 0; t < s.turns.size(); ++t) {
            const Speaker expected = (t % 2 == 0) ? Speaker::user : Speaker::agent;
            if (s.turns[t].speaker != expected) fail(who, sid + " turns do not alternate starting with user");
        }
        bool expected_label = false;
        try {
            expected_label = memory_required_at(u.profile, u.shift, s.domain, s.session_id);
        } catch (const ValidationError& e) {
            fail(who, sid + ": " + e.what());
        }
        if (expected_label != s.gt_memory_required)
            fail(who, sid + " gt_memory_required disagrees with the profile");
    }
}

inline void validate_references(const UserRecord& u) {
    const std::string who = "user " + u.persona.id;
    const int last = u.last_session();
    std::unordered_set<std::string> ids;
    for (const auto& r : u.references)
        if (!ids.insert(r.id).second) fail(who, "duplicate reference id '" + r.id + "'");
    for (const auto& r : u.references) {
        const std::string rid = "reference " + r.id;
        if (r.id.empty()) fail(who, "reference with empty id");
        if (text::trim(r.fact).empty()) fail(who, rid + " has an empty fact");
        if (r.kind == ReferenceKind::ongoing_state && !r.project) fail(who, rid + " is ongoing_state but has no project");
        if (r.t_start < 1 || r.t_start > last) fail(who, rid + " t_start does not index an existing session");
        if (r.t_target && (*r.t_target < r.t_start || *r.t_target > last))
            fail(who, rid + " t_target outside [t_start, last session]");
        if (r.superseded_by && !ids.contains(*r.superseded_by))
            fail(who, rid + " superseded_by unknown reference '" + *r.superseded_by + "'");
    }
}

}  // namespace detail

inline void validate_dataset(const BenchmarkDataset& ds, const DomainPool& pool = DomainPool()) {
    std::unordered_set<std::string> persona_ids;
    for (const auto& u : ds.users) {
        if (u.persona.id.empty()) throw ValidationError("persona with empty id");
        if (!persona_ids.insert(u.persona.id).second) throw ValidationError("duplicate persona id '" + u.persona.id + "'");
        if (text::trim(u.persona.description).empty())
            throw ValidationError("user " + u.persona.id + ": empty persona description");
        if (ds.variant == Variant::dynamic && !u.shift)
            throw ValidationError("user " + u.persona.id + ": dynamic dataset user without a profile shift");
        if (ds.variant == Variant::static_ && u.shift)
            throw ValidationError("user " + u.persona.id + ": static dataset user carries a profile shift");
        detail::validate_profile(u, pool);
        detail::validate_timeline(u, pool);
        if (u.shift) detail::validate_shift(u);
        detail::validate_skeleton(u, pool);
        detail::validate_references(u);
    }
}

inline BenchmarkDataset parse_dataset(const std::string& content, const DomainPool& pool = DomainPool()) {
    BenchmarkDataset ds = dataset_from_json(parse_json_text(content, "dataset"));
    validate_dataset(ds, pool);
    return ds;
}

inline BenchmarkDataset load_dataset(const std::string& path, const DomainPool& pool = DomainPool()) {
    return parse_dataset(read_file(path), pool);
}

inline std::string serialize_dataset(const BenchmarkDataset& ds) { return to_json(ds).dump(2) + "\n"; }

inline void save_dataset(const std::string& path, const BenchmarkDataset& ds) {
    write_text_file(path, serialize_dataset(ds));
}

}  // namespace permem
