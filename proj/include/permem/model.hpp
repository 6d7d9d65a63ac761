#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "permem/error.hpp"

namespace permem {

enum class Frequency { high, medium, low };

inline std::string_view to_string(Frequency f) {
    switch (f) {
        case Frequency::high: return "high";
        case Frequency::medium: return "medium";
        case Frequency::low: return "low";
    }
    return "low";
}

inline std::optional<Frequency> parse_frequency(std::string_view s) {
    if (s == "high") return Frequency::high;
    if (s == "medium" || s == "mid") return Frequency::medium;
    if (s == "low") return Frequency::low;
    return std::nullopt;
}

struct Persona {
    std::string id;
    std::string description;
    std::map<std::string, std::string> attributes;

    bool operator==(const Persona&) const = default;
};

// One (persona, domain) triplet. frequency and memory_required are present
// exactly when the domain is active.
struct DomainUse {
    bool active = false;
    std::optional<Frequency> frequency;
    std::optional<bool> memory_required;
    std::string reason;

    bool operator==(const DomainUse&) const = default;
};

struct AgentUseProfile {
    std::string persona;
    std::map<std::string, DomainUse> entries;
    std::set<std::string> selected;

    bool operator==(const AgentUseProfile&) const = default;

    const DomainUse* find(std::string_view domain) const {
        auto it = entries.find(std::string(domain));
        return it == entries.end() ? nullptr : &it->second;
    }

    std::vector<std::string> active_pool() const {
        std::vector<std::string> out;
        for (const auto& [name, use] : entries)
            if (use.active) out.push_back(name);
        return out;
    }

    // Selected domains with memory_required == value, sorted by name.
    std::vector<std::string> selected_with_memory(bool value) const {
        std::vector<std::string> out;
        for (const auto& d : selected) {
            const DomainUse* use = find(d);
            if (use && use->memory_required && *use->memory_required == value) out.push_back(d);
        }
        return out;
    }

    // Active domains not in the selected set, sorted by name.
    std::vector<std::string> unused_active() const {
        std::vector<std::string> out;
        for (const auto& [name, use] : entries)
            if (use.active && !selected.contains(name)) out.push_back(name);
        return out;
    }
};

enum class ReferenceKind { user_profile, ongoing_state };

inline std::string_view to_string(ReferenceKind k) {
    return k == ReferenceKind::user_profile ? "user_profile" : "ongoing_state";
}

inline std::optional<ReferenceKind> parse_reference_kind(std::string_view s) {
    if (s == "user_profile") return ReferenceKind::user_profile;
    if (s == "ongoing_state") return ReferenceKind::ongoing_state;
    return std::nullopt;
}

struct ReferenceMemory {
    std::string id;
    ReferenceKind kind = ReferenceKind::user_profile;
    std::string fact;
    std::optional<std::string> probing_question;
    std::optional<std::string> answer;
    int t_start = 1;
    std::optional<int> t_target;
    std::optional<std::string> project;
    // Id of a later reference that replaces this fact (user_profile only).
    std::optional<std::string> superseded_by;

    bool operator==(const ReferenceMemory&) const = default;

    int target() const {
        if (!t_target) throw ValidationError("reference " + id + ": retention horizon not computed");
        return *t_target;
    }
};

enum class Speaker { user, agent };

inline std::string_view to_string(Speaker s) { return s == Speaker::user ? "user" : "agent"; }

struct Turn {
    Speaker speaker = Speaker::user;
    std::string text;

    bool operator==(const Turn&) const = default;
};

struct Session {
    int session_id = 1;
    std::string domain;
    int month = 1;
    std::vector<Turn> turns;
    bool gt_memory_required = false;
    std::optional<std::string> project;
    std::string event_id;

    bool operator==(const Session&) const = default;

    std::string user_text() const {
        std::string out;
        for (const auto& t : turns) {
            if (t.speaker != Speaker::user) continue;
            if (!out.empty()) out += '\n';
            out += t.text;
        }
        return out;
    }
};

// "User: ..." / "Agent: ..." lines, the transcript form shown to models.
inline std::string format_dialogue(std::span<const Turn> turns) {
    std::string out;
    for (const auto& t : turns) {
        if (!out.empty()) out += '\n';
        out += t.speaker == Speaker::user ? "User: " : "Agent: ";
        out += t.text;
    }
    return out;
}

struct MemorySeed {
    ReferenceKind kind = ReferenceKind::user_profile;
    std::string fact;
    std::string probing_question;
    std::string answer;

    bool operator==(const MemorySeed&) const = default;
};

struct SkeletonEvent {
    std::string event_id;
    std::string title;
    std::string description;
    std::vector<MemorySeed> gt_memory;

    bool operator==(const SkeletonEvent&) const = default;
};

struct SkeletonProject {
    std::string project_id;
    std::string title;
    std::vector<SkeletonEvent> events;

    bool operator==(const SkeletonProject&) const = default;
};

// Memory-required domains carry projects; transient domains carry a flat
// event list. Dynamic datasets hold a second entry per continuing domain with
// phase = 2.
struct DomainSkeleton {
    std::string domain;
    bool memory_required = false;
    int phase = 1;
    std::vector<SkeletonProject> projects;
    std::vector<SkeletonEvent> events;

    bool operator==(const DomainSkeleton&) const = default;

    std::size_t event_count() const {
        std::size_t n = events.size();
        for (const auto& p : projects) n += p.events.size();
        return n;
    }
};

struct LifeSkeleton {
    std::vector<DomainSkeleton> domains;

    bool operator==(const LifeSkeleton&) const = default;
};

struct ShiftPlan {
    std::string demoted;
    std::string added_longitudinal;
    std::optional<std::string> added_transient;
    std::string narrative;

    bool operator==(const ShiftPlan&) const = default;
};

struct ProfileShift {
    ShiftPlan plan;
    // First session id governed by the shifted profile.
    int shift_point = 1;

    bool operator==(const ProfileShift&) const = default;
};

// The profile in force after a shift: the demoted domain stops requiring
// memory, added domains join the selected set.
inline AgentUseProfile apply_shift(const AgentUseProfile& profile, const ShiftPlan& plan) {
    AgentUseProfile out = profile;
    auto require_active = [&](const std::string& d) -> DomainUse& {
        auto it = out.entries.find(d);
        if (it == out.entries.end() || !it->second.active)
            throw ValidationError("shift references inactive domain '" + d + "'");
        return it->second;
    };
    require_active(plan.demoted).memory_required = false;
    require_active(plan.added_longitudinal).memory_required = true;
    out.selected.insert(plan.added_longitudinal);
    if (plan.added_transient) {
        require_active(*plan.added_transient).memory_required = false;
        out.selected.insert(*plan.added_transient);
    }
    return out;
}

struct UserRecord {
    Persona persona;
    AgentUseProfile profile;
    std::optional<ProfileShift> shift;
    LifeSkeleton skeleton;
    std::vector<Session> timeline;
    std::vector<ReferenceMemory> references;

    bool operator==(const UserRecord&) const = default;

    int last_session() const { return timeline.empty() ? 0 : timeline.back().session_id; }

    // Profile governing the given session id.
    AgentUseProfile profile_at(int session_id) const {
        if (shift && session_id >= shift->shift_point) return apply_shift(profile, shift->plan);
        return profile;
    }
};

// Ground-truth memory necessity of `domain` at `session_id`. Throws when the
// domain is not part of the profile in force.
inline bool memory_required_at(const AgentUseProfile& profile, const std::optional<ProfileShift>& shift,
                               std::string_view domain, int session_id) {
    const AgentUseProfile effective =
        (shift && session_id >= shift->shift_point) ? apply_shift(profile, shift->plan) : profile;
    const DomainUse* use = effective.find(domain);
    if (!use || !use->active || !use->memory_required || !effective.selected.contains(std::string(domain)))
        throw ValidationError("domain '" + std::string(domain) + "' is not in the active profile of " + profile.persona);
    return *use->memory_required;
}

enum class Variant { static_, dynamic };

inline std::string_view to_string(Variant v) { return v == Variant::static_ ? "static" : "dynamic"; }

struct BenchmarkDataset {
    Variant variant = Variant::static_;
    std::vector<UserRecord> users;

    bool operator==(const BenchmarkDataset&) const = default;
};

}  // namespace permem
