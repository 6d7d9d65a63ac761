#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "permem/model.hpp"
#include "permem/synthgen/scaling.hpp"

namespace permem::synthgen {

struct ScheduledEvent {
    SkeletonEvent event;
    int month = 1;
};

struct TransientSchedule {
    std::vector<ScheduledEvent> scheduled;
    int dropped = 0;
};

// Event i lands at start_month + floor(i * w_f / 4); anything past
// total_months is dropped and counted.
inline TransientSchedule place_transient_events(const std::vector<SkeletonEvent>& events, Frequency f,
                                                int total_months, int start_month = 1) {
    TransientSchedule out;
    const int w = interval_weeks(f);
    for (std::size_t i = 0; i < events.size(); ++i) {
        const int month = start_month + static_cast<int>(i) * w / kWeeksPerMonth;
        if (month > total_months) {
            ++out.dropped;
            continue;
        }
        out.scheduled.push_back({events[i], month});
    }
    return out;
}

// One row of an arranged timeline, before dialogue exists.
struct TimelineSlot {
    int session_id = 1;
    int month = 1;
    std::string domain;
    std::optional<std::string> project;
    std::string event_id;

    bool operator==(const TimelineSlot&) const = default;
};

inline std::vector<TimelineSlot> slots_of(const std::vector<Session>& timeline) {
    std::vector<TimelineSlot> out;
    for (const auto& s : timeline) out.push_back({s.session_id, s.month, s.domain, s.project, s.event_id});
    return out;
}

// Lists every violated timeline rule; an empty result means valid. Checks:
// each skeleton event exactly once under its own domain, sequential session
// ids from `first_session_id`, months within [first_month, total_months] and
// non-decreasing, and project (then event) order kept within each domain.
inline std::vector<std::string> validate_timeline(const std::vector<DomainSkeleton>& skeletons,
                                                  const std::vector<TimelineSlot>& slots, int total_months,
                                                  int first_session_id = 1, int first_month = 1) {
    struct EventInfo {
        std::string domain;
        std::optional<std::string> project;
        std::size_t project_index = 0;
        std::size_t event_index = 0;
    };
    std::map<std::string, EventInfo> events;
    std::vector<std::string> v;
    for (const auto& sk : skeletons) {
        for (std::size_t p = 0; p < sk.projects.size(); ++p)
            for (std::size_t e = 0; e < sk.projects[p].events.size(); ++e)
                if (!events.emplace(sk.projects[p].events[e].event_id,
                                    EventInfo{sk.domain, sk.projects[p].project_id, p, e})
                         .second)
                    v.push_back("skeleton event id " + sk.projects[p].events[e].event_id + " is not unique");
        for (std::size_t e = 0; e < sk.events.size(); ++e)
            if (!events.emplace(sk.events[e].event_id, EventInfo{sk.domain, std::nullopt, 0, e}).second)
                v.push_back("skeleton event id " + sk.events[e].event_id + " is not unique");
    }

    std::map<std::string, int> seen;
    // (domain, project index, event index) of the latest project event per domain
    std::map<std::string, std::pair<std::size_t, std::size_t>> last_pos;
    int prev_month = first_month;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const auto& s = slots[i];
        const std::string where = "session " + std::to_string(s.session_id);
        if (s.session_id != first_session_id + static_cast<int>(i))
            v.push_back(where + ": non-sequential session_id (expected " +
                        std::to_string(first_session_id + static_cast<int>(i)) + ")");
        if (s.month < first_month || s.month > total_months)
            v.push_back(where + ": month " + std::to_string(s.month) + " outside [" + std::to_string(first_month) +
                        ", " + std::to_string(total_months) + "]");
        if (s.month < prev_month) v.push_back(where + ": month decreases");
        prev_month = std::max(prev_month, s.month);

        if (++seen[s.event_id] == 2) v.push_back("event " + s.event_id + " appears twice");
        auto it = events.find(s.event_id);
        if (it == events.end()) {
            v.push_back(where + ": unknown event " + s.event_id);
            continue;
        }
        const auto& info = it->second;
        if (info.domain != s.domain) v.push_back(where + ": event " + s.event_id + " belongs to " + info.domain);
        if (s.project != info.project)
            v.push_back(where + ": event " + s.event_id + " listed under the wrong project");
        if (!info.project) continue;
        const std::pair<std::size_t, std::size_t> pos{info.project_index, info.event_index};
        auto lp = last_pos.find(info.domain);
        if (lp != last_pos.end() && pos < lp->second) {
            if (pos.first < lp->second.first)
                v.push_back(where + ": project order violated in " + info.domain + " (event " + s.event_id + ")");
            else
                v.push_back(where + ": event order violated in project " + *info.project);
        }
        if (lp == last_pos.end() || lp->second < pos) last_pos[info.domain] = pos;
    }
    for (const auto& [id, info] : events)
        if (!seen.contains(id)) v.push_back("event " + id + " is missing from the timeline");
    return v;
}

}  // namespace permem::synthgen
