#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <unordered_map>

#include "permem/model.hpp"

namespace permem {

// Retention horizons:
//   ongoing_state -> last session of its project
//   user_profile  -> last session of the timeline, or the session before the
//                    superseding fact first appears
// Recomputed from scratch on every call, so the operation is idempotent.
inline void compute_retention_horizons(UserRecord& user) {
    const std::string who = "user " + user.persona.id;
    std::map<std::string, int> project_end;
    for (const auto& s : user.timeline)
        if (s.project) project_end[*s.project] = std::max(project_end[*s.project], s.session_id);

    std::unordered_map<std::string, const ReferenceMemory*> by_id;
    for (const auto& r : user.references) by_id[r.id] = &r;

    for (const auto& r : user.references) {
        std::set<std::string> seen{r.id};
        for (const ReferenceMemory* cur = &r; cur->superseded_by;) {
            auto it = by_id.find(*cur->superseded_by);
            if (it == by_id.end())
                throw ValidationError(who + ": reference " + cur->id + " superseded_by unknown reference '" +
                                      *cur->superseded_by + "'");
            if (!seen.insert(it->second->id).second)
                throw ValidationError(who + ": superseded_by cycle through reference " + r.id);
            cur = it->second;
        }
    }

    const int last = user.last_session();
    std::vector<int> targets;
    targets.reserve(user.references.size());
    for (const auto& r : user.references) {
        int target = last;
        if (r.kind == ReferenceKind::ongoing_state) {
            if (!r.project) throw ValidationError(who + ": reference " + r.id + " is ongoing_state but has no project");
            auto it = project_end.find(*r.project);
            if (it == project_end.end())
                throw ValidationError(who + ": reference " + r.id + " names unknown project '" + *r.project + "'");
            target = it->second;
        } else if (r.superseded_by) {
            target = by_id.at(*r.superseded_by)->t_start - 1;
        }
        if (target < r.t_start)
            throw ValidationError(who + ": reference " + r.id + " retention horizon ends before t_start");
        targets.push_back(target);
    }
    for (std::size_t i = 0; i < targets.size(); ++i) user.references[i].t_target = targets[i];
}

inline BenchmarkDataset compute_retention_horizons(BenchmarkDataset ds) {
    for (auto& u : ds.users) compute_retention_horizons(u);
    return ds;
}

}  // namespace permem
