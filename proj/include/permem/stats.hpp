#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "permem/json_util.hpp"
#include "permem/model.hpp"

namespace permem {

struct SummaryStat {
    double min = 0.0;
    double max = 0.0;
    double avg = 0.0;

    bool operator==(const SummaryStat&) const = default;
};

inline SummaryStat summarize(const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("cannot summarize an empty sample");
    SummaryStat s{values.front(), values.front(), 0.0};
    double sum = 0.0;
    for (double v : values) {
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
        sum += v;
    }
    s.avg = sum / static_cast<double>(values.size());
    return s;
}

// Min/max/avg across users. Characters per session stand in for token
// counts, which depend on a tokenizer.
struct StatsReport {
    std::size_t users = 0;
    SummaryStat sessions;
    SummaryStat timeline_months;
    SummaryStat reference_memories;
    SummaryStat chars_per_session;
};

inline StatsReport dataset_stats(const BenchmarkDataset& ds) {
    if (ds.users.empty()) throw ValidationError("dataset_stats: dataset has no users");
    std::vector<double> sessions, months, refs, chars;
    for (const auto& u : ds.users) {
        sessions.push_back(static_cast<double>(u.timeline.size()));
        months.push_back(u.timeline.empty() ? 0.0 : static_cast<double>(u.timeline.back().month));
        refs.push_back(static_cast<double>(u.references.size()));
        double total = 0.0;
        for (const auto& s : u.timeline)
            for (const auto& t : s.turns) total += static_cast<double>(t.text.size());
        chars.push_back(u.timeline.empty() ? 0.0 : total / static_cast<double>(u.timeline.size()));
    }
    return {ds.users.size(), summarize(sessions), summarize(months), summarize(refs), summarize(chars)};
}

inline json to_json(const SummaryStat& s) { return {{"min", s.min}, {"max", s.max}, {"avg", s.avg}}; }

inline json to_json(const StatsReport& r) {
    return {{"users", r.users},
            {"sessions", to_json(r.sessions)},
            {"timeline_months", to_json(r.timeline_months)},
            {"reference_memories", to_json(r.reference_memories)},
            {"chars_per_session", to_json(r.chars_per_session)}};
}

}  // namespace permem
