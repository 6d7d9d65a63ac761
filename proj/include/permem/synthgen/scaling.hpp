#pragma once

#include <cstdint>
#include <stdexcept>

#include "permem/model.hpp"

namespace permem::synthgen {

// Project/event counts for memory-required domains, keyed by frequency.
struct ProjectScale {
    int n_projects;
    int events_min;
    int events_max;
};

inline constexpr ProjectScale project_scale(Frequency f) {
    switch (f) {
        case Frequency::high: return {5, 3, 5};
        case Frequency::medium: return {3, 2, 4};
        case Frequency::low: return {2, 2, 3};
    }
    return {2, 2, 3};
}

// Inter-session interval of transient domains, in weeks.
inline constexpr int interval_weeks(Frequency f) {
    switch (f) {
        case Frequency::high: return 4;
        case Frequency::medium: return 8;
        case Frequency::low: return 12;
    }
    return 12;
}

// Sampling weight of a domain in profile-shift draws.
inline constexpr std::uint64_t shift_weight(Frequency f) {
    switch (f) {
        case Frequency::high: return 3;
        case Frequency::medium: return 2;
        case Frequency::low: return 1;
    }
    return 1;
}

inline constexpr int kWeeksPerMonth = 4;

// floor(T_total * 4 / w_f)
inline int transient_event_count(int total_months, Frequency f) {
    if (total_months < 1) throw std::invalid_argument("transient_event_count: total_months must be >= 1");
    return (total_months * kWeeksPerMonth) / interval_weeks(f);
}

inline bool counts_within_scale(const DomainSkeleton& sk, Frequency f) {
    const ProjectScale s = project_scale(f);
    if (static_cast<int>(sk.projects.size()) != s.n_projects) return false;
    for (const auto& p : sk.projects) {
        const int n = static_cast<int>(p.events.size());
        if (n < s.events_min || n > s.events_max) return false;
    }
    return true;
}

}  // namespace permem::synthgen
