#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "permem/model.hpp"
#include "permem/rng.hpp"
#include "permem/synthgen/scaling.hpp"

namespace permem::synthgen {

namespace detail {

inline std::size_t weighted_pick(const AgentUseProfile& profile, const std::vector<std::string>& candidates,
                                 SeededRng& rng) {
    std::vector<std::uint64_t> w;
    w.reserve(candidates.size());
    for (const auto& d : candidates) {
        const DomainUse* use = profile.find(d);
        if (!use || !use->frequency) throw ValidationError("domain '" + d + "' has no frequency");
        w.push_back(shift_weight(*use->frequency));
    }
    return rng.weighted_index(w);
}

}  // namespace detail

// Rule-based profile shift. Draw order is fixed: demoted, added_longitudinal,
// the coin for added_transient, then added_transient itself.
inline ShiftPlan sample_shift(const AgentUseProfile& profile, SeededRng& rng) {
    const auto mem = profile.selected_with_memory(true);
    if (mem.empty()) throw ValidationError("sample_shift: profile " + profile.persona + " has no memory-required domain");
    auto unused = profile.unused_active();
    if (unused.empty()) throw ValidationError("sample_shift: profile " + profile.persona + " has no unused active domain");
    ShiftPlan plan;
    plan.demoted = mem[detail::weighted_pick(profile, mem, rng)];
    const std::size_t li = detail::weighted_pick(profile, unused, rng);
    plan.added_longitudinal = unused[li];
    unused.erase(unused.begin() + static_cast<std::ptrdiff_t>(li));
    if (!unused.empty() && rng.coin(0.5)) plan.added_transient = unused[detail::weighted_pick(profile, unused, rng)];
    return plan;
}

// Balanced selection of `count` active domains: memory-required and
// transient picks differ by at most one when both pools allow it. The odd
// pick goes to a side chosen by coin.
inline std::vector<std::string> sample_selected_domains(const AgentUseProfile& profile, std::size_t count,
                                                        SeededRng& rng) {
    std::vector<std::string> mem, trans;
    for (const auto& [name, use] : profile.entries) {
        if (!use.active || !use.memory_required || !use.frequency) continue;
        (*use.memory_required ? mem : trans).push_back(name);
    }
    if (mem.empty()) throw ValidationError("profile " + profile.persona + " has no memory-required active domain");
    if (mem.size() + trans.size() < count)
        throw ValidationError("profile " + profile.persona + " has fewer than " + std::to_string(count) +
                              " usable active domains");
    std::size_t n_mem = count / 2;
    std::size_t n_trans = count / 2;
    if (count % 2 == 1) (rng.coin(0.5) ? n_mem : n_trans) += 1;
    if (n_mem == 0) n_mem = 1, n_trans = count - 1;
    if (n_mem > mem.size()) n_trans += n_mem - mem.size(), n_mem = mem.size();
    if (n_trans > trans.size()) n_mem += n_trans - trans.size(), n_trans = trans.size();
    rng.partial_shuffle(mem, n_mem);
    rng.partial_shuffle(trans, n_trans);
    std::vector<std::string> out(mem.begin(), mem.begin() + static_cast<std::ptrdiff_t>(n_mem));
    out.insert(out.end(), trans.begin(), trans.begin() + static_cast<std::ptrdiff_t>(n_trans));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace permem::synthgen
