#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "permem/permem.hpp"

namespace permem::testing {

inline Session make_session(int id, std::string domain, std::vector<std::string> user_lines, bool label = true) {
    Session s;
    s.session_id = id;
    s.domain = std::move(domain);
    s.month = 1 + (id - 1) / 4;
    s.gt_memory_required = label;
    for (auto& l : user_lines) {
        s.turns.push_back({Speaker::user, std::move(l)});
        s.turns.push_back({Speaker::agent, "ok"});
    }
    return s;
}

inline DomainUse active(Frequency f, bool memory, std::string reason = "uses it") {
    return {true, f, memory, std::move(reason)};
}

// Pool-wide profile: listed domains active, the rest inactive.
inline AgentUseProfile make_profile(const std::string& persona,
                                    const std::vector<std::pair<std::string, DomainUse>>& actives,
                                    std::vector<std::string> selected = {}) {
    AgentUseProfile p;
    p.persona = persona;
    for (const auto& d : default_domain_pool()) p.entries[d] = DomainUse{};
    for (const auto& [d, u] : actives) p.entries[d] = u;
    p.selected = {selected.begin(), selected.end()};
    return p;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("permem-test-" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string source_path(const std::string& rel) { return std::string(PERMEM_SOURCE_DIR) + "/" + rel; }

}  // namespace permem::testing
