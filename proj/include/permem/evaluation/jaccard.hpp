#pragma once

#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "permem/json_util.hpp"
#include "permem/model.hpp"
#include "permem/stats.hpp"

namespace permem {

using ProfileFeature = std::pair<std::string, bool>;  // (domain, memory_required)

inline std::set<ProfileFeature> profile_features(const AgentUseProfile& p) {
    std::set<ProfileFeature> out;
    for (const auto& d : p.selected) {
        const DomainUse* use = p.find(d);
        if (!use || !use->memory_required)
            throw ValidationError("profile " + p.persona + ": selected domain '" + d + "' has no memory label");
        out.emplace(d, *use->memory_required);
    }
    return out;
}

// |A n B| / |A u B|; two empty sets count as identical.
inline double jaccard(const std::set<ProfileFeature>& a, const std::set<ProfileFeature>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& f : a) inter += b.contains(f);
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

struct JaccardAnalysis {
    std::vector<std::string> personas;
    std::vector<std::vector<double>> matrix;
    std::vector<std::pair<std::size_t, std::size_t>> empty_pairs;  // both profiles empty: similarity 1 by convention
    SummaryStat off_diagonal;
};

inline JaccardAnalysis profile_jaccard(std::span<const AgentUseProfile> profiles) {
    if (profiles.size() < 2) throw ValidationError("profile_jaccard needs at least 2 profiles");
    std::vector<std::set<ProfileFeature>> feats;
    JaccardAnalysis out;
    for (const auto& p : profiles) {
        feats.push_back(profile_features(p));
        out.personas.push_back(p.persona);
    }
    const std::size_t n = profiles.size();
    out.matrix.assign(n, std::vector<double>(n, 1.0));
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = jaccard(feats[i], feats[j]);
            out.matrix[i][j] = out.matrix[j][i] = s;
            values.push_back(s);
            if (feats[i].empty() && feats[j].empty()) out.empty_pairs.emplace_back(i, j);
        }
    out.off_diagonal = summarize(values);
    return out;
}

inline json to_json(const JaccardAnalysis& a) {
    json pairs = json::array();
    for (const auto& [i, j] : a.empty_pairs) pairs.push_back({a.personas[i], a.personas[j]});
    return {{"personas", a.personas},
            {"matrix", a.matrix},
            {"summary", to_json(a.off_diagonal)},
            {"empty_profile_pairs", pairs}};
}

}  // namespace permem
