#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "permem/error.hpp"
#include "permem/json_util.hpp"

namespace permem {

// Positive class = worth storing (memory_required = true).
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    bool operator==(const ConfusionCounts&) const = default;

    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }

    std::size_t total() const { return tp + fp + fn + tn; }
};

// Rates are nullopt when their denominator is zero.
struct GatingMetrics {
    ConfusionCounts counts;
    std::optional<double> f1;
    std::optional<double> fnr;
    std::optional<double> fpr;
};

inline std::optional<double> safe_ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

inline GatingMetrics metrics_from_counts(const ConfusionCounts& c) {
    return {c, safe_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn), safe_ratio(c.fn, c.fn + c.tp),
            safe_ratio(c.fp, c.fp + c.tn)};
}

inline ConfusionCounts confusion(const std::vector<bool>& predicted, const std::vector<bool>& actual) {
    if (predicted.size() != actual.size()) throw ValidationError("gating_metrics: decisions and labels differ in length");
    ConfusionCounts c;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] && actual[i]) ++c.tp;
        else if (predicted[i]) ++c.fp;
        else if (actual[i]) ++c.fn;
        else ++c.tn;
    }
    return c;
}

// Decisions and labels keyed by session_id; the key sets must match.
inline GatingMetrics gating_metrics(const std::map<int, bool>& decisions, const std::map<int, bool>& labels) {
    if (decisions.size() != labels.size())
        throw ValidationError("gating_metrics: " + std::to_string(decisions.size()) + " decisions vs " +
                              std::to_string(labels.size()) + " labels");
    ConfusionCounts c;
    for (auto d = decisions.begin(), l = labels.begin(); d != decisions.end(); ++d, ++l) {
        if (d->first != l->first)
            throw ValidationError("gating_metrics: misaligned session ids " + std::to_string(d->first) + " vs " +
                                  std::to_string(l->first));
        const bool pred = d->second, act = l->second;
        if (pred && act) ++c.tp;
        else if (pred) ++c.fp;
        else if (act) ++c.fn;
        else ++c.tn;
    }
    return metrics_from_counts(c);
}

struct AveragedMetrics {
    std::optional<double> f1;
    std::optional<double> fnr;
    std::optional<double> fpr;
    std::size_t f1_n = 0;  // users contributing to each macro average
    std::size_t fnr_n = 0;
    std::size_t fpr_n = 0;
};

// Mean over users, skipping undefined values.
inline AveragedMetrics macro_average(std::span<const GatingMetrics> per_user) {
    AveragedMetrics m;
    double f1 = 0, fnr = 0, fpr = 0;
    for (const auto& g : per_user) {
        if (g.f1) f1 += *g.f1, ++m.f1_n;
        if (g.fnr) fnr += *g.fnr, ++m.fnr_n;
        if (g.fpr) fpr += *g.fpr, ++m.fpr_n;
    }
    if (m.f1_n) m.f1 = f1 / static_cast<double>(m.f1_n);
    if (m.fnr_n) m.fnr = fnr / static_cast<double>(m.fnr_n);
    if (m.fpr_n) m.fpr = fpr / static_cast<double>(m.fpr_n);
    return m;
}

// Metrics of the pooled confusion matrix.
inline GatingMetrics micro_average(std::span<const GatingMetrics> per_user) {
    ConfusionCounts c;
    for (const auto& g : per_user) c += g.counts;
    return metrics_from_counts(c);
}

inline json rate_json(const std::optional<double>& v) { return v ? json(*v) : json("undefined"); }

inline json to_json(const ConfusionCounts& c) { return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}}; }

inline json to_json(const GatingMetrics& m) {
    return {{"f1", rate_json(m.f1)}, {"fnr", rate_json(m.fnr)}, {"fpr", rate_json(m.fpr)}, {"counts", to_json(m.counts)}};
}

inline json to_json(const AveragedMetrics& m) {
    return {{"f1", rate_json(m.f1)},
            {"fnr", rate_json(m.fnr)},
            {"fpr", rate_json(m.fpr)},
            {"users_counted", {{"f1", m.f1_n}, {"fnr", m.fnr_n}, {"fpr", m.fpr_n}}}};
}

}  // namespace permem
