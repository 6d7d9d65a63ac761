#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "permem/evaluation/jaccard.hpp"
#include "permem/evaluation/metrics.hpp"
#include "permem/evaluation/retention.hpp"
#include "permem/runner.hpp"

namespace permem {

struct PolicyEvaluation {
    std::string policy;
    std::vector<std::string> users;
    std::vector<UserRetention> retention;  // aligned with users
    std::vector<GatingMetrics> gating;     // aligned with users
    RetentionResult pooled;                // pooled over every user's references
    AveragedMetrics macro;
    GatingMetrics micro;
};

inline std::map<int, bool> ground_truth_labels(const UserRecord& u) {
    std::map<int, bool> out;
    for (const auto& s : u.timeline) out[s.session_id] = s.gt_memory_required;
    return out;
}

inline PolicyEvaluation evaluate_policy(const BenchmarkDataset& ds, const std::string& policy,
                                        const LoadedPolicyRun& run, const Embedder& embedder, PresenceJudge& judge,
                                        const RetentionConfig& cfg, std::size_t jobs = 1) {
    PolicyEvaluation ev;
    ev.policy = policy;
    const std::size_t n = ds.users.size();
    ev.retention.resize(n);
    ev.gating.resize(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        const auto& u = ds.users[i];
        try {
            auto snaps = run.snapshots.find(u.persona.id);
            if (snaps == run.snapshots.end()) throw ValidationError("no snapshots");
            ev.retention[i] = evaluate_user_retention(u.references, snaps->second, embedder, judge, cfg);
            auto dec = run.decisions.find(u.persona.id);
            if (dec == run.decisions.end()) throw ValidationError("no gate decisions in run log");
            ev.gating[i] = gating_metrics(dec->second, ground_truth_labels(u));
        } catch (Error& e) {
            e.add_context("policy " + policy + ", user " + u.persona.id);
            throw;
        }
    });
    for (const auto& u : ds.users) ev.users.push_back(u.persona.id);
    for (const auto& r : ev.retention) {
        ev.pooled.numerator += r.result.numerator;
        ev.pooled.denominator += r.result.denominator;
    }
    if (ev.pooled.denominator > 0) {
        ev.pooled.defined = true;
        ev.pooled.rr = std::clamp(ev.pooled.numerator / ev.pooled.denominator, 0.0, 1.0);
    }
    ev.macro = macro_average(ev.gating);
    ev.micro = micro_average(ev.gating);
    return ev;
}

inline json to_json(const PolicyEvaluation& ev) {
    json per_user = json::object();
    double sum = 0;
    std::size_t defined = 0;
    for (std::size_t i = 0; i < ev.users.size(); ++i) {
        const auto& r = ev.retention[i];
        std::size_t unevaluated = 0;
        for (const auto& x : r.result.references) unevaluated += x.unevaluated;
        per_user[ev.users[i]] = {{"rr", r.result.defined ? json(r.result.rr) : json("undefined")},
                                 {"numerator", r.result.numerator},
                                 {"denominator", r.result.denominator},
                                 {"references", r.result.references.size()},
                                 {"unevaluated_checkpoints", unevaluated},
                                 {"gating", to_json(ev.gating[i])}};
        if (!r.errors.empty()) per_user[ev.users[i]]["judge_errors"] = r.errors;
        if (r.result.defined) sum += r.result.rr, ++defined;
    }
    return {{"rr", ev.pooled.defined ? json(ev.pooled.rr) : json("undefined")},
            {"rr_user_mean", defined ? json(sum / static_cast<double>(defined)) : json("undefined")},
            {"gating_macro", to_json(ev.macro)},
            {"gating_micro", to_json(ev.micro)},
            {"users", per_user}};
}

inline std::string fmt_rate(const std::optional<double>& v) {
    if (!v) return "undef";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

inline std::string pad(std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
}

// Aligned plain-text rendering of a report produced by build_report.
inline std::string render_report_text(const json& report) {
    std::string out;
    const auto& pol = report.at("policies");
    auto num = [](const json& v) -> std::optional<double> {
        return v.is_number() ? std::optional<double>(v.get<double>()) : std::nullopt;
    };
    std::size_t w = 10;
    for (const auto& [name, _] : pol.items()) w = std::max(w, name.size() + 2);
    out += pad("policy", w) + pad("RR", 10) + pad("F1", 10) + pad("FNR", 10) + pad("FPR", 10) + pad("F1(micro)", 11) +
           pad("FNR(micro)", 11) + "FPR(micro)\n";
    for (const auto& [name, p] : pol.items()) {
        const auto& ma = p.at("gating_macro");
        const auto& mi = p.at("gating_micro");
        out += pad(name, w) + pad(fmt_rate(num(p.at("rr"))), 10) + pad(fmt_rate(num(ma.at("f1"))), 10) +
               pad(fmt_rate(num(ma.at("fnr"))), 10) + pad(fmt_rate(num(ma.at("fpr"))), 10) +
               pad(fmt_rate(num(mi.at("f1"))), 11) + pad(fmt_rate(num(mi.at("fnr"))), 11) +
               fmt_rate(num(mi.at("fpr"))) + "\n";
    }
    out += "\nper-user RR\n";
    std::vector<std::string> users;
    if (!pol.empty())
        for (const auto& [u, _] : pol.begin()->at("users").items()) users.push_back(u);
    std::size_t uw = 6;
    for (const auto& u : users) uw = std::max(uw, u.size() + 2);
    out += pad("user", uw);
    for (const auto& [name, _] : pol.items()) out += pad(name, w);
    out += "\n";
    for (const auto& u : users) {
        out += pad(u, uw);
        for (const auto& [name, p] : pol.items()) out += pad(fmt_rate(num(p.at("users").at(u).at("rr"))), w);
        out += "\n";
    }
    if (report.contains("jaccard")) {
        const auto& s = report.at("jaccard").at("summary");
        out += "\nprofile Jaccard (off-diagonal): min " + fmt_rate(num(s.at("min"))) + "  max " +
               fmt_rate(num(s.at("max"))) + "  avg " + fmt_rate(num(s.at("avg"))) + "\n";
    }
    return out;
}

inline json build_report(const BenchmarkDataset& ds, const std::vector<PolicyEvaluation>& evals,
                         const RetentionConfig& cfg, bool with_jaccard) {
    json policies = json::object();
    for (const auto& ev : evals) policies[ev.policy] = to_json(ev);
    json report = {{"dataset", {{"variant", std::string(to_string(ds.variant))}, {"users", ds.users.size()}}},
                   {"retention_config",
                    {{"checkpoints", cfg.checkpoints},
                     {"k_retrieve", cfg.k_retrieve},
                     {"judge", cfg.judge == JudgeKind::backend ? "backend" : "substring_oracle"}}},
                   {"policies", policies}};
    if (with_jaccard && ds.users.size() >= 2) {
        std::vector<AgentUseProfile> profiles;
        for (const auto& u : ds.users) profiles.push_back(u.profile);
        report["jaccard"] = to_json(profile_jaccard(profiles));
    }
    return report;
}

}  // namespace permem
