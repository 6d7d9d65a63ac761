#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "permem/backend/config.hpp"
#include "permem/backend/factory.hpp"
#include "permem/dataset_io.hpp"
#include "permem/evaluation/report.hpp"
#include "permem/prompts.hpp"
#include "permem/runner.hpp"
#include "permem/synthgen/pipeline.hpp"

namespace permem::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kBackend = 2, kInternal = 3 };

struct CommonOptions {
    std::string out;
    std::string backend_config;  // empty: offline mock without rules
    std::string prompts_dir;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

struct GenerateOptions {
    CommonOptions common;
    std::string personas;
    std::string variant = "static";
    std::size_t selected = 6;
    int max_month = 24;
    int min_turns = 6;
    int max_turns = 20;
    bool verify_profile = false;
};

struct RunOptions {
    CommonOptions common;
    std::string dataset;
    std::vector<std::string> policies;
    std::size_t budget = 200;
    std::string granularity = "session";
    std::string extractor = "backend";
    std::size_t checkpoints = 20;
    std::size_t window = 5;
    std::size_t update_interval = 5;
    std::size_t max_chars = 8000;
};

struct EvaluateOptions {
    CommonOptions common;
    std::string dataset;
    std::string run_dir;  // defaults to --out
    std::vector<std::string> policies;  // defaults to those in the run manifest
    std::string judge = "substring";
    std::optional<std::size_t> checkpoints;  // defaults to the run's value
    std::size_t k_retrieve = 10;
    bool jaccard = false;
};

struct ReportOptions {
    std::string report;  // report.json, or a directory containing it
};

// "a,b" and repeated flags both become {"a","b"}; duplicates are removed
// keeping first occurrence.
inline std::vector<std::string> split_policies(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    for (const auto& r : raw) {
        std::size_t start = 0;
        while (start <= r.size()) {
            const auto comma = std::min(r.find(',', start), r.size());
            const std::string p(text::trim(std::string_view(r).substr(start, comma - start)));
            if (!p.empty() && std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
            start = comma + 1;
        }
    }
    return out;
}

namespace detail {

inline BackendConfig backend_config(const CommonOptions& c) {
    if (c.backend_config.empty()) return backend_config_from_json(json{{"kind", "mock"}});
    return load_backend_config(c.backend_config);
}

inline PromptSet prompt_set(const CommonOptions& c) {
    PromptSet p;
    if (!c.prompts_dir.empty()) p.load_overrides(c.prompts_dir);
    return p;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string file_digest(const std::string& path) { return hex64(text::fnv1a64(read_file(path))); }

inline void prepare_out(const std::string& out) {
    if (out.empty()) throw ConfigError("--out is required");
    std::filesystem::create_directories(out);
}

// Manifest content is a pure function of the inputs (no timestamps) so
// repeated runs produce identical files.
inline void write_manifest(const std::string& out, const std::string& command, json params,
                           const std::vector<std::string>& files) {
    json digests = json::object();
    for (const auto& f : files) digests[f] = file_digest((std::filesystem::path(out) / f).string());
    write_json_file((std::filesystem::path(out) / "manifest.json").string(),
                    {{"command", command}, {"parameters", std::move(params)}, {"files", digests}});
}

inline std::vector<std::string> validate_policies(const std::vector<std::string>& policies) {
    if (policies.empty()) throw ConfigError("at least one --policy is required");
    for (const auto& p : policies)
        if (std::find(policy_names().begin(), policy_names().end(), p) == policy_names().end())
            throw ConfigError("unknown policy '" + p + "' (expected universal, oracle, greedy, context, structure)");
    return policies;
}

}  // namespace detail

inline int cmd_generate(const GenerateOptions& o) {
    if (o.variant != "static" && o.variant != "dynamic") throw ConfigError("--variant must be static or dynamic");
    if (o.selected < 1) throw ConfigError("--selected must be >= 1");
    if (o.max_month < 1) throw ConfigError("--max-month must be >= 1");
    const auto bcfg = detail::backend_config(o.common);
    auto backend = make_backend(bcfg);
    const auto prompts = detail::prompt_set(o.common);
    const auto personas = synthgen::load_personas(o.personas);
    detail::prepare_out(o.common.out);

    synthgen::GenerateConfig cfg;
    cfg.seed = o.common.seed;
    cfg.variant = o.variant == "dynamic" ? Variant::dynamic : Variant::static_;
    cfg.selected_count = o.selected;
    cfg.max_month = o.max_month;
    cfg.verify_profile = o.verify_profile;
    cfg.dialogue.min_turns = o.min_turns;
    cfg.dialogue.max_turns = o.max_turns;
    cfg.models = bcfg.models;
    cfg.jobs = o.common.jobs;
    const auto gen = synthgen::generate_dataset(*backend, prompts, DomainPool(), personas, cfg);

    const std::filesystem::path out(o.common.out);
    save_dataset((out / "dataset.json").string(), gen.dataset);
    std::string trace;
    for (const auto& t : gen.trace) trace += t.dump() + "\n";
    write_text_file((out / "generation_trace.jsonl").string(), trace);
    detail::write_manifest(o.common.out, "generate",
                           {{"personas", detail::file_digest(o.personas)},
                            {"seed", o.common.seed},
                            {"variant", o.variant},
                            {"selected", o.selected},
                            {"max_month", o.max_month},
                            {"min_turns", o.min_turns},
                            {"max_turns", o.max_turns},
                            {"verify_profile", o.verify_profile}},
                           {"dataset.json", "generation_trace.jsonl"});
    std::cout << "generated " << gen.dataset.users.size() << " users -> " << (out / "dataset.json").string() << "\n";
    return kOk;
}

inline int cmd_run(const RunOptions& o) {
    const auto policies = detail::validate_policies(o.policies);
    RunConfig cfg;
    cfg.budget = o.budget;
    const auto g = parse_granularity(o.granularity);
    if (!g) throw ConfigError("--granularity must be session or turn");
    cfg.granularity = *g;
    const auto x = parse_extractor_kind(o.extractor);
    if (!x) throw ConfigError("--extractor must be marker or backend");
    cfg.extractor = *x;
    cfg.checkpoints = o.checkpoints;
    cfg.gating.window = o.window;
    cfg.gating.update_interval = o.update_interval;
    cfg.gating.max_chars = o.max_chars;
    cfg.jobs = o.common.jobs;
    cfg.validate();
    if (cfg.gating.window < 1 || cfg.gating.update_interval < 1) throw ConfigError("--window and --update-interval must be >= 1");

    const auto bcfg = detail::backend_config(o.common);
    cfg.gating.model_id = bcfg.models.gating;
    cfg.memory_model = bcfg.models.memory;
    auto backend = make_backend(bcfg);
    const auto prompts = detail::prompt_set(o.common);
    const auto ds = load_dataset(o.dataset);
    detail::prepare_out(o.common.out);

    std::vector<std::string> files;
    for (const auto& p : policies) {
        const auto runs = run_policy(ds, p, *backend, prompts, cfg);
        for (auto& f : write_policy_run(o.common.out, p, runs)) files.push_back(std::move(f));
        std::size_t stored = 0, sessions = 0;
        for (const auto& r : runs)
            for (const auto& d : r.decisions) stored += d.memory_required, ++sessions;
        std::cout << p << ": " << sessions << " sessions, " << stored << " gated in\n";
    }
    detail::write_manifest(o.common.out, "run",
                           {{"dataset", detail::file_digest(o.dataset)},
                            {"policies", policies},
                            {"budget", o.budget},
                            {"granularity", std::string(to_string(cfg.granularity))},
                            {"extractor", o.extractor},
                            {"checkpoints", o.checkpoints},
                            {"window", o.window},
                            {"update_interval", o.update_interval},
                            {"max_chars", o.max_chars},
                            {"seed", o.common.seed}},
                           files);
    return kOk;
}

inline int cmd_evaluate(const EvaluateOptions& o) {
    detail::prepare_out(o.common.out);
    const std::string run_dir = o.run_dir.empty() ? o.common.out : o.run_dir;
    std::optional<json> run_manifest;
    if (const auto mp = std::filesystem::path(run_dir) / "manifest.json"; std::filesystem::exists(mp))
        run_manifest = read_json_file(mp.string());
    std::vector<std::string> policies = o.policies;
    if (policies.empty() && run_manifest && run_manifest->contains("parameters"))
        policies = (*run_manifest)["parameters"].value("policies", std::vector<std::string>{});
    detail::validate_policies(policies);

    RetentionConfig rcfg;
    rcfg.k_retrieve = o.k_retrieve;
    rcfg.checkpoints = 20;
    if (run_manifest && run_manifest->contains("parameters"))
        rcfg.checkpoints = (*run_manifest)["parameters"].value("checkpoints", std::size_t{20});
    if (o.checkpoints) rcfg.checkpoints = *o.checkpoints;
    const auto jk = parse_judge_kind(o.judge);
    if (!jk) throw ConfigError("--judge must be substring or backend");
    rcfg.judge = *jk;
    rcfg.validate();

    const auto bcfg = detail::backend_config(o.common);
    auto backend = make_backend(bcfg);
    const auto prompts = detail::prompt_set(o.common);
    std::unique_ptr<PresenceJudge> judge;
    if (rcfg.judge == JudgeKind::backend) judge = std::make_unique<BackendJudge>(*backend, prompts, bcfg.models.judge);
    else judge = std::make_unique<SubstringJudge>();

    const auto ds = load_dataset(o.dataset);
    std::vector<PolicyEvaluation> evals;
    for (const auto& p : policies) {
        const auto run = load_policy_run(run_dir, p, ds);
        evals.push_back(evaluate_policy(ds, p, run, *backend, *judge, rcfg, o.common.jobs));
    }
    const json report = build_report(ds, evals, rcfg, o.jaccard);
    const std::filesystem::path out(o.common.out);
    write_json_file((out / "report.json").string(), report);
    const std::string table = render_report_text(report);
    write_text_file((out / "report.txt").string(), table);
    detail::write_manifest(o.common.out, "evaluate",
                           {{"dataset", detail::file_digest(o.dataset)},
                            {"policies", policies},
                            {"judge", o.judge},
                            {"checkpoints", rcfg.checkpoints},
                            {"k_retrieve", rcfg.k_retrieve},
                            {"jaccard", o.jaccard}},
                           {"report.json", "report.txt"});
    std::cout << table;
    return kOk;
}

inline int cmd_report(const ReportOptions& o) {
    std::filesystem::path p(o.report);
    if (std::filesystem::is_directory(p)) p /= "report.json";
    std::cout << render_report_text(read_json_file(p.string()));
    return kOk;
}

// Maps failure classes to exit codes and prints the message to stderr.
template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kValidation;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kValidation;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kBackend;
    } catch (const GenerationError& e) {
        std::cerr << "generation error: " << e.what() << "\n";
        return kBackend;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}

}  // namespace permem::cli
