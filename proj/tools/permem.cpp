// permem: generate datasets, run gated memory simulations, evaluate, report.

#include <iostream>

#include <CLI11.hpp>

#include "permem/cli/commands.hpp"

namespace {

void add_common(CLI::App* cmd, permem::cli::CommonOptions& c, bool with_jobs = true) {
    cmd->add_option("--out", c.out, "Output directory")->required();
    cmd->add_option("--backend-config", c.backend_config, "Backend config JSON (default: offline mock)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--prompts", c.prompts_dir, "Directory of <name>.txt prompt overrides")->check(CLI::ExistingDirectory);
    cmd->add_option("--seed", c.seed, "Global seed")->capture_default_str();
    if (with_jobs) cmd->add_option("--jobs", c.jobs, "Users processed in parallel")->capture_default_str()->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace permem::cli;
    CLI::App app{"Personalized-memory engine and retention evaluation harness"};
    app.require_subcommand(1);

    GenerateOptions gen;
    auto* g = app.add_subcommand("generate", "Generate a benchmark dataset from personas");
    add_common(g, gen.common);
    g->add_option("--personas", gen.personas, "Personas JSON file")->required()->check(CLI::ExistingFile);
    g->add_option("--variant", gen.variant, "static | dynamic")->capture_default_str();
    g->add_option("--selected", gen.selected, "Domains selected per user")->capture_default_str();
    g->add_option("--max-month", gen.max_month, "Month bound offered to the timeline arranger")->capture_default_str();
    g->add_option("--min-turns", gen.min_turns, "Minimum exchanges per dialogue")->capture_default_str();
    g->add_option("--max-turns", gen.max_turns, "Hard cap on exchanges per dialogue")->capture_default_str();
    g->add_flag("--verify-profile", gen.verify_profile, "Run the optional profile verifier call");

    RunOptions run;
    std::vector<std::string> run_policies;
    auto* r = app.add_subcommand("run", "Run gated memory simulations over a dataset");
    add_common(r, run.common);
    r->add_option("--dataset", run.dataset, "Dataset JSON")->required()->check(CLI::ExistingFile);
    r->add_option("--policy", run_policies, "universal | oracle | greedy | context | structure (repeatable, comma-separated)")
        ->required();
    r->add_option("--budget", run.budget, "Memory bank budget (entries)")->capture_default_str();
    r->add_option("--granularity", run.granularity, "session | turn")->capture_default_str();
    r->add_option("--extractor", run.extractor, "backend | marker")->capture_default_str();
    r->add_option("--checkpoints", run.checkpoints, "Evaluation checkpoints K per reference")->capture_default_str();
    r->add_option("--window", run.window, "Context-aware gating window")->capture_default_str();
    r->add_option("--update-interval", run.update_interval, "Structure-aware note update interval")->capture_default_str();
    r->add_option("--max-chars", run.max_chars, "Dialogue truncation for gate prompts")->capture_default_str();

    EvaluateOptions ev;
    std::vector<std::string> ev_policies;
    auto* e = app.add_subcommand("evaluate", "Compute retention and gating metrics for a run");
    add_common(e, ev.common);
    e->add_option("--dataset", ev.dataset, "Dataset JSON")->required()->check(CLI::ExistingFile);
    e->add_option("--run-dir", ev.run_dir, "Run output directory (default: --out)");
    e->add_option("--policy", ev_policies, "Policies to evaluate (default: all in the run)");
    e->add_option("--judge", ev.judge, "substring | backend")->capture_default_str();
    std::size_t checkpoints = 0;
    auto* k_opt = e->add_option("--checkpoints", checkpoints, "Checkpoints K (default: the run's value)");
    e->add_option("--k-retrieve", ev.k_retrieve, "Retrieval depth for the indicator")->capture_default_str();
    e->add_flag("--jaccard", ev.jaccard, "Include profile Jaccard analysis");

    ReportOptions rep;
    auto* p = app.add_subcommand("report", "Print the text table of a report");
    p->add_option("report", rep.report, "report.json or the directory containing it")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kOk : kValidation;
    }

    if (*g) return guarded([&] { return cmd_generate(gen); });
    if (*r) {
        run.policies = split_policies(run_policies);
        return guarded([&] { return cmd_run(run); });
    }
    if (*e) {
        ev.policies = split_policies(ev_policies);
        if (*k_opt) ev.checkpoints = checkpoints;
        return guarded([&] { return cmd_evaluate(ev); });
    }
    if (*p) return guarded([&] { return cmd_report(rep); });
    return kInternal;
}
