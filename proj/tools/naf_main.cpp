// Command-line front end: builds copyright-protected samplers from sharded
// n-gram models and verifies the divergence bounds with the brute-force
// suite. See README.md for a walkthrough.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>

#include "naf/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"near access-free samplers for sharded generative models"};
    app.require_subcommand(1);

    naf::cli::RunConfig config;

    // Enumeration cap: flag overrides NAF_ENUM_CAP overrides the default.
    if (const char* cap_env = std::getenv("NAF_ENUM_CAP")) {
        config.enum_cap = std::strtoull(cap_env, nullptr, 10);
    }

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", config.seed, "global seed; drives all derived seeds");
        cmd->add_option("--max-len", config.max_len, "maximum output length in tokens");
        cmd->add_option("--prompt", config.prompt, "prompt text (whitespace-tokenized)");
        cmd->add_option("--enum-cap", config.enum_cap, "enumeration cap (sequences)");
    };

    CLI::App* train = app.add_subcommand("train", "shard a dataset and train the models");
    train->add_option("--data", config.data, "dataset (JSON lines)")->required();
    train->add_option("--out-dir", config.out_dir, "output directory")->required();
    train->add_option("--m", config.m, "maximum datapoints accessing one work");
    train->add_option("--n", config.n, "n-gram order");
    train->add_option("--alpha", config.alpha, "additive smoothing pseudo-count");
    train->add_option("--dup-policy", config.dup_policy,
                      "exact duplicates: reject | dedup | colocate");
    add_common(train);

    CLI::App* protect = app.add_subcommand("protect", "build a protected-model descriptor");
    protect->add_option("--models", config.models_dir, "directory written by train")
        ->required();
    protect->add_option("--method", config.method, "cp-delta | cp-k | smooth-cp-k")
        ->required();
    protect->add_option("--divergence", config.divergence, "cp-delta: max | kl");
    protect->add_option("--k", config.k, "threshold in bits");
    protect->add_flag("--k-inf", config.k_infinite, "threshold never binds (k = +inf)");
    protect->add_option("--k-percentile", config.k_percentile,
                        "choose k at this percentile of observed log-ratios");
    protect->add_option("--max-attempts", config.max_attempts,
                        "rejection attempts before giving up");
    protect->add_flag("--streaming", config.streaming,
                      "reject mid-generation once the running ratio exceeds k");
    protect->add_option("--trials", config.trials, "samples for the percentile estimate");
    protect->add_option("--out", config.out, "descriptor path (default: models/protected.json)");
    protect->add_option("--export-table", config.export_table,
                        "materialize the exact output distribution (enumerable models)");
    add_common(protect);

    CLI::App* sample = app.add_subcommand("sample", "generate text with certificates");
    sample->add_option("--model", config.model, "protected-model descriptor")->required();
    sample->add_option("--num", config.num_samples, "number of sequences");
    sample->add_option("--out", config.out, "write certificate lines here (JSONL)");
    sample->add_option("--report", config.report_path, "write the nu / k-tilde report here");
    sample->add_option("--trials", config.trials, "acceptance trials for the report");
    add_common(sample);

    CLI::App* verify = app.add_subcommand("verify", "run the brute-force oracle suite");
    verify->add_option("--config", config.config, "suite config JSON");
    verify->add_option("--only", config.only, "run only the named checks");
    verify->add_flag("--corrupt", config.corrupt,
                     "run the corrupted fixtures (every check must fail)");
    verify->add_option("--report", config.report_path, "write the suite report JSON here");
    add_common(verify);

    CLI::App* report = app.add_subcommand("report", "measure bounds for a protected model");
    report->add_option("--model", config.model, "protected-model descriptor")->required();
    report->add_option("--trials", config.trials, "acceptance trials when not enumerable");
    report->add_option("--out", config.out, "write the report JSON here");
    add_common(report);

    CLI11_PARSE(app, argc, argv);
    config.command = app.get_subcommands().front()->get_name();
    return naf::cli::run(config, std::cout, std::cerr);
}
