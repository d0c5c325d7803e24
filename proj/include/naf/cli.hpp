#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "naf/model.hpp"

namespace naf::cli {

/**
 * Fully describes one command invocation; identical configs over identical
 * inputs produce byte-identical outputs. One global seed drives shard
 * planning, sampling, and acceptance trials through derived per-purpose
 * seeds.
 */
struct RunConfig {
    std::string command;  // train | protect | sample | verify | report

    // Common
    std::uint64_t seed = 0;
    std::string prompt;  // whitespace-tokenized
    int max_len = 8;
    std::size_t enum_cap = kDefaultEnumerationCap;

    // train
    std::filesystem::path data;
    std::filesystem::path out_dir;
    int m = 1;
    int n = 3;
    double alpha = 0.1;
    std::string dup_policy = "reject";  // reject | dedup | colocate

    // protect
    std::filesystem::path models_dir;
    std::string method;  // cp-delta | cp-k | smooth-cp-k
    std::string divergence = "max";
    double k = 0.0;
    bool k_infinite = false;
    double k_percentile = -1.0;  // >= 0: choose k at this percentile of observed ratios
    std::uint64_t max_attempts = 10000;
    bool streaming = false;
    std::filesystem::path export_table;

    // sample / report
    std::filesystem::path model;  // protected-model descriptor
    std::uint64_t num_samples = 10;
    std::uint64_t trials = 10000;
    std::filesystem::path out;
    std::filesystem::path report_path;

    // verify
    std::filesystem::path config;
    std::vector<std::string> only;
    bool corrupt = false;
};

// Dispatches on config.command, catching errors into an exit code and a
// message on `err`. Human-readable progress goes to `out`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

// The individual commands; they throw naf errors on failure.
void run_train(const RunConfig& config, std::ostream& out);
void run_protect(const RunConfig& config, std::ostream& out);
void run_sample(const RunConfig& config, std::ostream& out);
int run_verify(const RunConfig& config, std::ostream& out);
void run_report(const RunConfig& config, std::ostream& out);

}  // namespace naf::cli
