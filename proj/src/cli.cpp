#include "naf/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "naf/cp_delta.hpp"
#include "naf/cp_k.hpp"
#include "naf/errors.hpp"
#include "naf/io.hpp"
#include "naf/numeric.hpp"
#include "naf/oracle.hpp"
#include "naf/sharding.hpp"

namespace naf::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

struct PendingWrite {
    fs::path path;
    std::string content;
};

void flush_writes(std::vector<PendingWrite>& writes) {
    for (const PendingWrite& w : writes) {
        io::write_file_atomic(w.path, w.content);
    }
    writes.clear();
}

std::vector<std::string> prompt_tokens(const RunConfig& config) {
    return split_tokens(config.prompt);
}

Bits config_k(const RunConfig& config) {
    if (config.k_infinite) {
        return Bits::infinity();
    }
    if (config.k < 0.0) {
        throw InvalidInput("threshold k must be >= 0");
    }
    return Bits(config.k);
}

// ---------------------------------------------------------------------------
// Loading the artifacts written by `train` and `protect`.
// ---------------------------------------------------------------------------

SafeCover load_cover(const fs::path& cover_path) {
    json j;
    try {
        j = json::parse(io::read_file(cover_path));
    } catch (const json::exception& e) {
        throw InvalidInput("cover file " + cover_path.string() + ": " + e.what());
    }
    SafeCover cover;
    try {
        for (const auto& rel : j.at("models")) {
            cover.models.push_back(
                io::load_model(cover_path.parent_path() / rel.get<std::string>()));
        }
        if (j.contains("safe_index")) {
            for (const auto& [tag, idx] : j.at("safe_index").items()) {
                cover.safe_index[tag] = idx.get<std::size_t>();
            }
        }
    } catch (const json::exception& e) {
        throw InvalidInput("cover file " + cover_path.string() + ": " + e.what());
    }
    return cover;
}

struct ProtectedModel {
    std::string method;  // cp-delta | cp-k | smooth-cp-k
    json descriptor;
    fs::path dir;

    bool is_cp_delta() const { return method == "cp-delta"; }

    CPDeltaModel delta_model() const {
        return CPDeltaModel(load_cover(dir / descriptor.at("cover").get<std::string>()).models,
                            divergence_from_name(descriptor.at("divergence").get<std::string>()));
    }

    CPkSampler sampler(int max_len) const {
        CPkSampler s;
        s.base = io::load_model(dir / descriptor.at("base").get<std::string>());
        s.cover = load_cover(dir / descriptor.at("cover").get<std::string>()).models;
        s.k = io::bits_from_json(descriptor.at("k"));
        s.variant = cpk_variant_from_name(descriptor.at("variant").get<std::string>());
        s.max_attempts = descriptor.value("max_attempts", std::uint64_t{10000});
        s.streaming = descriptor.value("streaming", false);
        s.max_len = max_len;
        return s;
    }
};

ProtectedModel load_protected(const fs::path& path) {
    ProtectedModel p;
    try {
        p.descriptor = json::parse(io::read_file(path));
        p.method = p.descriptor.at("method").get<std::string>();
    } catch (const json::exception& e) {
        throw InvalidInput("protected-model descriptor " + path.string() + ": " + e.what());
    }
    p.dir = path.parent_path();
    if (p.method != "cp-delta" && p.method != "cp-k" && p.method != "smooth-cp-k") {
        throw InvalidInput("unknown protection method \"" + p.method + "\"");
    }
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

namespace {

// JSON-lines datasets carry tags; a plain text file (one document per line)
// is accepted as an untagged corpus.
Dataset load_training_data(const std::filesystem::path& path) {
    const std::string head = io::read_file(path);
    const std::size_t first = head.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && head[first] == '{') {
        return io::load_dataset_jsonl(path);
    }
    Dataset d;
    for (std::string& doc : io::load_corpus_text(path)) {
        d.datapoints.push_back({std::move(doc), {}});
    }
    return d;
}

}  // namespace

void run_train(const RunConfig& config, std::ostream& out) {
    if (config.data.empty() || config.out_dir.empty()) {
        throw InvalidInput("train: --data and --out-dir are required");
    }
    Dataset dataset = load_training_data(config.data);
    if (dataset.datapoints.empty()) {
        throw InvalidInput("train: dataset is empty");
    }

    ShardPlan plan;
    if (config.dup_policy == "dedup") {
        dataset = deduplicate(dataset);
        plan = plan_shards(dataset, config.m, config.seed);
    } else if (config.dup_policy == "colocate") {
        plan = plan_shards_colocating_duplicates(dataset, config.m, config.seed);
    } else if (config.dup_policy == "reject") {
        plan = plan_shards(dataset, config.m, config.seed);
    } else {
        throw InvalidInput("train: --dup-policy must be reject|dedup|colocate");
    }

    const TrainerConfig trainer{config.n, config.alpha};
    const SafeCover cover = build_safe_cover(dataset, plan, trainer);

    // Full-data model for CP-k use, over the same vocabulary as the shards.
    std::vector<std::string> words;
    for (const Datapoint& z : dataset.datapoints) {
        for (std::string& t : split_tokens(z.doc)) {
            words.push_back(std::move(t));
        }
    }
    const NGramModel full =
        NGramModel::train(dataset.docs(), config.n, config.alpha, Vocab::from_words(words));

    std::vector<PendingWrite> writes;
    writes.push_back({config.out_dir / "shard_plan.json",
                      io::shard_plan_to_json(plan).dump(2) + "\n"});
    writes.push_back(
        {config.out_dir / "model_full.json", io::model_to_json(full).dump(2) + "\n"});
    json cover_json;
    json model_files = json::array();
    for (std::size_t i = 0; i < cover.models.size(); ++i) {
        const std::string name = "model_shard_" + std::to_string(i) + ".json";
        writes.push_back(
            {config.out_dir / name, io::model_to_json(*cover.models[i]).dump(2) + "\n"});
        model_files.push_back(name);
    }
    cover_json["models"] = std::move(model_files);
    json safe_index = json::object();
    for (const auto& [tag, idx] : cover.safe_index) {
        safe_index[tag] = idx;
    }
    cover_json["safe_index"] = std::move(safe_index);
    cover_json["m"] = config.m;
    writes.push_back({config.out_dir / "cover.json", cover_json.dump(2) + "\n"});

    fs::create_directories(config.out_dir);
    flush_writes(writes);

    out << "trained " << cover.models.size() << " shard models plus the full-data model ("
        << dataset.datapoints.size() << " datapoints, vocab " << full.vocab().size()
        << ", " << cover.safe_index.size() << " tags)\n";
    out << "wrote " << (config.out_dir / "cover.json").string() << "\n";
}

// ---------------------------------------------------------------------------
// protect
// ---------------------------------------------------------------------------

namespace {

// Z statistics over contexts visited by sampled generations from the full
// model: the a-priori per-token bound for CP-Delta.
json z_summary(const CPDeltaModel& combined, const ModelPtr& full,
               std::span<const std::string> prompt, const RunConfig& config) {
    std::mt19937_64 rng(derive_seed(config.seed, "z-summary"));
    std::vector<double> zs;
    for (int i = 0; i < 200; ++i) {
        std::vector<std::string> context(prompt.begin(), prompt.end());
        const std::vector<std::string> y =
            sample_sequence(*full, prompt, rng, config.max_len);
        for (const std::string& tok : y) {
            zs.push_back(combined.combine_at(context).z);
            context.push_back(tok);
        }
    }
    std::sort(zs.begin(), zs.end());
    NeumaierSum neg_log;
    for (double z : zs) {
        neg_log.add(-std::log2(z));
    }
    return json{{"contexts", zs.size()},
                {"z_min", zs.front()},
                {"z_median", zs[zs.size() / 2]},
                {"z_max", zs.back()},
                {"neg_log2_z_mean", neg_log.value() / static_cast<double>(zs.size())},
                {"neg_log2_z_max", -std::log2(zs.front())}};
}

}  // namespace

void run_protect(const RunConfig& config, std::ostream& out) {
    if (config.models_dir.empty() || config.method.empty()) {
        throw InvalidInput("protect: --models and --method are required");
    }
    const fs::path cover_path = config.models_dir / "cover.json";
    const fs::path full_path = config.models_dir / "model_full.json";
    const SafeCover cover = load_cover(cover_path);
    const fs::path out_path =
        config.out.empty() ? config.models_dir / "protected.json" : config.out;

    json descriptor;
    std::vector<PendingWrite> writes;

    if (config.method == "cp-delta") {
        const Divergence div = divergence_from_name(config.divergence);
        const CPDeltaModel combined(cover.models, div);
        const ModelPtr full = io::load_model(full_path);
        const json zs = z_summary(combined, full, prompt_tokens(config), config);
        out << "CP-Delta(" << config.divergence << "): per-token bound -log2 Z over "
            << zs.at("contexts").get<std::size_t>() << " sampled contexts: mean "
            << zs.at("neg_log2_z_mean").get<double>() << " bits, max "
            << zs.at("neg_log2_z_max").get<double>() << " bits\n";
        descriptor = json{{"method", "cp-delta"},
                          {"divergence", config.divergence},
                          {"cover", "cover.json"},
                          {"z_summary", zs}};
        if (!config.export_table.empty()) {
            const Categorical table = sequence_distribution(
                combined, prompt_tokens(config), config.max_len, config.enum_cap);
            writes.push_back({config.export_table,
                              io::categorical_to_json(table).dump(2) + "\n"});
        }
    } else {
        const ModelPtr base = io::load_model(full_path);
        Bits k = config_k(config);
        if (config.k_percentile >= 0.0) {
            k = std::max(Bits(0.0),
                         log_ratio_percentile(base, cover.models, prompt_tokens(config),
                                              config.max_len, config.trials,
                                              config.k_percentile,
                                              derive_seed(config.seed, "protect-k")));
            out << "chose k = " << k.value() << " bits at the " << config.k_percentile
                << "th percentile of " << config.trials << " observed log-ratios\n";
        }
        const CpkVariant variant =
            config.method == "smooth-cp-k" ? CpkVariant::kSmooth : CpkVariant::kHard;
        descriptor = json{{"method", config.method},
                          {"variant", cpk_variant_name(variant)},
                          {"k", io::bits_to_json(k)},
                          {"base", "model_full.json"},
                          {"cover", "cover.json"},
                          {"max_attempts", config.max_attempts},
                          {"streaming", config.streaming}};
        out << "CP-k(" << cpk_variant_name(variant) << "): a-priori threshold k = "
            << io::bits_to_json(k).dump() << " bits; final bound is k + log2(1/nu)\n";
        if (variant == CpkVariant::kSmooth && k == Bits(0.0)) {
            // p = q1 makes smooth-CP-k coincide with the CP-Delta_max output.
            const std::string base_json = io::model_to_json(*base).dump();
            for (const ModelPtr& q : cover.models) {
                if (io::model_to_json(*q).dump() == base_json) {
                    out << "note: k = 0 with base equal to a cover model reproduces "
                           "CP-Delta(max) exactly\n";
                    break;
                }
            }
        }
        if (!config.export_table.empty()) {
            CPkSampler s;
            s.base = base;
            s.cover = cover.models;
            s.k = k;
            s.variant = variant;
            s.max_len = config.max_len;
            const AnalyticPk pk = analytic_pk(s, prompt_tokens(config), config.enum_cap);
            writes.push_back({config.export_table,
                              io::categorical_to_json(pk.dist).dump(2) + "\n"});
        }
    }

    writes.push_back({out_path, descriptor.dump(2) + "\n"});
    flush_writes(writes);
    out << "wrote " << out_path.string() << "\n";
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

void run_sample(const RunConfig& config, std::ostream& out) {
    if (config.model.empty()) {
        throw InvalidInput("sample: --model descriptor is required");
    }
    const ProtectedModel pm = load_protected(config.model);
    const std::vector<std::string> prompt = prompt_tokens(config);
    std::mt19937_64 rng(derive_seed(config.seed, "sample"));

    std::string lines;
    json aggregate;

    if (pm.is_cp_delta()) {
        const CPDeltaModel model = pm.delta_model();
        double bound_max = 0.0;
        NeumaierSum bound_sum;
        for (std::uint64_t i = 0; i < config.num_samples; ++i) {
            const std::vector<std::string> y =
                sample_sequence(model, prompt, rng, config.max_len);
            const Bits lp = score_sequence(model, prompt, y, config.max_len);
            Bits lq_min = Bits::infinity();
            for (const ModelPtr& q : model.sources()) {
                lq_min = std::min(lq_min, score_sequence(*q, prompt, y, config.max_len));
            }
            const Bits bound = sequence_k_bound(model, prompt, y, config.max_len);
            bound_max = std::max(bound_max, bound.value());
            bound_sum.add(bound.value());
            const json line{{"text", join_tokens(y)},
                            {"log_p", io::bits_to_json(lp)},
                            {"min_log_q", io::bits_to_json(lq_min)},
                            {"ratio_bits", io::bits_to_json(lp - lq_min)},
                            {"bound_bits", io::bits_to_json(bound)},
                            {"attempts", 1}};
            lines += line.dump() + "\n";
        }
        aggregate = json{{"samples", config.num_samples},
                         {"bound_bits_max", bound_max},
                         {"bound_bits_mean",
                          bound_sum.value() / static_cast<double>(config.num_samples)}};
    } else {
        const CPkSampler sampler = pm.sampler(config.max_len);
        std::uint64_t attempts_total = 0;
        for (std::uint64_t i = 0; i < config.num_samples; ++i) {
            const CpkDraw draw = cpk_sample(sampler, prompt, rng);
            attempts_total += draw.attempts;
            const Bits lp = score_sequence(*sampler.base, prompt, draw.tokens, config.max_len);
            Bits lq_min = Bits::infinity();
            for (const ModelPtr& q : sampler.cover) {
                lq_min = std::min(lq_min,
                                  score_sequence(*q, prompt, draw.tokens, config.max_len));
            }
            const json line{{"text", join_tokens(draw.tokens)},
                            {"log_p", io::bits_to_json(lp)},
                            {"min_log_q", io::bits_to_json(lq_min)},
                            {"ratio_bits", io::bits_to_json(lp - lq_min)},
                            {"attempts", draw.attempts}};
            lines += line.dump() + "\n";
        }
        const double nu_hat = static_cast<double>(config.num_samples) /
                              static_cast<double>(attempts_total);
        const WilsonInterval ci = wilson_interval_95(config.num_samples, attempts_total);
        aggregate = json{{"samples", config.num_samples},
                         {"attempts", attempts_total},
                         {"k", pm.descriptor.at("k")},
                         {"nu_hat", nu_hat},
                         {"nu_ci", json::array({ci.low, ci.high})},
                         {"k_tilde", io::bits_to_json(k_tilde(
                                         io::bits_from_json(pm.descriptor.at("k")), nu_hat))}};
    }

    std::vector<PendingWrite> writes;
    if (!config.out.empty()) {
        writes.push_back({config.out, lines});
    }
    if (!config.report_path.empty() && !pm.is_cp_delta()) {
        // The report prefers the exact acceptance probability when the
        // sequence space is enumerable.
        const CPkSampler sampler = pm.sampler(config.max_len);
        const AcceptanceStats stats = estimate_nu(sampler, prompt, config.trials,
                                                  derive_seed(config.seed, "nu-trials"),
                                                  config.enum_cap);
        const Bits k = io::bits_from_json(pm.descriptor.at("k"));
        const json report{{"k", io::bits_to_json(k)},
                          {"nu", stats.nu_hat},
                          {"nu_ci", json::array({stats.ci_low, stats.ci_high})},
                          {"k_tilde", io::bits_to_json(k_tilde(k, stats.nu_hat))},
                          {"exact", stats.exact}};
        writes.push_back({config.report_path, report.dump(2) + "\n"});
    }
    flush_writes(writes);

    if (config.out.empty()) {
        out << lines;
    }
    out << aggregate.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

int run_verify(const RunConfig& config, std::ostream& out) {
    oracle::SuiteConfig suite;
    if (!config.config.empty()) {
        try {
            suite = oracle::suite_config_from_json(json::parse(io::read_file(config.config)));
        } catch (const json::exception& e) {
            throw InvalidInput("verify config " + config.config.string() + ": " + e.what());
        }
    }
    if (config.seed != 0) {
        suite.seed = config.seed;
    }
    if (!config.only.empty()) {
        suite.only = config.only;
        for (const std::string& name : suite.only) {
            const auto& names = oracle::suite_check_names();
            if (std::find(names.begin(), names.end(), name) == names.end()) {
                throw InvalidInput("verify: unknown check \"" + name + "\"");
            }
        }
    }
    suite.corrupt = suite.corrupt || config.corrupt;
    suite.enum_cap = config.enum_cap;

    const oracle::SuiteReport report = oracle::verify_suite(suite);
    for (const oracle::CheckResult& c : report.checks) {
        out << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << " ("
            << static_cast<int>(c.seconds * 1000.0) << " ms): " << c.details << "\n";
    }
    out << (report.all_pass() ? "all checks passed" : "CHECKS FAILED") << "\n";
    if (!config.report_path.empty()) {
        io::write_file_atomic(config.report_path, report.to_json().dump(2) + "\n");
    }
    return report.all_pass() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

void run_report(const RunConfig& config, std::ostream& out) {
    if (config.model.empty()) {
        throw InvalidInput("report: --model descriptor is required");
    }
    const ProtectedModel pm = load_protected(config.model);
    const std::vector<std::string> prompt = prompt_tokens(config);
    json report{{"prompt", config.prompt}, {"method", pm.method}};
    bool pass = true;

    if (pm.is_cp_delta()) {
        const CPDeltaModel model = pm.delta_model();
        const CombineResult at_prompt = model.combine_at(prompt);
        report["z_at_prompt"] = at_prompt.z;
        report["token_bound_at_prompt"] = io::bits_to_json(at_prompt.k_bound);

        // Claimed sequence-level bound via the chain rule, then the measured
        // divergence on the materialized output distributions.
        double claimed = 0.0;
        NeumaierSum expected_bound;
        for_each_sequence(model, prompt, config.max_len, config.enum_cap,
                          [&](std::span<const std::string> y, double prob) {
                              const double b =
                                  sequence_k_bound(model, prompt, y, config.max_len).value();
                              claimed = std::max(claimed, b);
                              expected_bound.add(prob * b);
                          });
        const Bits claimed_bound = model.divergence() == Divergence::kMax
                                       ? Bits(claimed)
                                       : Bits(expected_bound.value());
        const oracle::NafEntry entry = oracle::verify_naf(
            model, model.sources(), prompt, config.max_len, claimed_bound,
            model.divergence(), 1e-9, config.enum_cap);
        report["measured_k"] = io::bits_to_json(entry.measured_k);
        report["claimed_bound"] = io::bits_to_json(entry.claimed_bound);
        report["worst_y"] = entry.worst_y;
        report["naf_pass"] = entry.pass;
        pass = pass && entry.pass;

        json degradation = json::array();
        for (const oracle::DegradationEntry& e :
             oracle::verify_degradation_cp_delta(model, prompt)) {
            degradation.push_back(json{{"what", e.what},
                                       {"measured", e.measured},
                                       {"bound", e.bound},
                                       {"pass", e.pass}});
            pass = pass && e.pass;
        }
        report["degradation"] = std::move(degradation);
    } else {
        const CPkSampler sampler = pm.sampler(config.max_len);
        const AcceptanceStats stats = estimate_nu(sampler, prompt, config.trials,
                                                  derive_seed(config.seed, "nu-trials"),
                                                  config.enum_cap);
        report["nu"] = stats.nu_hat;
        report["nu_exact"] = stats.exact;
        report["nu_ci"] = json::array({stats.ci_low, stats.ci_high});
        const Bits kt = k_tilde(sampler.k, stats.nu_hat);
        report["k"] = io::bits_to_json(sampler.k);
        report["k_tilde"] = io::bits_to_json(kt);
        report["d_x"] =
            compute_dx(*sampler.base, sampler.cover, prompt, config.max_len, config.enum_cap).d;

        const AnalyticPk pk = analytic_pk(sampler, prompt, config.enum_cap);
        // Measured worst log ratio of p_k against every cover model.
        Bits measured = Bits::neg_infinity();
        std::string worst_y;
        for (const ModelPtr& q : sampler.cover) {
            const Categorical q_dist =
                sequence_distribution(*q, prompt, config.max_len, config.enum_cap);
            for (std::size_t i = 0; i < pk.dist.size(); ++i) {
                const double py = pk.dist.probs()[i];
                if (py <= 0.0) {
                    continue;
                }
                const double qy = q_dist.prob_of(pk.dist.labels()[i]);
                const Bits r = qy == 0.0 ? Bits::infinity() : Bits(std::log2(py / qy));
                if (r > measured) {
                    measured = r;
                    worst_y = pk.dist.labels()[i];
                }
            }
        }
        report["measured_k"] = io::bits_to_json(measured);
        report["claimed_bound"] = io::bits_to_json(kt);
        report["worst_y"] = worst_y;
        const bool naf_pass = measured <= kt + Bits(1e-9);
        report["naf_pass"] = naf_pass;
        pass = pass && naf_pass;

        const oracle::DegradationEntry deg =
            oracle::verify_degradation_cpk(sampler, prompt, 1e-9, config.enum_cap);
        report["degradation"] = json::array({json{{"what", deg.what},
                                                  {"measured", deg.measured},
                                                  {"bound", deg.bound},
                                                  {"pass", deg.pass}}});
        pass = pass && deg.pass;
    }

    report["all_pass"] = pass;
    const std::string text = report.dump(2) + "\n";
    if (!config.out.empty()) {
        io::write_file_atomic(config.out, text);
        out << "wrote " << config.out.string() << "\n";
    } else {
        out << text;
    }
}

// ---------------------------------------------------------------------------

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        if (config.command == "train") {
            run_train(config, out);
        } else if (config.command == "protect") {
            run_protect(config, out);
        } else if (config.command == "sample") {
            run_sample(config, out);
        } else if (config.command == "verify") {
            return run_verify(config, out);
        } else if (config.command == "report") {
            run_report(config, out);
        } else {
            throw InvalidInput("unknown command \"" + config.command + "\"");
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace naf::cli
