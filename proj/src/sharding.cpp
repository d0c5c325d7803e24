#include "naf/sharding.hpp"

#include <algorithm>
#include <random>
#include <unordered_map>

#include "naf/errors.hpp"
#include "naf/numeric.hpp"

namespace naf {

std::vector<std::string> Dataset::docs() const {
    std::vector<std::string> out;
    out.reserve(datapoints.size());
    for (const Datapoint& z : datapoints) {
        out.push_back(z.doc);
    }
    return out;
}

std::map<std::string, int> Dataset::tag_multiplicities() const {
    std::map<std::string, int> mult;
    for (const Datapoint& z : datapoints) {
        for (const std::string& tag : z.tags) {
            mult[tag] += 1;
        }
    }
    return mult;
}

namespace {

std::string trimmed(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return s.substr(b, e - b);
}

}  // namespace

Dataset deduplicate(const Dataset& d) {
    Dataset out;
    std::unordered_map<std::string, std::size_t> first_at;  // trimmed doc -> out index
    for (const Datapoint& z : d.datapoints) {
        const std::string key = trimmed(z.doc);
        auto it = first_at.find(key);
        if (it == first_at.end()) {
            first_at.emplace(key, out.datapoints.size());
            out.datapoints.push_back(z);
        } else {
            out.datapoints[it->second].tags.insert(z.tags.begin(), z.tags.end());
        }
    }
    return out;
}

ShardPlan plan_shards(const Dataset& d, int m, std::uint64_t seed) {
    if (m < 1) {
        throw InvalidInput("plan_shards: m must be >= 1");
    }
    for (const auto& [tag, count] : d.tag_multiplicities()) {
        if (count > m) {
            throw MultiplicityViolation(tag, count, m);
        }
    }
    const int num_shards = m + 1;
    ShardPlan plan;
    plan.num_shards = num_shards;
    plan.assignment.assign(d.datapoints.size(), -1);

    // Greedy placement for tagged datapoints: among the shards none of this
    // datapoint's tags has touched yet, take the one with the fewest tagged
    // datapoints (smallest index on ties). One tag's datapoints land on
    // distinct shards, and distinct works spread apart instead of piling up.
    std::map<std::string, std::set<int>> shards_of_tag;
    std::vector<int> load(static_cast<std::size_t>(num_shards), 0);
    for (std::size_t i = 0; i < d.datapoints.size(); ++i) {
        const Datapoint& z = d.datapoints[i];
        if (z.tags.empty()) {
            continue;
        }
        int chosen = -1;
        for (int s = 0; s < num_shards; ++s) {
            bool fresh = true;
            for (const std::string& tag : z.tags) {
                if (shards_of_tag[tag].count(s) != 0) {
                    fresh = false;
                    break;
                }
            }
            if (fresh && (chosen < 0 || load[static_cast<std::size_t>(s)] <
                                            load[static_cast<std::size_t>(chosen)])) {
                chosen = s;
            }
        }
        if (chosen < 0) {
            // The multiplicity precondition already guarantees the
            // confinement invariant; fall back to the lightest shard.
            chosen = static_cast<int>(std::min_element(load.begin(), load.end()) - load.begin());
        }
        plan.assignment[i] = chosen;
        load[static_cast<std::size_t>(chosen)] += 1;
        for (const std::string& tag : z.tags) {
            shards_of_tag[tag].insert(chosen);
        }
    }

    // Seeded round-robin over the untagged remainder.
    std::mt19937_64 rng(derive_seed(seed, "shard-plan"));
    int next = static_cast<int>(rng() % static_cast<std::uint64_t>(num_shards));
    for (std::size_t i = 0; i < d.datapoints.size(); ++i) {
        if (plan.assignment[i] >= 0) {
            continue;
        }
        plan.assignment[i] = next;
        next = (next + 1) % num_shards;
    }

    validate_plan(plan, d);
    return plan;
}

ShardPlan plan_shards_colocating_duplicates(const Dataset& d, int m, std::uint64_t seed) {
    const Dataset unique = deduplicate(d);
    const ShardPlan base = plan_shards(unique, m, seed);
    std::unordered_map<std::string, int> shard_of_doc;
    {
        std::size_t u = 0;
        for (const Datapoint& z : unique.datapoints) {
            shard_of_doc.emplace(trimmed(z.doc), base.assignment[u]);
            ++u;
        }
    }
    ShardPlan plan;
    plan.num_shards = base.num_shards;
    plan.assignment.reserve(d.datapoints.size());
    for (const Datapoint& z : d.datapoints) {
        plan.assignment.push_back(shard_of_doc.at(trimmed(z.doc)));
    }
    validate_plan(plan, d);
    return plan;
}

void validate_plan(const ShardPlan& plan, const Dataset& d) {
    if (plan.num_shards < 2) {
        throw InvalidInput("ShardPlan: need at least two shards");
    }
    if (plan.assignment.size() != d.datapoints.size()) {
        throw InvalidInput("ShardPlan: assignment does not cover the dataset");
    }
    std::map<std::string, std::set<int>> shards_of_tag;
    for (std::size_t i = 0; i < d.datapoints.size(); ++i) {
        const int s = plan.assignment[i];
        if (s < 0 || s >= plan.num_shards) {
            throw InvalidInput("ShardPlan: datapoint " + std::to_string(i) +
                               " has out-of-range shard " + std::to_string(s));
        }
        for (const std::string& tag : d.datapoints[i].tags) {
            shards_of_tag[tag].insert(s);
        }
    }
    for (const auto& [tag, shards] : shards_of_tag) {
        if (static_cast<int>(shards.size()) > plan.num_shards - 1) {
            throw InvalidInput("ShardPlan: tag \"" + tag + "\" touches every shard");
        }
    }
}

const ConditionalModel& SafeCover::safe_model(const std::string& tag) const {
    auto it = safe_index.find(tag);
    if (it == safe_index.end()) {
        throw InvalidInput("SafeCover: unknown tag \"" + tag + "\"");
    }
    return *models.at(it->second);
}

SafeCover build_safe_cover(const Dataset& d, const ShardPlan& plan,
                           const TrainerConfig& trainer) {
    validate_plan(plan, d);

    // One shared vocabulary from the full dataset, so shard models and any
    // full-data model live on the same alphabet.
    std::vector<std::string> words;
    for (const Datapoint& z : d.datapoints) {
        for (std::string& t : split_tokens(z.doc)) {
            words.push_back(std::move(t));
        }
    }
    const Vocab vocab = Vocab::from_words(words);

    SafeCover cover;
    for (int s = 0; s < plan.num_shards; ++s) {
        std::vector<std::string> shard_docs;
        for (std::size_t i = 0; i < d.datapoints.size(); ++i) {
            if (plan.assignment[i] == s) {
                shard_docs.push_back(d.datapoints[i].doc);
            }
        }
        if (shard_docs.empty()) {
            throw InvalidInput("build_safe_cover: shard " + std::to_string(s) + " is empty");
        }
        cover.models.push_back(std::make_shared<NGramModel>(
            NGramModel::train(shard_docs, trainer.n, trainer.alpha, vocab)));
    }

    // Smallest C-free shard index, deterministically.
    std::map<std::string, std::set<int>> shards_of_tag;
    for (std::size_t i = 0; i < d.datapoints.size(); ++i) {
        for (const std::string& tag : d.datapoints[i].tags) {
            shards_of_tag[tag].insert(plan.assignment[i]);
        }
    }
    for (const auto& [tag, shards] : shards_of_tag) {
        for (int s = 0; s < plan.num_shards; ++s) {
            if (shards.count(s) == 0) {
                cover.safe_index[tag] = static_cast<std::size_t>(s);
                break;
            }
        }
    }
    return cover;
}

void validate_cover(const SafeCover& cover, const Dataset& d, const ShardPlan& plan) {
    validate_plan(plan, d);
    if (cover.models.size() != static_cast<std::size_t>(plan.num_shards)) {
        throw InvalidInput("SafeCover: model count does not match the plan");
    }
    for (const auto& [tag, count] : d.tag_multiplicities()) {
        (void)count;
        auto it = cover.safe_index.find(tag);
        if (it == cover.safe_index.end()) {
            throw InvalidInput("SafeCover: tag \"" + tag + "\" has no safe model");
        }
        for (std::size_t i = 0; i < d.datapoints.size(); ++i) {
            if (d.datapoints[i].tags.count(tag) != 0 &&
                plan.assignment[i] == static_cast<int>(it->second)) {
                throw InvalidInput("SafeCover: safe shard for tag \"" + tag +
                                   "\" contains a tagged datapoint");
            }
        }
    }
}

NGramModel leave_one_out(const Dataset& d, const std::string& tag,
                         const TrainerConfig& trainer) {
    std::vector<std::string> docs;
    for (const Datapoint& z : d.datapoints) {
        if (z.tags.count(tag) == 0) {
            docs.push_back(z.doc);
        }
    }
    if (docs.empty()) {
        throw InvalidInput("leave_one_out: removing tag \"" + tag + "\" empties the dataset");
    }
    return NGramModel::train(docs, trainer.n, trainer.alpha);
}

}  // namespace naf
