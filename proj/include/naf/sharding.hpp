#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "naf/model.hpp"

namespace naf {

/// One training document plus the copyright works it accesses (may be empty).
struct Datapoint {
    std::string doc;
    std::set<std::string> tags;
};

struct Dataset {
    std::vector<Datapoint> datapoints;

    // Docs only, in order; the trainer input.
    std::vector<std::string> docs() const;
    // Tag -> number of datapoints carrying it.
    std::map<std::string, int> tag_multiplicities() const;
};

/**
 * Collapse exact duplicate documents (matched on whitespace-trimmed text)
 * into the first occurrence, whose tag set becomes the union of the
 * duplicates' tags. Idempotent; order otherwise preserved.
 */
Dataset deduplicate(const Dataset& d);

/**
 * Assignment of datapoints to m+1 shards such that for every tag the set of
 * shards holding its datapoints has size at most m, leaving at least one
 * tag-free shard to act as the safe model's training set.
 */
struct ShardPlan {
    int num_shards = 0;                  // m + 1
    std::vector<int> assignment;         // datapoint index -> shard index
};

/**
 * Partition the dataset into m+1 shards. Tagged datapoints are placed
 * greedily, spreading each tag's datapoints across distinct shards
 * (first fit); untagged datapoints are split by seeded round-robin for
 * balance. Throws MultiplicityViolation when a tag appears in more than m
 * datapoints.
 */
ShardPlan plan_shards(const Dataset& d, int m, std::uint64_t seed);

/**
 * Plan shards while keeping exact duplicates together: the plan is computed
 * on the deduplicated dataset and every duplicate then follows its
 * representative's shard. Tag confinement is preserved (copies of a document
 * land on exactly the shards its representative occupies), while training
 * still sees every copy. This mirrors running the sharded construction on a
 * deliberately non-deduplicated corpus.
 */
ShardPlan plan_shards_colocating_duplicates(const Dataset& d, int m, std::uint64_t seed);

// Throws InvalidInput when the plan breaks the tag-confinement invariant or
// does not cover the dataset.
void validate_plan(const ShardPlan& plan, const Dataset& d);

struct TrainerConfig {
    int n = 3;
    double alpha = 0.1;
};

/**
 * The trained shard models together with the safe assignment: for every tag
 * C, safe_index[C] is the smallest shard index whose shard holds no C-tagged
 * datapoint, so models[safe_index[C]] never accessed C.
 */
struct SafeCover {
    std::vector<ModelPtr> models;
    std::map<std::string, std::size_t> safe_index;

    const ConditionalModel& safe_model(const std::string& tag) const;
};

// Trains one n-gram per shard over the dataset-wide vocabulary and derives
// safe_index. Empty shards are an error; a model trained on nothing has no
// sensible definition here.
SafeCover build_safe_cover(const Dataset& d, const ShardPlan& plan,
                           const TrainerConfig& trainer);

// Throws InvalidInput if some tag's safe shard actually contains that tag.
void validate_cover(const SafeCover& cover, const Dataset& d, const ShardPlan& plan);

// Retrains with every datapoint accessing `tag` removed. Feasible only for
// small tag universes; per-tag cost is one full training run.
NGramModel leave_one_out(const Dataset& d, const std::string& tag,
                         const TrainerConfig& trainer);

}  // namespace naf
