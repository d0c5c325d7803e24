#pragma once

#include <span>
#include <vector>

#include "naf/categorical.hpp"
#include "naf/model.hpp"
#include "naf/sharding.hpp"

namespace naf {

enum class Divergence {
    kMax,  // worst-case log ratio; combiner = renormalized pointwise minimum
    kKl,   // expected log ratio; combiner = renormalized geometric mean
};

const char* divergence_name(Divergence d);
Divergence divergence_from_name(std::string_view name);

/**
 * One combination step: the combined distribution, its partition mass Z, and
 * the a-priori bound on the divergence from the combined distribution to any
 * source. With m+1 sources the bound is -log2 Z for the max divergence and
 * -(m+1) log2 Z for KL; for two sources Z equals 1-TV (max) or 1-H^2 (KL).
 */
struct CombineResult {
    Categorical dist;
    double z = 0.0;
    Bits k_bound;
};

/**
 * Combine aligned source distributions: pointwise minimum (max divergence)
 * or elementwise geometric mean (KL), renormalized. The geometric mean is
 * evaluated in log space; labels where any source has zero mass drop out, so
 * the output support is the intersection of source supports. Throws
 * NoOverlap when the supports are disjoint (Z below 1e-12).
 */
CombineResult combine_next(std::span<const Categorical> sources, Divergence divergence);

/**
 * The combined model applied per token context. Exact joint renormalization
 * is intractable for autoregressive models, so combination happens on each
 * next-token distribution, exactly as one would run it on a large model's
 * logits.
 */
class CPDeltaModel : public ConditionalModel {
public:
    CPDeltaModel(std::vector<ModelPtr> sources, Divergence divergence);

    const Vocab& vocab() const override { return vocab_; }
    Categorical next_token_dist(std::span<const std::string> context) const override;

    // Full combination result for one context, including Z and the bound.
    CombineResult combine_at(std::span<const std::string> context) const;

    Divergence divergence() const { return divergence_; }
    const std::vector<ModelPtr>& sources() const { return sources_; }

private:
    std::vector<ModelPtr> sources_;
    Divergence divergence_;
    Vocab vocab_;
};

// Builds the combiner over a trained cover. Requires at least two models;
// n-gram sources must share one vocabulary.
CPDeltaModel cp_delta_model(const SafeCover& cover, Divergence divergence);

/**
 * Chain-rule bound for a complete sequence: the sum over y's token positions
 * of the per-context bound. For the max divergence this upper-bounds
 * log2(p(y|x)/q_i(y|x)) for every source i and this exact y; for KL the
 * per-path sums upper-bound the sequence-level KL divergence only in
 * expectation over y ~ p.
 */
Bits sequence_k_bound(const CPDeltaModel& model, std::span<const std::string> prompt,
                      std::span<const std::string> y, int max_len);

/**
 * Exact sequence-level combination for enumerable models: materializes each
 * source's full output distribution and combines once. Reference point for
 * comparing against the per-token composition above.
 */
CombineResult combine_sequence_dist(std::span<const ModelPtr> sources,
                                    std::span<const std::string> prompt, int max_len,
                                    Divergence divergence,
                                    std::size_t cap = kDefaultEnumerationCap);

}  // namespace naf
