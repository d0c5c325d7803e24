#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "naf/bits.hpp"
#include "naf/errors.hpp"

namespace naf {

// Heterogeneous string hashing so string_view lookups avoid allocations.
struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
        return std::hash<std::string_view>{}(s);
    }
};

/**
 * Exact finite categorical distribution over a labeled alphabet.
 *
 * Immutable after construction. Construction validates that labels are
 * unique, probabilities are non-negative, and the total mass is 1 within
 * 1e-12; out-of-tolerance inputs are rejected rather than silently
 * renormalized so upstream bugs surface here.
 */
class Categorical {
public:
    Categorical(std::vector<std::string> labels, std::vector<double> probs);

    std::size_t size() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<double>& probs() const { return probs_; }

    // Probability of a label; 0 for labels outside the alphabet.
    double prob_of(std::string_view label) const;
    bool has_label(std::string_view label) const;

    static constexpr double kNormalizationTol = 1e-12;

private:
    std::vector<std::string> labels_;
    std::vector<double> probs_;
    std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> index_;
};

/// Non-negative weights over a labeled alphabet; need not sum to 1.
struct UnnormalizedWeights {
    std::vector<std::string> labels;
    std::vector<double> weights;
};

/**
 * Normalize weights into a distribution. Returns the distribution and the
 * partition mass Z = sum of weights. Throws NoOverlap when Z is (numerically)
 * zero: the weights came from sources with disjoint support and no
 * finite-threshold protected model exists.
 */
std::pair<Categorical, double> renormalize(const UnnormalizedWeights& w);

/**
 * Distributions aligned on the union of their alphabets (first-seen label
 * order, absent labels filled with probability 0).
 */
struct Aligned {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows;  // one row per input distribution
};

Aligned align(std::span<const Categorical> dists);
Aligned align(const Categorical& p, const Categorical& q);

// Total variation distance, (1/2) sum_y |p(y) - q(y)|, in [0, 1].
double tv(const Categorical& p, const Categorical& q);

// Squared Hellinger distance, 1 - sum_y sqrt(p(y) q(y)), in [0, 1].
double hellinger_sq(const Categorical& p, const Categorical& q);

// KL divergence in bits. +inf when p has mass where q has none.
Bits kl(const Categorical& p, const Categorical& q);

// Max-KL (Renyi order infinity): max over Supp(p) of log2(p(y)/q(y)).
Bits dmax(const Categorical& p, const Categorical& q);

}  // namespace naf
