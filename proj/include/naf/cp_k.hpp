#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "naf/bits.hpp"
#include "naf/categorical.hpp"
#include "naf/model.hpp"

namespace naf {

enum class CpkVariant {
    kHard,    // accept iff log2(p(y|x)/q(y|x)) <= k for every cover model q
    kSmooth,  // accept with probability min{1, min_q 2^k q(y|x) / p(y|x)}
};

const char* cpk_variant_name(CpkVariant v);
CpkVariant cpk_variant_from_name(std::string_view name);

/**
 * Rejection sampler wrapping a base model with a cover of safe models.
 * Sampling from the induced model p_k is exactly base sampling conditioned
 * on acceptance; all ratio tests run on full-sequence log probabilities.
 *
 * `streaming` (hard variant only) aborts an attempt as soon as the running
 * prefix ratio exceeds k. That induces a different p_k than the full-path
 * test, but every accepted sequence still satisfies the threshold, so the
 * k + log2(1/nu) guarantee is unchanged.
 */
struct CPkSampler {
    ModelPtr base;
    std::vector<ModelPtr> cover;
    Bits k{0.0};
    CpkVariant variant = CpkVariant::kHard;
    int max_len = 8;
    std::uint64_t max_attempts = 10000;
    bool streaming = false;
};

// Full-sequence threshold statistic: log2 p(y|x) - min over the cover of
// log2 q(y|x). +inf when some cover model assigns y zero mass.
Bits log_ratio(const CPkSampler& s, std::span<const std::string> prompt,
               std::span<const std::string> y);

// Probability that the smooth variant keeps y, min{1, 2^(k + lq_min - lp)}.
double smooth_accept_prob(Bits k, Bits lp, Bits lq_min);

struct CpkDraw {
    std::vector<std::string> tokens;
    std::uint64_t attempts = 0;
};

// One sample from p_k. Throws Exhaustion(max_attempts) when no draw is
// accepted, signalling that nu_k(x) is too small for this threshold.
CpkDraw cpk_sample(const CPkSampler& s, std::span<const std::string> prompt,
                   std::mt19937_64& rng);

struct AcceptanceStats {
    double nu_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    std::uint64_t trials = 0;
    bool exact = false;
};

// Acceptance probability of a single attempt. Uses exhaustive summation
// (exact = true, degenerate interval) whenever the sequence space fits the
// enumeration cap; otherwise Monte Carlo with a Wilson 95% interval and a
// deterministic per-trial seed derivation.
AcceptanceStats estimate_nu(const CPkSampler& s, std::span<const std::string> prompt,
                            std::uint64_t trials, std::uint64_t seed,
                            std::size_t cap = kDefaultEnumerationCap);

double exact_nu(const CPkSampler& s, std::span<const std::string> prompt,
                std::size_t cap = kDefaultEnumerationCap);

AcceptanceStats monte_carlo_nu(const CPkSampler& s, std::span<const std::string> prompt,
                               std::uint64_t trials, std::uint64_t seed);

// The effective bound k + log2(1/nu). Throws UndefinedBound when nu = 0.
Bits k_tilde(Bits k, double nu);

/// Total positive excess of p over the pointwise minimum of the cover.
struct DistanceToCouple {
    double d = 0.0;
};

DistanceToCouple compute_dx(const ConditionalModel& p, std::span<const ModelPtr> cover,
                            std::span<const std::string> prompt, int max_len,
                            std::size_t cap = kDefaultEnumerationCap);

double dx_categorical(const Categorical& p, std::span<const Categorical> cover);

struct EfficiencyBound {
    Bits k_required{0.0};
    double nu_lower = 0.0;
};

// The acceptance-probability theorem's threshold and lower bound: hard needs
// k >= log2(2/(1-d)) for nu >= (1-d)/(1+d); smooth gives nu >= 1-d at any
// k >= 0. Throws NoOverlap for d >= 1 (no finite-k model exists).
EfficiencyBound efficiency_bound(double d, CpkVariant variant);

struct AnalyticPk {
    Categorical dist;  // labels are joined sequences
    double nu = 0.0;
};

// The induced distribution p_k computed exactly by enumeration, using the
// same ratio and acceptance arithmetic as the sampler.
AnalyticPk analytic_pk(const CPkSampler& s, std::span<const std::string> prompt,
                       std::size_t cap = kDefaultEnumerationCap);

// Empirical percentile (nearest rank) of the threshold statistic over
// sampled base outputs; the usual heuristic for choosing k (the median
// gives nu = 1/2 and costs one extra bit in the final bound).
Bits log_ratio_percentile(const ModelPtr& base, std::span<const ModelPtr> cover,
                          std::span<const std::string> prompt, int max_len,
                          std::uint64_t n_samples, double pct, std::uint64_t seed);

}  // namespace naf
