#include "naf/cp_k.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "naf/errors.hpp"
#include "naf/numeric.hpp"

namespace naf {

const char* cpk_variant_name(CpkVariant v) {
    return v == CpkVariant::kHard ? "hard" : "smooth";
}

CpkVariant cpk_variant_from_name(std::string_view name) {
    if (name == "hard") {
        return CpkVariant::kHard;
    }
    if (name == "smooth") {
        return CpkVariant::kSmooth;
    }
    throw InvalidInput("unknown variant \"" + std::string(name) + "\" (expected hard|smooth)");
}

namespace {

void check_sampler(const CPkSampler& s) {
    if (s.base == nullptr) {
        throw InvalidInput("CPkSampler: base model missing");
    }
    if (s.cover.empty()) {
        throw InvalidInput("CPkSampler: cover is empty");
    }
    for (const ModelPtr& q : s.cover) {
        if (q == nullptr) {
            throw InvalidInput("CPkSampler: null cover model");
        }
    }
    if (s.k < Bits(0.0)) {
        throw InvalidInput("CPkSampler: threshold k must be >= 0");
    }
    if (s.max_len < 1 || s.max_attempts == 0) {
        throw InvalidInput("CPkSampler: bad max_len or max_attempts");
    }
    if (s.streaming && s.variant == CpkVariant::kSmooth) {
        throw InvalidInput("CPkSampler: streaming rejection applies to the hard variant only");
    }
    // Trained models must share one alphabet for the ratio test to compare
    // like with like; synthesized table vocabularies are exempt.
    const NGramModel* ref = dynamic_cast<const NGramModel*>(s.base.get());
    for (const ModelPtr& q : s.cover) {
        const auto* ng = dynamic_cast<const NGramModel*>(q.get());
        if (ng == nullptr) {
            continue;
        }
        if (ref == nullptr) {
            ref = ng;
        } else if (!(ng->vocab() == ref->vocab())) {
            throw InvalidInput("CPkSampler: cover and base vocabularies differ");
        }
    }
}

Bits min_cover_score(const CPkSampler& s, std::span<const std::string> prompt,
                     std::span<const std::string> y) {
    Bits lq_min = Bits::infinity();
    for (const ModelPtr& q : s.cover) {
        lq_min = std::min(lq_min, score_sequence(*q, prompt, y, s.max_len));
    }
    return lq_min;
}

}  // namespace

Bits log_ratio(const CPkSampler& s, std::span<const std::string> prompt,
               std::span<const std::string> y) {
    const Bits lp = score_sequence(*s.base, prompt, y, s.max_len);
    if (!lp.finite()) {
        throw InvalidInput("log_ratio: y has zero probability under the base model");
    }
    return lp - min_cover_score(s, prompt, y);
}

double smooth_accept_prob(Bits k, Bits lp, Bits lq_min) {
    if (!k.finite()) {
        return 1.0;  // threshold never binds
    }
    if (lq_min == Bits::neg_infinity()) {
        return 0.0;  // some cover model assigns y zero mass
    }
    const double exponent = k.value() + lq_min.value() - lp.value();
    return exponent >= 0.0 ? 1.0 : std::exp2(exponent);
}

namespace {

// True iff every prefix of y (scored with the same token probabilities the
// full-path test uses) stays within the threshold.
bool streaming_accepts(const CPkSampler& s, std::span<const std::string> prompt,
                       std::span<const std::string> y) {
    std::vector<std::string> context(prompt.begin(), prompt.end());
    double lp = 0.0;
    std::vector<double> lq(s.cover.size(), 0.0);
    for (const std::string& tok : y) {
        lp += std::log2(s.base->token_prob(context, tok));
        double lq_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < s.cover.size(); ++i) {
            lq[i] += std::log2(s.cover[i]->token_prob(context, tok));
            lq_min = std::min(lq_min, lq[i]);
        }
        if (!(lp - lq_min <= s.k.value())) {
            return false;
        }
        context.push_back(tok);
    }
    return true;
}

CpkDraw sample_streaming(const CPkSampler& s, std::span<const std::string> prompt,
                         std::mt19937_64& rng) {
    for (std::uint64_t attempt = 1; attempt <= s.max_attempts; ++attempt) {
        std::vector<std::string> context(prompt.begin(), prompt.end());
        std::vector<std::string> out;
        double lp = 0.0;
        std::vector<double> lq(s.cover.size(), 0.0);
        bool rejected = false;
        for (int step = 0; step < s.max_len; ++step) {
            const Categorical dist = s.base->next_token_dist(context);
            const std::size_t pick = sample_index(dist, rng);
            const std::string& tok = dist.labels()[pick];
            out.push_back(tok);
            lp += std::log2(dist.probs()[pick]);
            double lq_min = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < s.cover.size(); ++i) {
                lq[i] += std::log2(s.cover[i]->token_prob(context, tok));
                lq_min = std::min(lq_min, lq[i]);
            }
            if (!(lp - lq_min <= s.k.value())) {
                rejected = true;
                break;
            }
            context.push_back(tok);
            if (tok == Vocab::kEos) {
                break;
            }
        }
        if (!rejected) {
            return {std::move(out), attempt};
        }
    }
    throw Exhaustion(s.max_attempts);
}

}  // namespace

CpkDraw cpk_sample(const CPkSampler& s, std::span<const std::string> prompt,
                   std::mt19937_64& rng) {
    check_sampler(s);
    if (s.streaming) {
        return sample_streaming(s, prompt, rng);
    }
    for (std::uint64_t attempt = 1; attempt <= s.max_attempts; ++attempt) {
        std::vector<std::string> y = sample_sequence(*s.base, prompt, rng, s.max_len);
        const Bits lp = score_sequence(*s.base, prompt, y, s.max_len);
        const Bits lq_min = min_cover_score(s, prompt, y);
        if (s.variant == CpkVariant::kHard) {
            if (lp - lq_min <= s.k) {
                return {std::move(y), attempt};
            }
        } else {
            if (uniform01(rng) < smooth_accept_prob(s.k, lp, lq_min)) {
                return {std::move(y), attempt};
            }
        }
    }
    throw Exhaustion(s.max_attempts);
}

double exact_nu(const CPkSampler& s, std::span<const std::string> prompt, std::size_t cap) {
    check_sampler(s);
    NeumaierSum nu;
    for_each_sequence(*s.base, prompt, s.max_len, cap,
                      [&](std::span<const std::string> y, double /*prob*/) {
                          const Bits lp = score_sequence(*s.base, prompt, y, s.max_len);
                          if (s.variant == CpkVariant::kHard) {
                              const bool ok =
                                  s.streaming
                                      ? streaming_accepts(s, prompt, y)
                                      : lp - min_cover_score(s, prompt, y) <= s.k;
                              if (ok) {
                                  nu.add(std::exp2(lp.value()));
                              }
                          } else {
                              nu.add(std::exp2(lp.value()) *
                                     smooth_accept_prob(s.k, lp,
                                                        min_cover_score(s, prompt, y)));
                          }
                      });
    return std::clamp(nu.value(), 0.0, 1.0);
}

AcceptanceStats monte_carlo_nu(const CPkSampler& s, std::span<const std::string> prompt,
                               std::uint64_t trials, std::uint64_t seed) {
    check_sampler(s);
    if (trials == 0) {
        throw InvalidInput("monte_carlo_nu: trials must be >= 1");
    }
    std::uint64_t accepted = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        std::mt19937_64 rng(derive_seed(seed, t));
        std::vector<std::string> y = sample_sequence(*s.base, prompt, rng, s.max_len);
        if (s.variant == CpkVariant::kHard) {
            const bool ok = s.streaming
                                ? streaming_accepts(s, prompt, y)
                                : log_ratio(s, prompt, y) <= s.k;
            accepted += ok ? 1 : 0;
        } else {
            const Bits lp = score_sequence(*s.base, prompt, y, s.max_len);
            const Bits lq_min = min_cover_score(s, prompt, y);
            accepted += (uniform01(rng) < smooth_accept_prob(s.k, lp, lq_min)) ? 1 : 0;
        }
    }
    AcceptanceStats stats;
    stats.trials = trials;
    stats.nu_hat = static_cast<double>(accepted) / static_cast<double>(trials);
    const WilsonInterval w = wilson_interval_95(accepted, trials);
    stats.ci_low = w.low;
    stats.ci_high = w.high;
    stats.exact = false;
    return stats;
}

AcceptanceStats estimate_nu(const CPkSampler& s, std::span<const std::string> prompt,
                            std::uint64_t trials, std::uint64_t seed, std::size_t cap) {
    try {
        const double nu = exact_nu(s, prompt, cap);
        AcceptanceStats stats;
        stats.nu_hat = nu;
        stats.ci_low = nu;
        stats.ci_high = nu;
        stats.trials = 0;
        stats.exact = true;
        return stats;
    } catch (const EnumerationInfeasible&) {
        return monte_carlo_nu(s, prompt, trials, seed);
    }
}

Bits k_tilde(Bits k, double nu) {
    if (nu <= 0.0) {
        throw UndefinedBound("k_tilde: acceptance probability is 0, no finite bound");
    }
    if (nu > 1.0) {
        throw InvalidInput("k_tilde: nu must be in (0, 1]");
    }
    return k + Bits(std::log2(1.0 / nu));
}

DistanceToCouple compute_dx(const ConditionalModel& p, std::span<const ModelPtr> cover,
                            std::span<const std::string> prompt, int max_len,
                            std::size_t cap) {
    if (cover.empty()) {
        throw InvalidInput("compute_dx: cover is empty");
    }
    NeumaierSum sum;
    for_each_sequence(p, prompt, max_len, cap,
                      [&](std::span<const std::string> y, double /*prob*/) {
                          const double py =
                              std::exp2(score_sequence(p, prompt, y, max_len).value());
                          double min_q = std::numeric_limits<double>::infinity();
                          for (const ModelPtr& q : cover) {
                              min_q = std::min(
                                  min_q,
                                  std::exp2(score_sequence(*q, prompt, y, max_len).value()));
                          }
                          if (py > min_q) {
                              sum.add(py - min_q);
                          }
                      });
    return DistanceToCouple{std::clamp(sum.value(), 0.0, 1.0)};
}

double dx_categorical(const Categorical& p, std::span<const Categorical> cover) {
    if (cover.empty()) {
        throw InvalidInput("dx_categorical: cover is empty");
    }
    std::vector<Categorical> all;
    all.reserve(cover.size() + 1);
    all.push_back(p);
    for (const Categorical& q : cover) {
        all.push_back(q);
    }
    const Aligned a = align(all);
    NeumaierSum sum;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        double min_q = std::numeric_limits<double>::infinity();
        for (std::size_t j = 1; j < a.rows.size(); ++j) {
            min_q = std::min(min_q, a.rows[j][i]);
        }
        if (a.rows[0][i] > min_q) {
            sum.add(a.rows[0][i] - min_q);
        }
    }
    return std::clamp(sum.value(), 0.0, 1.0);
}

EfficiencyBound efficiency_bound(double d, CpkVariant variant) {
    if (d < 0.0) {
        throw InvalidInput("efficiency_bound: d must be in [0, 1)");
    }
    if (d >= 1.0) {
        throw NoOverlap("efficiency_bound: d = 1, no finite-k model exists for this cover");
    }
    if (variant == CpkVariant::kHard) {
        return {Bits(std::log2(2.0 / (1.0 - d))), (1.0 - d) / (1.0 + d)};
    }
    return {Bits(0.0), 1.0 - d};
}

AnalyticPk analytic_pk(const CPkSampler& s, std::span<const std::string> prompt,
                       std::size_t cap) {
    check_sampler(s);
    std::vector<std::string> labels;
    std::vector<double> weights;
    for_each_sequence(*s.base, prompt, s.max_len, cap,
                      [&](std::span<const std::string> y, double /*prob*/) {
                          const Bits lp = score_sequence(*s.base, prompt, y, s.max_len);
                          double w = 0.0;
                          if (s.variant == CpkVariant::kHard) {
                              const bool ok =
                                  s.streaming
                                      ? streaming_accepts(s, prompt, y)
                                      : lp - min_cover_score(s, prompt, y) <= s.k;
                              if (ok) {
                                  w = std::exp2(lp.value());
                              }
                          } else {
                              w = std::exp2(lp.value()) *
                                  smooth_accept_prob(s.k, lp, min_cover_score(s, prompt, y));
                          }
                          if (w > 0.0) {
                              labels.push_back(join_tokens(y));
                              weights.push_back(w);
                          }
                      });
    if (labels.empty()) {
        throw UndefinedBound("analytic_pk: acceptance probability is 0 at this threshold");
    }
    auto [dist, nu] = renormalize(UnnormalizedWeights{std::move(labels), std::move(weights)});
    return {std::move(dist), nu};
}

Bits log_ratio_percentile(const ModelPtr& base, std::span<const ModelPtr> cover,
                          std::span<const std::string> prompt, int max_len,
                          std::uint64_t n_samples, double pct, std::uint64_t seed) {
    if (base == nullptr || cover.empty() || n_samples == 0) {
        throw InvalidInput("log_ratio_percentile: bad arguments");
    }
    CPkSampler probe;
    probe.base = base;
    probe.cover.assign(cover.begin(), cover.end());
    probe.k = Bits::infinity();
    probe.max_len = max_len;
    std::mt19937_64 rng(derive_seed(seed, "ratio-percentile"));
    std::vector<double> ratios;
    ratios.reserve(n_samples);
    for (std::uint64_t i = 0; i < n_samples; ++i) {
        std::vector<std::string> y = sample_sequence(*base, prompt, rng, max_len);
        ratios.push_back(log_ratio(probe, prompt, y).value());
    }
    return Bits(percentile(std::move(ratios), pct));
}

}  // namespace naf
