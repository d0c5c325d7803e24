#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace naf {

/**
 * Compensated (Neumaier) accumulator. Keeps summation error near one ulp of
 * the result, which the partition-function identities rely on.
 */
class NeumaierSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double neumaier_sum(std::span<const double> values);

// Uniform double in [0, 1) from the top 53 bits of the engine output.
// Self-contained so sampled streams are identical across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Deterministic per-purpose / per-trial seed derivation from one global seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

struct WilsonInterval {
    double low = 0.0;
    double high = 1.0;
};

// 95% Wilson score interval for a binomial proportion.
WilsonInterval wilson_interval_95(std::uint64_t successes, std::uint64_t trials);

// Survival function of the chi-squared distribution (p-value of a computed
// goodness-of-fit statistic with `dof` degrees of freedom).
double chi_squared_pvalue(double statistic, double dof);

// Nearest-rank percentile of a sample, pct in [0, 100].
double percentile(std::vector<double> values, double pct);

}  // namespace naf
