#include "naf/numeric.hpp"

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "naf/errors.hpp"

namespace naf {

double neumaier_sum(std::span<const double> values) {
    NeumaierSum acc;
    for (double v : values) {
        acc.add(v);
    }
    return acc.value();
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    return splitmix64(splitmix64(base) ^ fnv1a64(tag));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(splitmix64(base) ^ splitmix64(index + 0x51ed2701a3c8e4d5ULL));
}

WilsonInterval wilson_interval_95(std::uint64_t successes, std::uint64_t trials) {
    if (trials == 0) {
        throw InvalidInput("wilson_interval_95: trials must be >= 1");
    }
    constexpr double z = 1.959963984540054;  // Phi^-1(0.975)
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = phat + z2 / (2.0 * n);
    const double spread = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
    WilsonInterval w;
    w.low = std::max(0.0, (center - spread) / denom);
    w.high = std::min(1.0, (center + spread) / denom);
    return w;
}

double chi_squared_pvalue(double statistic, double dof) {
    if (dof <= 0.0) {
        throw InvalidInput("chi_squared_pvalue: dof must be positive");
    }
    if (statistic <= 0.0) {
        return 1.0;
    }
    return gsl_cdf_chisq_Q(statistic, dof);
}

double percentile(std::vector<double> values, double pct) {
    if (values.empty()) {
        throw InvalidInput("percentile: empty sample");
    }
    if (pct < 0.0 || pct > 100.0) {
        throw InvalidInput("percentile: pct out of range");
    }
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    std::size_t rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
    if (rank == 0) {
        rank = 1;
    }
    return values[rank - 1];
}

}  // namespace naf
