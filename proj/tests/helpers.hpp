#pragma once

// Test-side brute-force oracles. Deliberately written as plain map walks,
// independent of the library's compensated implementations: agreement here
// means the production code computes the quantity the definitions state.

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>

#include "naf/categorical.hpp"

namespace brute {

using ProbMap = std::map<std::string, double>;

inline ProbMap to_map(const naf::Categorical& c) {
    ProbMap m;
    for (std::size_t i = 0; i < c.size(); ++i) {
        m[c.labels()[i]] = c.probs()[i];
    }
    return m;
}

inline std::set<std::string> union_labels(const ProbMap& p, const ProbMap& q) {
    std::set<std::string> labels;
    for (const auto& [l, v] : p) {
        labels.insert(l);
    }
    for (const auto& [l, v] : q) {
        labels.insert(l);
    }
    return labels;
}

inline double at(const ProbMap& m, const std::string& label) {
    auto it = m.find(label);
    return it == m.end() ? 0.0 : it->second;
}

inline double tv(const ProbMap& p, const ProbMap& q) {
    double sum = 0.0;
    for (const std::string& l : union_labels(p, q)) {
        sum += std::abs(at(p, l) - at(q, l));
    }
    return 0.5 * sum;
}

inline double hellinger_sq(const ProbMap& p, const ProbMap& q) {
    double sum = 0.0;
    for (const std::string& l : union_labels(p, q)) {
        sum += std::sqrt(at(p, l) * at(q, l));
    }
    return 1.0 - sum;
}

inline double kl_bits(const ProbMap& p, const ProbMap& q) {
    double sum = 0.0;
    for (const std::string& l : union_labels(p, q)) {
        const double pl = at(p, l);
        if (pl == 0.0) {
            continue;
        }
        const double ql = at(q, l);
        if (ql == 0.0) {
            return std::numeric_limits<double>::infinity();
        }
        sum += pl * std::log2(pl / ql);
    }
    return sum;
}

inline double dmax_bits(const ProbMap& p, const ProbMap& q) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const std::string& l : union_labels(p, q)) {
        const double pl = at(p, l);
        if (pl == 0.0) {
            continue;
        }
        const double ql = at(q, l);
        if (ql == 0.0) {
            return std::numeric_limits<double>::infinity();
        }
        worst = std::max(worst, std::log2(pl / ql));
    }
    return worst;
}

}  // namespace brute
