#include "naf/categorical.hpp"

#include <algorithm>
#include <cmath>

#include "naf/numeric.hpp"

namespace naf {

Categorical::Categorical(std::vector<std::string> labels, std::vector<double> probs)
    : labels_(std::move(labels)), probs_(std::move(probs)) {
    if (labels_.empty()) {
        throw InvalidInput("Categorical: empty alphabet");
    }
    if (labels_.size() != probs_.size()) {
        throw InvalidInput("Categorical: labels and probs differ in length");
    }
    index_.reserve(labels_.size());
    NeumaierSum total;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const double p = probs_[i];
        if (!(p >= 0.0) || std::isnan(p)) {
            throw InvalidInput("Categorical: negative or NaN probability for label \"" +
                               labels_[i] + "\"");
        }
        if (!index_.emplace(labels_[i], i).second) {
            throw InvalidInput("Categorical: duplicate label \"" + labels_[i] + "\"");
        }
        total.add(p);
    }
    if (std::abs(total.value() - 1.0) > kNormalizationTol) {
        throw InvalidInput("Categorical: probabilities sum to " +
                           std::to_string(total.value()) + ", not 1 within tolerance");
    }
}

double Categorical::prob_of(std::string_view label) const {
    auto it = index_.find(label);
    return it == index_.end() ? 0.0 : probs_[it->second];
}

bool Categorical::has_label(std::string_view label) const {
    return index_.find(label) != index_.end();
}

std::pair<Categorical, double> renormalize(const UnnormalizedWeights& w) {
    if (w.labels.size() != w.weights.size()) {
        throw InvalidInput("renormalize: labels and weights differ in length");
    }
    NeumaierSum total;
    for (std::size_t i = 0; i < w.weights.size(); ++i) {
        if (!(w.weights[i] >= 0.0) || std::isnan(w.weights[i])) {
            throw InvalidInput("renormalize: negative or NaN weight for label \"" +
                               w.labels[i] + "\"");
        }
        total.add(w.weights[i]);
    }
    const double z = total.value();
    if (!(z > 1e-12)) {
        throw NoOverlap("renormalize: weights sum to zero; sources share no support");
    }
    std::vector<double> probs(w.weights.size());
    for (std::size_t i = 0; i < w.weights.size(); ++i) {
        probs[i] = w.weights[i] / z;
    }
    return {Categorical(w.labels, std::move(probs)), z};
}

Aligned align(std::span<const Categorical> dists) {
    Aligned out;
    std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> pos;
    for (const Categorical& d : dists) {
        for (const std::string& label : d.labels()) {
            if (pos.emplace(label, out.labels.size()).second) {
                out.labels.push_back(label);
            }
        }
    }
    out.rows.reserve(dists.size());
    for (const Categorical& d : dists) {
        std::vector<double> row(out.labels.size(), 0.0);
        for (std::size_t i = 0; i < d.size(); ++i) {
            row[pos.at(d.labels()[i])] = d.probs()[i];
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

Aligned align(const Categorical& p, const Categorical& q) {
    const Categorical dists[] = {p, q};
    return align(std::span<const Categorical>(dists, 2));
}

double tv(const Categorical& p, const Categorical& q) {
    const Aligned a = align(p, q);
    NeumaierSum sum;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        sum.add(std::abs(a.rows[0][i] - a.rows[1][i]));
    }
    return std::clamp(0.5 * sum.value(), 0.0, 1.0);
}

double hellinger_sq(const Categorical& p, const Categorical& q) {
    const Aligned a = align(p, q);
    NeumaierSum sum;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        sum.add(std::sqrt(a.rows[0][i] * a.rows[1][i]));
    }
    return std::clamp(1.0 - sum.value(), 0.0, 1.0);
}

Bits kl(const Categorical& p, const Categorical& q) {
    const Aligned a = align(p, q);
    NeumaierSum sum;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        const double pi = a.rows[0][i];
        if (pi == 0.0) {
            continue;  // 0 log(0/q) = 0
        }
        const double qi = a.rows[1][i];
        if (qi == 0.0) {
            return Bits::infinity();
        }
        sum.add(pi * std::log2(pi / qi));
    }
    return Bits(std::max(0.0, sum.value()));
}

Bits dmax(const Categorical& p, const Categorical& q) {
    const Aligned a = align(p, q);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        const double pi = a.rows[0][i];
        if (pi == 0.0) {
            continue;  // maximization restricted to Supp(p)
        }
        const double qi = a.rows[1][i];
        if (qi == 0.0) {
            return Bits::infinity();
        }
        worst = std::max(worst, std::log2(pi / qi));
    }
    return Bits(std::max(0.0, worst));
}

}  // namespace naf
