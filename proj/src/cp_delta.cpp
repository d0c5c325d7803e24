#include "naf/cp_delta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "naf/errors.hpp"
#include "naf/numeric.hpp"

namespace naf {

const char* divergence_name(Divergence d) {
    return d == Divergence::kMax ? "max" : "kl";
}

Divergence divergence_from_name(std::string_view name) {
    if (name == "max") {
        return Divergence::kMax;
    }
    if (name == "kl") {
        return Divergence::kKl;
    }
    throw InvalidInput("unknown divergence \"" + std::string(name) + "\" (expected max|kl)");
}

CombineResult combine_next(std::span<const Categorical> sources, Divergence divergence) {
    if (sources.size() < 2) {
        throw InvalidInput("combine_next: need at least two sources");
    }
    const Aligned a = align(sources);
    const double inv_count = 1.0 / static_cast<double>(sources.size());

    std::vector<std::string> labels;
    std::vector<double> weights;
    labels.reserve(a.labels.size());
    weights.reserve(a.labels.size());
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        double w;
        if (divergence == Divergence::kMax) {
            w = std::numeric_limits<double>::infinity();
            for (const auto& row : a.rows) {
                w = std::min(w, row[i]);
            }
        } else {
            // Geometric mean in log space; -inf propagates to weight 0.
            double log_sum = 0.0;
            for (const auto& row : a.rows) {
                log_sum += std::log2(row[i]);
            }
            w = std::exp2(log_sum * inv_count);
        }
        if (w > 0.0) {
            labels.push_back(a.labels[i]);
            weights.push_back(w);
        }
    }
    if (labels.empty()) {
        throw NoOverlap("combine_next: sources have disjoint supports");
    }

    auto [dist, z] = renormalize(UnnormalizedWeights{std::move(labels), std::move(weights)});
    CombineResult out{std::move(dist), z, Bits(0.0)};
    const double neg_log_z = -std::log2(z);
    out.k_bound = divergence == Divergence::kMax
                      ? Bits(neg_log_z)
                      : Bits(static_cast<double>(sources.size()) * neg_log_z);
    return out;
}

namespace {

Vocab merged_vocab(const std::vector<ModelPtr>& sources) {
    if (sources.size() < 2) {
        throw InvalidInput("CPDeltaModel: need at least two sources");
    }
    for (const ModelPtr& m : sources) {
        if (m == nullptr) {
            throw InvalidInput("CPDeltaModel: null source model");
        }
    }
    // Trained n-gram sources must share one alphabet; synthesized table
    // vocabularies merge by union.
    const NGramModel* first_ngram = nullptr;
    for (const ModelPtr& m : sources) {
        if (const auto* ng = dynamic_cast<const NGramModel*>(m.get())) {
            if (first_ngram == nullptr) {
                first_ngram = ng;
            } else if (!(ng->vocab() == first_ngram->vocab())) {
                throw InvalidInput("CPDeltaModel: source vocabularies differ; "
                                   "train shard models over a shared vocabulary");
            }
        }
    }
    std::vector<std::string> words;
    for (const ModelPtr& m : sources) {
        for (const std::string& t : m->vocab().tokens()) {
            if (t != Vocab::kBos && t != Vocab::kEos && t != Vocab::kUnk) {
                words.push_back(t);
            }
        }
    }
    return Vocab::from_words(words);
}

}  // namespace

CPDeltaModel::CPDeltaModel(std::vector<ModelPtr> sources, Divergence divergence)
    : sources_(std::move(sources)), divergence_(divergence), vocab_(merged_vocab(sources_)) {}

CombineResult CPDeltaModel::combine_at(std::span<const std::string> context) const {
    std::vector<Categorical> dists;
    dists.reserve(sources_.size());
    for (const ModelPtr& m : sources_) {
        dists.push_back(m->next_token_dist(context));
    }
    return combine_next(dists, divergence_);
}

Categorical CPDeltaModel::next_token_dist(std::span<const std::string> context) const {
    return combine_at(context).dist;
}

CPDeltaModel cp_delta_model(const SafeCover& cover, Divergence divergence) {
    return CPDeltaModel(cover.models, divergence);
}

Bits sequence_k_bound(const CPDeltaModel& model, std::span<const std::string> prompt,
                      std::span<const std::string> y, int max_len) {
    if (y.empty() || y.size() > static_cast<std::size_t>(max_len)) {
        throw InvalidInput("sequence_k_bound: y is not a complete sequence");
    }
    std::vector<std::string> context(prompt.begin(), prompt.end());
    Bits total(0.0);
    for (const std::string& tok : y) {
        total += model.combine_at(context).k_bound;
        context.push_back(tok);
    }
    return total;
}

CombineResult combine_sequence_dist(std::span<const ModelPtr> sources,
                                    std::span<const std::string> prompt, int max_len,
                                    Divergence divergence, std::size_t cap) {
    std::vector<Categorical> dists;
    dists.reserve(sources.size());
    for (const ModelPtr& m : sources) {
        dists.push_back(sequence_distribution(*m, prompt, max_len, cap));
    }
    return combine_next(dists, divergence);
}

}  // namespace naf
