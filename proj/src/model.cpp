#include "naf/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "naf/errors.hpp"
#include "naf/numeric.hpp"

namespace naf {

namespace {

constexpr char kCtxSep = '\x1f';  // unit separator, matches the JSON model format

void append_key(std::string& key, std::string_view token) {
    if (!key.empty()) {
        key += kCtxSep;
    }
    key += token;
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocab
// ---------------------------------------------------------------------------

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (tokens_[i].empty()) {
            throw InvalidInput("Vocab: empty token");
        }
        if (!index_.emplace(tokens_[i], i).second) {
            throw InvalidInput("Vocab: duplicate token \"" + tokens_[i] + "\"");
        }
    }
    for (const char* reserved : {kBos, kEos, kUnk}) {
        if (index_.find(std::string_view(reserved)) == index_.end()) {
            throw InvalidInput(std::string("Vocab: reserved token ") + reserved + " missing");
        }
    }
    candidates_.reserve(tokens_.size() - 1);
    for (const std::string& t : tokens_) {
        if (t != kBos) {
            candidates_.push_back(t);
        }
    }
}

Vocab Vocab::from_words(std::span<const std::string> words) {
    std::vector<std::string> tokens = {kBos, kEos, kUnk};
    std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> seen;
    for (const std::string& t : tokens) {
        seen.emplace(t, 0);
    }
    for (const std::string& w : words) {
        if (w == kBos || w == kEos || w == kUnk) {
            throw InvalidInput("Vocab: corpus word collides with reserved token \"" + w + "\"");
        }
        if (seen.emplace(w, 0).second) {
            tokens.push_back(w);
        }
    }
    return Vocab(std::move(tokens));
}

bool Vocab::contains(std::string_view token) const {
    return index_.find(token) != index_.end();
}

const std::string& Vocab::canonical(const std::string& token) const {
    auto it = index_.find(std::string_view(token));
    if (it != index_.end()) {
        return tokens_[it->second];
    }
    return tokens_[index_.find(std::string_view(kUnk))->second];
}

// ---------------------------------------------------------------------------
// NGramModel
// ---------------------------------------------------------------------------

NGramModel::NGramModel(Vocab vocab, int n, double alpha,
                       std::map<std::string, std::map<std::string, std::int64_t>> counts)
    : vocab_(std::move(vocab)), n_(n), alpha_(alpha), counts_(std::move(counts)) {
    if (n_ < 1) {
        throw InvalidInput("NGramModel: order must be >= 1");
    }
    if (!(alpha_ > 0.0)) {
        throw InvalidInput("NGramModel: alpha must be > 0 (disjoint supports otherwise)");
    }
    for (const auto& [ctx, per_token] : counts_) {
        std::int64_t total = 0;
        for (const auto& [token, c] : per_token) {
            if (c < 0) {
                throw InvalidInput("NGramModel: negative count");
            }
            if (!vocab_.contains(token) || token == Vocab::kBos) {
                throw InvalidInput("NGramModel: count for non-candidate token \"" + token + "\"");
            }
            total += c;
        }
        totals_[ctx] = total;
    }
}

NGramModel NGramModel::train(std::span<const std::string> corpus, int n, double alpha) {
    std::vector<std::string> words;
    for (const std::string& doc : corpus) {
        for (std::string& t : split_tokens(doc)) {
            words.push_back(std::move(t));
        }
    }
    return train(corpus, n, alpha, Vocab::from_words(words));
}

NGramModel NGramModel::train(std::span<const std::string> corpus, int n, double alpha,
                             Vocab vocab) {
    if (corpus.empty()) {
        throw InvalidInput("NGramModel: empty corpus");
    }
    if (n < 1) {
        throw InvalidInput("NGramModel: order must be >= 1");
    }
    if (!(alpha > 0.0)) {
        throw InvalidInput("NGramModel: alpha must be > 0 (disjoint supports otherwise)");
    }
    std::map<std::string, std::map<std::string, std::int64_t>> counts;
    for (const std::string& doc : corpus) {
        std::vector<std::string> seq(static_cast<std::size_t>(n - 1), Vocab::kBos);
        for (std::string& t : split_tokens(doc)) {
            seq.push_back(vocab.canonical(t));
        }
        seq.push_back(Vocab::kEos);
        for (std::size_t i = static_cast<std::size_t>(n - 1); i < seq.size(); ++i) {
            std::string key;
            for (std::size_t j = i - static_cast<std::size_t>(n - 1); j < i; ++j) {
                append_key(key, seq[j]);
            }
            counts[key][seq[i]] += 1;
        }
    }
    return NGramModel(std::move(vocab), n, alpha, std::move(counts));
}

std::string NGramModel::context_key(std::span<const std::string> context) const {
    const std::size_t need = static_cast<std::size_t>(n_ - 1);
    std::string key;
    // BOS padding for short contexts, then the last n-1 context tokens.
    for (std::size_t i = context.size(); i < need; ++i) {
        append_key(key, Vocab::kBos);
    }
    const std::size_t start = context.size() >= need ? context.size() - need : 0;
    for (std::size_t i = start; i < context.size(); ++i) {
        append_key(key, vocab_.canonical(context[i]));
    }
    return key;
}

Categorical NGramModel::next_token_dist(std::span<const std::string> context) const {
    const std::string key = context_key(context);
    const auto ctx_it = counts_.find(key);
    const auto* per_token = ctx_it == counts_.end() ? nullptr : &ctx_it->second;
    const double total =
        ctx_it == counts_.end() ? 0.0 : static_cast<double>(totals_.at(key));
    const auto& cands = vocab_.candidates();
    const double denom = total + alpha_ * static_cast<double>(cands.size());
    std::vector<double> probs(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
        double c = 0.0;
        if (per_token != nullptr) {
            auto it = per_token->find(cands[i]);
            if (it != per_token->end()) {
                c = static_cast<double>(it->second);
            }
        }
        probs[i] = (c + alpha_) / denom;
    }
    return Categorical(cands, std::move(probs));
}

double NGramModel::token_prob(std::span<const std::string> context,
                              const std::string& token) const {
    const std::string key = context_key(context);
    const std::string& tok = vocab_.canonical(token);
    if (tok == Vocab::kBos) {
        return 0.0;  // BOS is never generated
    }
    double c = 0.0;
    double total = 0.0;
    const auto ctx_it = counts_.find(key);
    if (ctx_it != counts_.end()) {
        total = static_cast<double>(totals_.at(key));
        auto it = ctx_it->second.find(tok);
        if (it != ctx_it->second.end()) {
            c = static_cast<double>(it->second);
        }
    }
    const double denom = total + alpha_ * static_cast<double>(vocab_.candidates().size());
    return (c + alpha_) / denom;
}

// ---------------------------------------------------------------------------
// TableModel
// ---------------------------------------------------------------------------

TableModel::TableModel(std::map<std::string, Categorical> table)
    : table_(std::move(table)),
      vocab_([this] {
          std::vector<std::string> words;
          for (const auto& [ctx, dist] : table_) {
              for (const std::string& label : dist.labels()) {
                  if (label != Vocab::kBos && label != Vocab::kEos && label != Vocab::kUnk) {
                      words.push_back(label);
                  }
              }
          }
          return Vocab::from_words(words);
      }()) {
    if (table_.empty()) {
        throw InvalidInput("TableModel: empty table");
    }
}

TableModel TableModel::single_step(Categorical dist) {
    std::map<std::string, Categorical> table;
    table.emplace("", std::move(dist));
    return TableModel(std::move(table));
}

Categorical TableModel::next_token_dist(std::span<const std::string> context) const {
    auto it = table_.find(join_tokens(context));
    if (it == table_.end()) {
        throw InvalidInput("TableModel: no entry for context \"" + join_tokens(context) + "\"");
    }
    return it->second;
}

// ---------------------------------------------------------------------------
// Sequence operations
// ---------------------------------------------------------------------------

std::string join_tokens(std::span<const std::string> tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += tokens[i];
    }
    return out;
}

std::vector<std::string> split_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) {
            ++j;
        }
        if (j > i) {
            out.emplace_back(text.substr(i, j - i));
        }
        i = j;
    }
    return out;
}

namespace {

void check_complete(std::span<const std::string> y, int max_len) {
    if (y.empty()) {
        throw InvalidInput("score_sequence: empty sequence");
    }
    if (y.size() > static_cast<std::size_t>(max_len)) {
        throw InvalidInput("score_sequence: sequence longer than max_len");
    }
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
        if (y[i] == Vocab::kEos) {
            throw InvalidInput("score_sequence: EOS before the final position");
        }
    }
    if (y.back() != Vocab::kEos && y.size() != static_cast<std::size_t>(max_len)) {
        throw InvalidInput("score_sequence: sequence neither EOS-terminated nor of length max_len");
    }
}

}  // namespace

Bits score_sequence(const ConditionalModel& model, std::span<const std::string> prompt,
                    std::span<const std::string> y, int max_len) {
    check_complete(y, max_len);
    std::vector<std::string> context(prompt.begin(), prompt.end());
    NeumaierSum log_prob;
    for (const std::string& tok : y) {
        const double p = model.token_prob(context, tok);
        if (p == 0.0) {
            return Bits::neg_infinity();
        }
        log_prob.add(std::log2(p));
        context.push_back(tok);
    }
    return Bits(log_prob.value());
}

std::size_t sample_index(const Categorical& dist, std::mt19937_64& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    std::size_t last_positive = dist.size();
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const double p = dist.probs()[i];
        if (p <= 0.0) {
            continue;
        }
        acc += p;
        last_positive = i;
        if (u < acc) {
            return i;
        }
    }
    if (last_positive == dist.size()) {
        throw InvalidInput("sample_index: distribution has no positive mass");
    }
    return last_positive;  // u landed in the rounding slack past the last bucket
}

std::vector<std::string> sample_sequence(const ConditionalModel& model,
                                         std::span<const std::string> prompt,
                                         std::mt19937_64& rng, int max_len) {
    if (max_len < 1) {
        throw InvalidInput("sample_sequence: max_len must be >= 1");
    }
    std::vector<std::string> context(prompt.begin(), prompt.end());
    std::vector<std::string> out;
    for (int step = 0; step < max_len; ++step) {
        const Categorical dist = model.next_token_dist(context);
        const std::string& tok = dist.labels()[sample_index(dist, rng)];
        out.push_back(tok);
        context.push_back(tok);
        if (tok == Vocab::kEos) {
            break;
        }
    }
    return out;
}

namespace {

void enumerate_rec(const ConditionalModel& model, std::vector<std::string>& context,
                   std::vector<std::string>& path, int max_len, std::size_t cap,
                   std::size_t& emitted, double prob_so_far,
                   const std::function<void(std::span<const std::string>, double)>& visit) {
    const Categorical dist = model.next_token_dist(context);
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const double p = dist.probs()[i];
        if (p <= 0.0) {
            continue;
        }
        const std::string& tok = dist.labels()[i];
        path.push_back(tok);
        const double prob = prob_so_far * p;
        if (tok == Vocab::kEos || path.size() == static_cast<std::size_t>(max_len)) {
            if (++emitted > cap) {
                throw EnumerationInfeasible(
                    "enumerate_sequences: more than " + std::to_string(cap) +
                    " sequences; raise the cap or reduce max_len");
            }
            visit(path, prob);
        } else {
            context.push_back(tok);
            enumerate_rec(model, context, path, max_len, cap, emitted, prob, visit);
            context.pop_back();
        }
        path.pop_back();
    }
}

}  // namespace

void for_each_sequence(
    const ConditionalModel& model, std::span<const std::string> prompt, int max_len,
    std::size_t cap,
    const std::function<void(std::span<const std::string> y, double prob)>& visit) {
    if (max_len < 1) {
        throw InvalidInput("for_each_sequence: max_len must be >= 1");
    }
    std::vector<std::string> context(prompt.begin(), prompt.end());
    std::vector<std::string> path;
    std::size_t emitted = 0;
    enumerate_rec(model, context, path, max_len, cap, emitted, 1.0, visit);
}

std::vector<SequenceProb> enumerate_sequences(const ConditionalModel& model,
                                              std::span<const std::string> prompt,
                                              int max_len, std::size_t cap) {
    std::vector<SequenceProb> out;
    for_each_sequence(model, prompt, max_len, cap,
                      [&](std::span<const std::string> y, double prob) {
                          out.push_back({{y.begin(), y.end()}, prob});
                      });
    return out;
}

Categorical sequence_distribution(const ConditionalModel& model,
                                  std::span<const std::string> prompt, int max_len,
                                  std::size_t cap) {
    std::vector<std::string> labels;
    std::vector<double> probs;
    for_each_sequence(model, prompt, max_len, cap,
                      [&](std::span<const std::string> y, double prob) {
                          labels.push_back(join_tokens(y));
                          probs.push_back(prob);
                      });
    return Categorical(std::move(labels), std::move(probs));
}

}  // namespace naf
