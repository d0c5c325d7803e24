#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "naf/bits.hpp"
#include "naf/categorical.hpp"

namespace naf {

/**
 * Token alphabet with reserved sentence markers. BOS pads contexts and is
 * never generated; EOS terminates outputs; out-of-vocabulary tokens map to
 * UNK so prompts may mention strings absent from training.
 */
class Vocab {
public:
    static constexpr const char* kBos = "<s>";
    static constexpr const char* kEos = "</s>";
    static constexpr const char* kUnk = "<unk>";

    // tokens must contain the three reserved markers and be duplicate-free.
    explicit Vocab(std::vector<std::string> tokens);

    // Reserved markers followed by the given words (deduplicated, order kept).
    static Vocab from_words(std::span<const std::string> words);

    const std::vector<std::string>& tokens() const { return tokens_; }
    std::size_t size() const { return tokens_.size(); }
    bool contains(std::string_view token) const;

    // Tokens that may appear in generated output: everything except BOS.
    const std::vector<std::string>& candidates() const { return candidates_; }

    // The token itself when known, UNK otherwise.
    const std::string& canonical(const std::string& token) const;

    friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::vector<std::string> candidates_;
    std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> index_;
};

/**
 * A conditional generative model over token sequences: given the running
 * context (prompt tokens followed by generated tokens so far), produce the
 * next-token distribution. Implementations are immutable after construction
 * and safe to share across threads.
 */
class ConditionalModel {
public:
    virtual ~ConditionalModel() = default;
    virtual const Vocab& vocab() const = 0;
    virtual Categorical next_token_dist(std::span<const std::string> context) const = 0;

    // Probability of one token in the given context. Must agree bit-for-bit
    // with next_token_dist; overridden where a full distribution is wasteful.
    virtual double token_prob(std::span<const std::string> context,
                              const std::string& token) const {
        return next_token_dist(context).prob_of(token);
    }
};

using ModelPtr = std::shared_ptr<const ConditionalModel>;

/**
 * Add-alpha smoothed n-gram language model.
 *
 * Counts cover every length-n window of each document, with (n-1) BOS pads
 * in front and a terminal EOS. Next-token probability over the candidate set
 * is (count + alpha) / (total + alpha * |candidates|); alpha > 0 keeps every
 * candidate's mass positive, which the divergence bounds require.
 */
class NGramModel : public ConditionalModel {
public:
    // Trains with a vocabulary derived from the corpus itself.
    static NGramModel train(std::span<const std::string> corpus, int n, double alpha);

    // Trains against a caller-supplied (typically dataset-wide) vocabulary,
    // so shard models share one alphabet.
    static NGramModel train(std::span<const std::string> corpus, int n, double alpha,
                            Vocab vocab);

    const Vocab& vocab() const override { return vocab_; }
    Categorical next_token_dist(std::span<const std::string> context) const override;
    double token_prob(std::span<const std::string> context,
                      const std::string& token) const override;

    int order() const { return n_; }
    double alpha() const { return alpha_; }

    // Context key is the relevant context tokens joined by US (0x1f), the
    // same encoding the JSON serialization uses.
    const std::map<std::string, std::map<std::string, std::int64_t>>& counts() const {
        return counts_;
    }

    NGramModel(Vocab vocab, int n, double alpha,
               std::map<std::string, std::map<std::string, std::int64_t>> counts);

private:
    std::string context_key(std::span<const std::string> context) const;

    Vocab vocab_;
    int n_;
    double alpha_;
    std::map<std::string, std::map<std::string, std::int64_t>> counts_;
    std::map<std::string, std::int64_t> totals_;  // per context key
};

/**
 * Explicit lookup-table model: full context (joined by spaces) to next-token
 * distribution, returned verbatim. Lets tests construct distributions
 * exactly; lookups outside the table are an error by design.
 */
class TableModel : public ConditionalModel {
public:
    explicit TableModel(std::map<std::string, Categorical> table);

    // Promptless single-step model: one entry under the empty context.
    static TableModel single_step(Categorical dist);

    const Vocab& vocab() const override { return vocab_; }
    Categorical next_token_dist(std::span<const std::string> context) const override;

    const std::map<std::string, Categorical>& table() const { return table_; }

private:
    std::map<std::string, Categorical> table_;
    Vocab vocab_;
};

// ---------------------------------------------------------------------------
// Sequence-level view of a conditional model.
//
// A complete output either ends with EOS or was truncated at exactly max_len
// tokens; truncated outputs count as complete, which keeps the sequence
// space finite and total mass exactly 1.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

std::string join_tokens(std::span<const std::string> tokens);
std::vector<std::string> split_tokens(std::string_view text);

// Log2 probability of the complete sequence y given the prompt; -inf for
// sequences the model cannot emit. Throws InvalidInput when y is not a
// complete sequence (no terminal EOS and shorter than max_len, or EOS in the
// middle).
Bits score_sequence(const ConditionalModel& model, std::span<const std::string> prompt,
                    std::span<const std::string> y, int max_len);

// Autoregressive ancestral sampling; reproducible given the caller's rng.
std::vector<std::string> sample_sequence(const ConditionalModel& model,
                                         std::span<const std::string> prompt,
                                         std::mt19937_64& rng, int max_len);

// Depth-first enumeration of every complete sequence with positive
// probability. Throws EnumerationInfeasible past `cap` sequences.
void for_each_sequence(
    const ConditionalModel& model, std::span<const std::string> prompt, int max_len,
    std::size_t cap,
    const std::function<void(std::span<const std::string> y, double prob)>& visit);

struct SequenceProb {
    std::vector<std::string> tokens;
    double prob;
};

std::vector<SequenceProb> enumerate_sequences(const ConditionalModel& model,
                                              std::span<const std::string> prompt,
                                              int max_len,
                                              std::size_t cap = kDefaultEnumerationCap);

// The full output distribution as a Categorical whose labels are the joined
// token sequences. This is what the brute-force verifiers consume.
Categorical sequence_distribution(const ConditionalModel& model,
                                  std::span<const std::string> prompt, int max_len,
                                  std::size_t cap = kDefaultEnumerationCap);

// Draw one index from a categorical using the portable uniform01 stream.
std::size_t sample_index(const Categorical& dist, std::mt19937_64& rng);

}  // namespace naf
