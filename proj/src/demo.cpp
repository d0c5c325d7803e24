#include "naf/demo.hpp"

#include <array>
#include <random>

#include "naf/numeric.hpp"

namespace naf::demo {

namespace {

constexpr std::array<const char*, 6> kSubjects = {"cat",  "dog",   "bird",
                                                  "fish", "mouse", "horse"};
constexpr std::array<const char*, 6> kVerbs = {"runs",  "sleeps", "sings",
                                               "jumps", "hides",  "waits"};
constexpr std::array<const char*, 8> kTails = {"fast",  "slow",  "today", "alone",
                                               "often", "early", "late",  "again"};

}  // namespace

Dataset make_corpus() {
    std::mt19937_64 rng(derive_seed(20240101, "demo-corpus"));
    Dataset d;
    int injected_a = 0;
    int injected_b = 0;
    // Interleave injected copies among the background documents.
    for (int i = 0; i < 180; ++i) {
        const auto& subj = kSubjects[rng() % kSubjects.size()];
        const auto& verb = kVerbs[rng() % kVerbs.size()];
        std::string doc = std::string(subj) + " " + verb;
        if (uniform01(rng) < 0.6) {
            doc += std::string(" ") + kTails[rng() % kTails.size()];
        }
        d.datapoints.push_back({std::move(doc), {}});
        if (i % 9 == 4 && injected_a < kCopiesPerSentence) {
            d.datapoints.push_back({kSentenceA, {kTagA}});
            ++injected_a;
        }
        if (i % 9 == 8 && injected_b < kCopiesPerSentence) {
            d.datapoints.push_back({kSentenceB, {kTagB}});
            ++injected_b;
        }
    }
    while (injected_a < kCopiesPerSentence) {
        d.datapoints.push_back({kSentenceA, {kTagA}});
        ++injected_a;
    }
    while (injected_b < kCopiesPerSentence) {
        d.datapoints.push_back({kSentenceB, {kTagB}});
        ++injected_b;
    }
    return d;
}

}  // namespace naf::demo
