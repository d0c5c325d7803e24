#pragma once

#include "naf/sharding.hpp"

namespace naf::demo {

// The two "copyrighted" sentences injected into the bundled corpus, and the
// work identifiers tagging their datapoints.
inline constexpr const char* kTagA = "C1";
inline constexpr const char* kTagB = "C2";
inline constexpr const char* kSentenceA = "zephyr quill ember";
inline constexpr const char* kSentenceB = "sable orchid tide";
inline constexpr int kCopiesPerSentence = 10;

/**
 * Deterministic 200-document corpus over a small vocabulary: 180 background
 * sentences plus 10 exact copies of each injected sentence, tagged with the
 * work they embody. A full-data n-gram memorizes the injected sentences;
 * the protected samplers must not emit them.
 */
Dataset make_corpus();

}  // namespace naf::demo
