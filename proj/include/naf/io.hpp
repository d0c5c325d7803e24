#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "naf/bits.hpp"
#include "naf/categorical.hpp"
#include "naf/model.hpp"
#include "naf/sharding.hpp"

namespace naf::io {

using json = nlohmann::json;

// {"labels": [...], "probs": [...]}
json categorical_to_json(const Categorical& c);
Categorical categorical_from_json(const json& j);

// A plain number, or "inf" / "-inf" for the extended states.
json bits_to_json(Bits b);
Bits bits_from_json(const json& j);

// {"type":"ngram","n":..,"alpha":..,"vocab":[..],"counts":{ctx:{tok:count}}}
// with context keys joined by U+001F, or {"type":"table","table":{ctx:dist}}.
json model_to_json(const ConditionalModel& m);
ModelPtr model_from_json(const json& j);

void save_model(const ConditionalModel& m, const std::filesystem::path& path);
ModelPtr load_model(const std::filesystem::path& path);

// JSON lines, one {"doc": "...", "tags": [...]} per datapoint. Parse errors
// carry the 1-based line number.
Dataset load_dataset_jsonl(const std::filesystem::path& path);
void save_dataset_jsonl(const Dataset& d, const std::filesystem::path& path);

// Plain UTF-8 corpus, one document per line; blank lines are skipped.
std::vector<std::string> load_corpus_text(const std::filesystem::path& path);

json shard_plan_to_json(const ShardPlan& plan);
ShardPlan shard_plan_from_json(const json& j);

std::string read_file(const std::filesystem::path& path);

// Writes via a temp file + rename so failed runs never leave partial output.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace naf::io
