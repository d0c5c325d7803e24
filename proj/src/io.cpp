#include "naf/io.hpp"

#include <fstream>
#include <sstream>

#include "naf/errors.hpp"

namespace naf::io {

json categorical_to_json(const Categorical& c) {
    return json{{"labels", c.labels()}, {"probs", c.probs()}};
}

Categorical categorical_from_json(const json& j) {
    try {
        return Categorical(j.at("labels").get<std::vector<std::string>>(),
                           j.at("probs").get<std::vector<double>>());
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("categorical: malformed JSON: ") + e.what());
    }
}

json bits_to_json(Bits b) {
    if (b == Bits::infinity()) {
        return "inf";
    }
    if (b == Bits::neg_infinity()) {
        return "-inf";
    }
    return b.value();
}

Bits bits_from_json(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") {
            return Bits::infinity();
        }
        if (s == "-inf") {
            return Bits::neg_infinity();
        }
        throw InvalidInput("bits: unknown string value \"" + s + "\"");
    }
    if (!j.is_number()) {
        throw InvalidInput("bits: expected a number or \"inf\"");
    }
    return Bits(j.get<double>());
}

json model_to_json(const ConditionalModel& m) {
    if (const auto* ng = dynamic_cast<const NGramModel*>(&m)) {
        json counts = json::object();
        for (const auto& [ctx, per_token] : ng->counts()) {
            json row = json::object();
            for (const auto& [tok, c] : per_token) {
                row[tok] = c;
            }
            counts[ctx] = std::move(row);
        }
        return json{{"type", "ngram"},
                    {"n", ng->order()},
                    {"alpha", ng->alpha()},
                    {"vocab", ng->vocab().tokens()},
                    {"counts", std::move(counts)}};
    }
    if (const auto* tm = dynamic_cast<const TableModel*>(&m)) {
        json table = json::object();
        for (const auto& [ctx, dist] : tm->table()) {
            table[ctx] = categorical_to_json(dist);
        }
        return json{{"type", "table"}, {"table", std::move(table)}};
    }
    throw InvalidInput("model_to_json: combined models are serialized by reference, "
                       "not as tables");
}

ModelPtr model_from_json(const json& j) {
    try {
        const auto type = j.at("type").get<std::string>();
        if (type == "ngram") {
            std::map<std::string, std::map<std::string, std::int64_t>> counts;
            for (const auto& [ctx, row] : j.at("counts").items()) {
                for (const auto& [tok, c] : row.items()) {
                    counts[ctx][tok] = c.get<std::int64_t>();
                }
            }
            return std::make_shared<NGramModel>(
                Vocab(j.at("vocab").get<std::vector<std::string>>()),
                j.at("n").get<int>(), j.at("alpha").get<double>(), std::move(counts));
        }
        if (type == "table") {
            std::map<std::string, Categorical> table;
            for (const auto& [ctx, dist] : j.at("table").items()) {
                table.emplace(ctx, categorical_from_json(dist));
            }
            return std::make_shared<TableModel>(std::move(table));
        }
        throw InvalidInput("model: unknown type \"" + type + "\"");
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("model: malformed JSON: ") + e.what());
    }
}

void save_model(const ConditionalModel& m, const std::filesystem::path& path) {
    write_file_atomic(path, model_to_json(m).dump(2) + "\n");
}

ModelPtr load_model(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw InvalidInput("model file " + path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

Dataset load_dataset_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open dataset file " + path.string());
    }
    Dataset d;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
            Datapoint z;
            z.doc = j.at("doc").get<std::string>();
            if (j.contains("tags")) {
                for (const auto& t : j.at("tags")) {
                    z.tags.insert(t.get<std::string>());
                }
            }
            d.datapoints.push_back(std::move(z));
        } catch (const json::exception& e) {
            throw InvalidInput(path.string() + ":" + std::to_string(line_no) +
                               ": bad dataset line: " + e.what());
        }
    }
    return d;
}

void save_dataset_jsonl(const Dataset& d, const std::filesystem::path& path) {
    std::string out;
    for (const Datapoint& z : d.datapoints) {
        json j{{"doc", z.doc}, {"tags", z.tags}};
        out += j.dump();
        out += '\n';
    }
    write_file_atomic(path, out);
}

std::vector<std::string> load_corpus_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open corpus file " + path.string());
    }
    std::vector<std::string> docs;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") != std::string::npos) {
            docs.push_back(line);
        }
    }
    return docs;
}

json shard_plan_to_json(const ShardPlan& plan) {
    return json{{"num_shards", plan.num_shards}, {"assignment", plan.assignment}};
}

ShardPlan shard_plan_from_json(const json& j) {
    try {
        ShardPlan plan;
        plan.num_shards = j.at("num_shards").get<int>();
        plan.assignment = j.at("assignment").get<std::vector<int>>();
        return plan;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("shard plan: malformed JSON: ") + e.what());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("cannot open " + path.string());
    }
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw InvalidInput("cannot write " + tmp.string());
        }
        out << content;
        if (!out.good()) {
            throw InvalidInput("short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace naf::io
