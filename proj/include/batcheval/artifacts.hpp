#pragma once

// Run artifact serialization. A run directory holds:
//   manifest.json     one-line run descriptor (config, dataset digest, ...)
//   partitions.jsonl  one line per round: the batch grouping used
//   scores.jsonl      one line per sample: per-round scores (null = missing)
//   ensemble.jsonl    one line per scored sample: the final ensemble score
//   transcripts.jsonl one line per judge call
//   ledger.json       token and cost accounting
// Serialization is byte-deterministic for identical runs given a fixed
// clock, which tests exploit by comparing whole files.

#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "batcheval/datasets.hpp"
#include "batcheval/engine.hpp"
#include "batcheval/errors.hpp"

namespace batcheval {

// Injectable time source so runs can be byte-compared in tests.
struct Clock {
    std::function<std::string()> now;

    static Clock system() {
        return {[] {
            std::time_t t = std::time(nullptr);
            char buf[32];
            std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
            return std::string(buf);
        }};
    }
    static Clock fixed(std::string stamp) {
        return {[stamp = std::move(stamp)] { return stamp; }};
    }
};

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["rounds"] = cfg.rounds;
    j["batch_size"] = cfg.batch_size;
    j["strategy"] = to_string(cfg.strategy);
    j["procedure"] = to_string(cfg.procedure);
    j["temperature"] = cfg.temperature;
    j["seed"] = cfg.seed;
    j["max_parse_retries"] = cfg.max_parse_retries;
    j["in_flight"] = cfg.in_flight;
    j["max_output_tokens"] = cfg.max_output_tokens;
    j["repartition_on_last_round"] = cfg.repartition_on_last_round;
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    cfg.rounds = j.at("rounds").get<int>();
    cfg.batch_size = j.at("batch_size").get<int>();
    cfg.strategy = parse_strategy(j.at("strategy").get<std::string>());
    cfg.procedure = parse_procedure(j.at("procedure").get<std::string>());
    cfg.temperature = j.at("temperature").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.max_parse_retries = j.at("max_parse_retries").get<int>();
    cfg.in_flight = j.at("in_flight").get<int>();
    cfg.max_output_tokens = j.at("max_output_tokens").get<int>();
    cfg.repartition_on_last_round = j.at("repartition_on_last_round").get<bool>();
    return cfg;
}

}  // namespace detail

inline std::string serialize_score_table(const ScoreTable& table) {
    std::string out;
    for (const auto& id : table.ids) {
        nlohmann::ordered_json j;
        j["id"] = id;
        j["scores"] = nlohmann::ordered_json::array();
        for (const auto& v : table.entries.at(id)) {
            if (v)
                j["scores"].push_back(*v);
            else
                j["scores"].push_back(nullptr);
        }
        out += j.dump() + "\n";
    }
    return out;
}

inline ScoreTable parse_score_table(const std::string& content) {
    ScoreTable table;
    std::istringstream in(content);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("id") || !j.contains("scores"))
            throw DataError(lineno, "bad score table line");
        std::string id = j["id"].get<std::string>();
        table.ids.push_back(id);
        auto& slots = table.entries[id];
        for (const auto& v : j["scores"]) {
            if (v.is_null())
                slots.emplace_back(std::nullopt);
            else
                slots.emplace_back(v.get<double>());
        }
        table.rounds = std::max(table.rounds, static_cast<int>(slots.size()));
    }
    return table;
}

struct RunManifest {
    RunConfig config;
    std::string criterion_name;
    std::string format;
    std::string dataset_name;
    std::string dataset_digest;
    long long dataset_samples = 0;
    std::string template_name;
    std::string judge_mode;  // "sim" or "api"
    std::string started;
    std::string finished;
};

inline std::string serialize_manifest(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["config"] = detail::config_to_json(m.config);
    j["criterion"] = m.criterion_name;
    j["format"] = m.format;
    j["dataset"] = {{"name", m.dataset_name},
                    {"digest", m.dataset_digest},
                    {"samples", m.dataset_samples}};
    j["template"] = m.template_name;
    j["judge"] = m.judge_mode;
    j["started"] = m.started;
    j["finished"] = m.finished;
    j["artifacts"] = {{"partitions", "partitions.jsonl"},
                      {"scores", "scores.jsonl"},
                      {"ensemble", "ensemble.jsonl"},
                      {"transcripts", "transcripts.jsonl"},
                      {"ledger", "ledger.json"}};
    return j.dump() + "\n";
}

inline RunManifest parse_manifest(const std::string& content) {
    nlohmann::json j = nlohmann::json::parse(content, nullptr, false);
    if (j.is_discarded()) throw DataError("manifest is not valid JSON");
    RunManifest m;
    m.config = detail::config_from_json(j.at("config"));
    m.criterion_name = j.at("criterion").get<std::string>();
    m.format = j.at("format").get<std::string>();
    m.dataset_name = j.at("dataset").at("name").get<std::string>();
    m.dataset_digest = j.at("dataset").at("digest").get<std::string>();
    m.dataset_samples = j.at("dataset").at("samples").get<long long>();
    m.template_name = j.at("template").get<std::string>();
    m.judge_mode = j.at("judge").get<std::string>();
    m.started = j.value("started", "");
    m.finished = j.value("finished", "");
    return m;
}

inline std::string serialize_partitions(const std::vector<Partition>& parts) {
    std::string out;
    for (const auto& p : parts) {
        nlohmann::ordered_json j;
        j["round"] = p.round;
        j["batches"] = p.batches;
        out += j.dump() + "\n";
    }
    return out;
}

inline std::vector<Partition> parse_partitions(const std::string& content) {
    std::vector<Partition> parts;
    std::istringstream in(content);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("round") || !j.contains("batches"))
            throw DataError(lineno, "bad partition line");
        Partition p;
        p.round = j["round"].get<int>();
        for (const auto& b : j["batches"]) p.batches.push_back(b.get<std::vector<std::string>>());
        parts.push_back(std::move(p));
    }
    return parts;
}

inline std::string serialize_transcripts(const std::vector<JudgeTranscript>& trs) {
    std::string out;
    for (const auto& t : trs) {
        nlohmann::ordered_json j;
        j["round"] = t.round;
        j["batch"] = t.batch_index;
        j["attempt"] = t.attempt;
        j["prompt"] = t.prompt;
        j["response"] = t.response;
        j["usage"] = {{"prompt_tokens", t.usage.prompt_tokens},
                      {"completion_tokens", t.usage.completion_tokens}};
        j["parse_status"] = t.parse_status;
        out += j.dump() + "\n";
    }
    return out;
}

inline std::vector<JudgeTranscript> parse_transcripts(const std::string& content) {
    std::vector<JudgeTranscript> trs;
    std::istringstream in(content);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw DataError(lineno, "bad transcript line");
        JudgeTranscript t;
        t.round = j.at("round").get<int>();
        t.batch_index = j.at("batch").get<int>();
        t.attempt = j.at("attempt").get<int>();
        t.prompt = j.value("prompt", "");
        t.response = j.value("response", "");
        if (j.contains("usage")) {
            t.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0ll);
            t.usage.completion_tokens = j["usage"].value("completion_tokens", 0ll);
        }
        t.parse_status = j.value("parse_status", "");
        trs.push_back(std::move(t));
    }
    return trs;
}

inline std::string serialize_ledger(const CostReport& r) {
    nlohmann::ordered_json j;
    j["calls"] = r.calls;
    j["prompt_tokens"] = r.prompt_tokens;
    j["completion_tokens"] = r.completion_tokens;
    j["price_per_1k_prompt"] = r.price_per_1k_prompt;
    j["price_per_1k_completion"] = r.price_per_1k_completion;
    j["cost_nanos"] = r.cost_nanos;
    j["cost"] = r.cost;
    j["items"] = r.items;
    j["per_item_nanos"] = r.per_item_nanos;
    j["per_item"] = r.per_item;
    return j.dump() + "\n";
}

inline std::string serialize_ensemble(const std::map<std::string, double>& ens,
                                      const std::vector<std::string>& id_order) {
    std::string out;
    for (const auto& id : id_order) {
        auto it = ens.find(id);
        if (it == ens.end()) continue;
        nlohmann::ordered_json j;
        j["id"] = id;
        j["score"] = it->second;
        out += j.dump() + "\n";
    }
    return out;
}

inline std::map<std::string, double> parse_ensemble(const std::string& content) {
    std::map<std::string, double> out;
    std::istringstream in(content);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("id") || !j.contains("score"))
            throw DataError(lineno, "bad ensemble line");
        out[j["id"].get<std::string>()] = j["score"].get<double>();
    }
    return out;
}

// Write a completed run to dir (created if needed).
inline void write_run_artifacts(const std::filesystem::path& dir, const RunResult& result,
                                const RunManifest& manifest) {
    std::filesystem::create_directories(dir);
    detail::write_file(dir / "manifest.json", serialize_manifest(manifest));
    detail::write_file(dir / "partitions.jsonl", serialize_partitions(result.partitions));
    detail::write_file(dir / "scores.jsonl", serialize_score_table(result.table));
    detail::write_file(dir / "ensemble.jsonl", serialize_ensemble(result.ensemble, result.table.ids));
    detail::write_file(dir / "transcripts.jsonl", serialize_transcripts(result.transcripts));
    detail::write_file(dir / "ledger.json", serialize_ledger(result.ledger));
}

struct LoadedRun {
    RunManifest manifest;
    ScoreTable table;
    std::map<std::string, double> ensemble;
    std::vector<Partition> partitions;
};

inline LoadedRun read_run_artifacts(const std::filesystem::path& dir) {
    LoadedRun run;
    run.manifest = parse_manifest(detail::read_file(dir / "manifest.json"));
    run.table = parse_score_table(detail::read_file(dir / "scores.jsonl"));
    run.ensemble = parse_ensemble(detail::read_file(dir / "ensemble.jsonl"));
    run.partitions = parse_partitions(detail::read_file(dir / "partitions.jsonl"));
    return run;
}

}  // namespace batcheval
