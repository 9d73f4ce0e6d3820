#pragma once

// Dataset loading, validation, saving, and synthesis. A dataset is a JSONL
// file whose first line is a header object describing the task and its
// criteria; every following line is one sample.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "batcheval/errors.hpp"
#include "batcheval/prompts.hpp"
#include "batcheval/rng.hpp"
#include "batcheval/types.hpp"

namespace batcheval {

struct Dataset {
    std::string name;
    std::string provenance;
    PromptFlavor flavor;
    std::vector<Criterion> criteria;
    std::vector<Sample> samples;

    const Criterion& criterion(const std::string& cname) const {
        if (cname.empty()) {
            if (criteria.empty()) throw ConfigError("dataset declares no criteria");
            return criteria.front();
        }
        for (const auto& c : criteria)
            if (c.name == cname) return c;
        throw ConfigError("dataset has no criterion named '" + cname + "'");
    }

    std::vector<std::string> ids() const {
        std::vector<std::string> v;
        v.reserve(samples.size());
        for (const auto& s : samples) v.push_back(s.id);
        return v;
    }

    // Gold scores for one criterion over all samples that carry it.
    std::map<std::string, double> human_scores(const std::string& cname) const {
        std::map<std::string, double> out;
        for (const auto& s : samples) {
            auto it = s.human_scores.find(cname);
            if (it != s.human_scores.end()) out[s.id] = it->second;
        }
        return out;
    }
};

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson parse_line(const std::string& line, int lineno) {
    ojson j = ojson::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError(lineno, "invalid JSON");
    if (!j.is_object()) throw DataError(lineno, "expected a JSON object");
    return j;
}

inline Criterion criterion_from_json(const ojson& j, int lineno) {
    Criterion c;
    if (!j.contains("name") || !j["name"].is_string())
        throw DataError(lineno, "criterion needs a string 'name'");
    c.name = j["name"].get<std::string>();
    c.definition = j.value("definition", std::string{});
    if (!j.contains("min") || !j.contains("max") || !j["min"].is_number() || !j["max"].is_number())
        throw DataError(lineno, "criterion '" + c.name + "' needs numeric 'min' and 'max'");
    c.score_min = j["min"].get<double>();
    c.score_max = j["max"].get<double>();
    if (j.contains("format")) {
        if (!j["format"].is_string()) throw DataError(lineno, "criterion 'format' must be a string");
        try {
            c.format = parse_score_format(j["format"].get<std::string>());
        } catch (const ConfigError& e) {
            throw DataError(lineno, e.what());
        }
    }
    if (j.contains("anchors")) {
        if (!j["anchors"].is_array()) throw DataError(lineno, "criterion 'anchors' must be an array");
        for (const auto& a : j["anchors"]) {
            if (!a.is_object() || !a.contains("level") || !a["level"].is_number() ||
                !a.contains("text") || !a["text"].is_string())
                throw DataError(lineno, "anchor needs numeric 'level' and string 'text'");
            c.anchors.push_back({a["level"].get<double>(), a["text"].get<std::string>()});
        }
    }
    try {
        validate_criterion(c);
    } catch (const ConfigError& e) {
        throw DataError(lineno, e.what());
    }
    return c;
}

inline ojson criterion_to_json(const Criterion& c) {
    ojson j;
    j["name"] = c.name;
    j["definition"] = c.definition;
    j["min"] = c.score_min;
    j["max"] = c.score_max;
    j["format"] = to_string(c.format);
    j["anchors"] = ojson::array();
    for (const auto& a : c.anchors) j["anchors"].push_back({{"level", a.level}, {"text", a.text}});
    return j;
}

}  // namespace detail

// FNV-1a over the raw file bytes, rendered as 16 hex digits. Used to pin a
// dataset's identity inside run manifests.
inline std::string content_digest(const std::string& content) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(content)));
    return buf;
}

inline std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return content_digest(ss.str());
}

// Parse a dataset from JSONL text. Line 1 must be the header object
// ("type":"header") carrying name and criteria; subsequent lines are
// samples with an id, a fields object, and optional human scores.
inline Dataset parse_dataset(const std::string& content) {
    using detail::ojson;
    Dataset ds;
    std::istringstream in(content);
    std::string line;
    int lineno = 0;
    bool have_header = false;
    std::set<std::string> seen_ids;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ojson j = detail::parse_line(line, lineno);
        if (!have_header) {
            if (j.value("type", "") != "header")
                throw DataError(lineno, "first line must be the dataset header");
            if (!j.contains("name") || !j["name"].is_string())
                throw DataError(lineno, "header needs a string 'name'");
            ds.name = j["name"].get<std::string>();
            ds.provenance = j.value("provenance", std::string{});
            if (j.contains("sample_description"))
                ds.flavor.sample_description = j["sample_description"].get<std::string>();
            if (j.contains("task_sentence"))
                ds.flavor.task_sentence = j["task_sentence"].get<std::string>();
            if (j.contains("task_sentence_integer"))
                ds.flavor.task_sentence_integer = j["task_sentence_integer"].get<std::string>();
            if (j.contains("data_header"))
                ds.flavor.data_header = j["data_header"].get<std::string>();
            if (!j.contains("criteria") || !j["criteria"].is_array() || j["criteria"].empty())
                throw DataError(lineno, "header needs a non-empty 'criteria' array");
            for (const auto& cj : j["criteria"])
                ds.criteria.push_back(detail::criterion_from_json(cj, lineno));
            have_header = true;
            continue;
        }
        Sample s;
        if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty())
            throw DataError(lineno, "sample needs a non-empty string 'id'");
        s.id = j["id"].get<std::string>();
        if (!seen_ids.insert(s.id).second)
            throw DataError(lineno, "duplicate sample id '" + s.id + "'");
        if (!j.contains("fields") || !j["fields"].is_object() || j["fields"].empty())
            throw DataError(lineno, "sample '" + s.id + "' needs a non-empty 'fields' object");
        for (const auto& [k, v] : j["fields"].items()) {
            if (!v.is_string())
                throw DataError(lineno, "sample '" + s.id + "': field '" + k + "' must be a string");
            s.fields.emplace_back(k, v.get<std::string>());
        }
        if (j.contains("human")) {
            if (!j["human"].is_object())
                throw DataError(lineno, "sample '" + s.id + "': 'human' must be an object");
            for (const auto& [k, v] : j["human"].items()) {
                if (!v.is_number())
                    throw DataError(lineno, "sample '" + s.id + "': human score '" + k + "' must be numeric");
                bool known = false;
                for (const auto& c : ds.criteria) {
                    if (c.name != k) continue;
                    known = true;
                    double val = v.get<double>();
                    if (val < c.score_min || val > c.score_max)
                        throw DataError(lineno, "sample '" + s.id + "': human score " +
                                                    std::to_string(val) + " for '" + k +
                                                    "' outside [" + std::to_string(c.score_min) + "," +
                                                    std::to_string(c.score_max) + "]");
                    s.human_scores[k] = val;
                }
                if (!known)
                    throw DataError(lineno, "sample '" + s.id + "': human score for unknown criterion '" +
                                                k + "'");
            }
        }
        ds.samples.push_back(std::move(s));
    }
    if (!have_header) throw DataError("dataset is empty: no header line");
    if (ds.samples.empty()) throw DataError("dataset has no samples");
    return ds;
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_dataset(ss.str());
}

inline std::string serialize_dataset(const Dataset& ds) {
    using detail::ojson;
    ojson h;
    h["type"] = "header";
    h["name"] = ds.name;
    h["provenance"] = ds.provenance;
    h["sample_description"] = ds.flavor.sample_description;
    h["task_sentence"] = ds.flavor.task_sentence;
    h["task_sentence_integer"] = ds.flavor.task_sentence_integer;
    h["data_header"] = ds.flavor.data_header;
    h["criteria"] = ojson::array();
    for (const auto& c : ds.criteria) h["criteria"].push_back(detail::criterion_to_json(c));
    std::string out = h.dump() + "\n";
    for (const auto& s : ds.samples) {
        ojson j;
        j["id"] = s.id;
        j["fields"] = ojson::object();
        for (const auto& [k, v] : s.fields) j["fields"][k] = v;
        if (!s.human_scores.empty()) {
            j["human"] = ojson::object();
            for (const auto& [k, v] : s.human_scores) j["human"][k] = v;
        }
        out += j.dump() + "\n";
    }
    return out;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset file '" + path + "'");
    out << serialize_dataset(ds);
}

// Synthesize n samples with hidden true qualities drawn uniformly from the
// criterion's scale. Each sample's text embeds its [[id:...]] marker so the
// simulated judge can recognize it; the quality doubles as the human score.
inline Dataset synth_dataset(int n, const Criterion& crit, std::uint64_t seed) {
    if (n < 1) throw ConfigError("synth_dataset: n must be >= 1");
    validate_criterion(crit);
    Dataset ds;
    ds.name = "synthetic";
    {
        std::ostringstream prov;
        prov << "synth(n=" << n << ", seed=" << seed << ")";
        ds.provenance = prov.str();
    }
    ds.flavor.sample_description = "Each sample contains one synthetic text passage.";
    ds.flavor.task_sentence = "Your task is to assign a float score to the passage on one metric.";
    ds.flavor.task_sentence_integer = "Your task is to rate the passages on one metric.";
    ds.flavor.data_header = "Passages to be evaluated:";
    ds.criteria.push_back(crit);
    Rng rng(derive_seed(seed, {0x5E17Du}));
    for (int i = 1; i <= n; ++i) {
        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "s%04d", i);
        Sample s;
        s.id = idbuf;
        double q = rng.uniform(crit.score_min, crit.score_max);
        std::ostringstream text;
        text << "Synthetic passage " << i << " [[id:" << s.id
             << "]]. Its latent quality is hidden from the judge.";
        s.fields.emplace_back("Passage", text.str());
        s.human_scores[crit.name] = q;
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace batcheval
