#pragma once

// Core value types shared across the library.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "batcheval/errors.hpp"

namespace batcheval {

enum class ScoreFormat { integer, decimal };
enum class Procedure { one_stage, two_stage, three_stage };
enum class Strategy { random, homogeneous, heterogeneous };

inline const char* to_string(ScoreFormat f) {
    return f == ScoreFormat::integer ? "integer" : "decimal";
}
inline const char* to_string(Procedure p) {
    switch (p) {
        case Procedure::one_stage: return "one_stage";
        case Procedure::two_stage: return "two_stage";
        case Procedure::three_stage: return "three_stage";
    }
    return "unknown";
}
inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::random: return "random";
        case Strategy::homogeneous: return "homogeneous";
        case Strategy::heterogeneous: return "heterogeneous";
    }
    return "unknown";
}

inline ScoreFormat parse_score_format(const std::string& s) {
    if (s == "integer") return ScoreFormat::integer;
    if (s == "decimal") return ScoreFormat::decimal;
    throw ConfigError("unknown score format '" + s + "' (expected integer|decimal)");
}
inline Procedure parse_procedure(const std::string& s) {
    if (s == "one_stage") return Procedure::one_stage;
    if (s == "two_stage") return Procedure::two_stage;
    if (s == "three_stage") return Procedure::three_stage;
    throw ConfigError("unknown procedure '" + s + "' (expected one_stage|two_stage|three_stage)");
}
inline Strategy parse_strategy(const std::string& s) {
    if (s == "random") return Strategy::random;
    if (s == "homogeneous") return Strategy::homogeneous;
    if (s == "heterogeneous") return Strategy::heterogeneous;
    throw ConfigError("unknown strategy '" + s + "' (expected random|homogeneous|heterogeneous)");
}

// One evaluation unit. fields preserves insertion order (it drives prompt
// layout); human_scores maps criterion name -> gold annotation.
struct Sample {
    std::string id;
    std::vector<std::pair<std::string, std::string>> fields;
    std::map<std::string, double> human_scores;

    const std::string* field(const std::string& name) const {
        for (const auto& [k, v] : fields)
            if (k == name) return &v;
        return nullptr;
    }
};

struct Anchor {
    double level = 0;
    std::string text;
};

struct Criterion {
    std::string name;
    std::string definition;
    std::vector<Anchor> anchors;
    double score_min = 1.0;
    double score_max = 3.0;
    ScoreFormat format = ScoreFormat::decimal;

    double midpoint() const { return 0.5 * (score_min + score_max); }
};

inline void validate_criterion(const Criterion& c) {
    if (c.name.empty()) throw ConfigError("criterion name must be non-empty");
    if (!(c.score_min < c.score_max))
        throw ConfigError("criterion '" + c.name + "': score_min must be < score_max");
    if (c.anchors.empty()) throw ConfigError("criterion '" + c.name + "': at least one anchor required");
    for (const auto& a : c.anchors)
        if (a.level < c.score_min || a.level > c.score_max)
            throw ConfigError("criterion '" + c.name + "': anchor level out of scale bounds");
}

struct RunConfig {
    int rounds = 5;
    int batch_size = 10;
    Strategy strategy = Strategy::heterogeneous;
    Procedure procedure = Procedure::two_stage;
    double temperature = 0.2;
    std::uint64_t seed = 0;
    int max_parse_retries = 3;
    int in_flight = 4;
    int max_output_tokens = 2048;
    // When true (default) every round after the first repartitions by the
    // configured strategy. When false the final round reuses the previous
    // round's grouping, an experiment knob for measuring whether the last
    // repartition still pays for itself.
    bool repartition_on_last_round = true;

    void validate() const {
        if (rounds < 1) throw ConfigError("rounds must be >= 1");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (temperature < 0.0 || temperature > 2.0) throw ConfigError("temperature must be within [0,2]");
        if (max_parse_retries < 0) throw ConfigError("max_parse_retries must be >= 0");
        if (in_flight < 1) throw ConfigError("in_flight must be >= 1");
        if (max_output_tokens < 1) throw ConfigError("max_output_tokens must be >= 1");
    }
};

}  // namespace batcheval
