#pragma once

// Text perturbation for robustness probes: independent token deletion
// followed by synonym substitution on the survivors, fully determined by
// the configured seed. At least one token always survives.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "batcheval/errors.hpp"
#include "batcheval/metrics.hpp"
#include "batcheval/rng.hpp"

namespace batcheval {

using Lexicon = std::map<std::string, std::vector<std::string>>;

// Lines of "word<TAB>synonym1,synonym2,...". Blank lines and lines starting
// with '#' are skipped.
inline Lexicon load_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open lexicon file '" + path + "'");
    Lexicon lex;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw DataError(lineno, "lexicon line needs 'word<TAB>synonyms'");
        std::string word = line.substr(0, tab);
        std::vector<std::string> syns;
        std::stringstream ss(line.substr(tab + 1));
        std::string syn;
        while (std::getline(ss, syn, ','))
            if (!syn.empty()) syns.push_back(syn);
        if (syns.empty()) throw DataError(lineno, "lexicon entry has no synonyms");
        lex[word] = std::move(syns);
    }
    return lex;
}

struct NoiseConfig {
    double p_delete = 0.05;
    double p_synonym = 0.05;
    Lexicon lexicon;
    std::uint64_t seed = 0;

    void validate() const {
        if (p_delete < 0 || p_delete > 1 || p_synonym < 0 || p_synonym > 1)
            throw ConfigError("noise probabilities must lie in [0,1]");
    }
};

// Whitespace-tokenize, drop each token independently with p_delete (keeping
// at least one: if everything is marked, one seeded pick is resurrected),
// then replace each surviving token that has a lexicon entry with a seeded
// uniform choice among its synonyms with p_synonym. Joined with single
// spaces.
inline std::string perturb(const std::string& text, const NoiseConfig& cfg) {
    cfg.validate();
    std::vector<std::string> tokens;
    {
        std::stringstream ss(text);
        std::string tok;
        while (ss >> tok) tokens.push_back(tok);
    }
    if (tokens.empty()) return "";
    Rng rng(derive_seed(cfg.seed, {0x9015Eu, fnv1a64(text)}));

    std::vector<bool> keep(tokens.size());
    std::size_t kept = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        keep[i] = !(rng.uniform() < cfg.p_delete);
        if (keep[i]) ++kept;
    }
    if (kept == 0) keep[rng.index(tokens.size())] = true;

    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!keep[i]) continue;
        std::string tok = tokens[i];
        if (auto it = cfg.lexicon.find(tok); it != cfg.lexicon.end())
            if (rng.uniform() < cfg.p_synonym) tok = it->second[rng.index(it->second.size())];
        if (!out.empty()) out += ' ';
        out += tok;
    }
    return out;
}

// Correlation drop (clean minus noisy) of judge scores against human scores
// over the same ids: positive values mean the perturbation degraded
// agreement. Returns {pearson_drop, spearman_drop}.
inline std::pair<double, double> robustness_delta(const std::map<std::string, double>& clean_scores,
                                                  const std::map<std::string, double>& noisy_scores,
                                                  const std::map<std::string, double>& human_scores) {
    std::vector<double> clean, noisy, human;
    for (const auto& [id, h] : human_scores) {
        auto c = clean_scores.find(id);
        auto n = noisy_scores.find(id);
        if (c == clean_scores.end() || n == noisy_scores.end())
            throw MetricError(MetricError::Kind::key_mismatch,
                              "robustness_delta: id '" + id + "' missing from a score table");
        human.push_back(h);
        clean.push_back(c->second);
        noisy.push_back(n->second);
    }
    CorrValue pc = pearson(clean, human), pn = pearson(noisy, human);
    CorrValue sc = spearman(clean, human), sn = spearman(noisy, human);
    return {pc.r - pn.r, sc.r - sn.r};
}

}  // namespace batcheval
