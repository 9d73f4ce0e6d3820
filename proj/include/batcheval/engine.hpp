#pragma once

// The evaluation engine: N rounds of partition -> prompt -> judge -> parse,
// with the running per-sample means steering every repartition after the
// first, and the per-sample mean over rounds as the final ensemble score.

#include <algorithm>
#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <tuple>
#include <vector>

#include "batcheval/batching.hpp"
#include "batcheval/errors.hpp"
#include "batcheval/judge.hpp"
#include "batcheval/parsing.hpp"
#include "batcheval/prompts.hpp"
#include "batcheval/types.hpp"

namespace batcheval {

// One judge call (including failed parse attempts).
struct JudgeTranscript {
    int round = 0;        // 1-based
    int batch_index = 0;  // 0-based within the round
    int attempt = 0;      // 0-based; > 0 means a parse retry
    std::string prompt;
    std::string response;
    TokenUsage usage;
    std::string parse_status;  // "ok", "ok_clamped", or "error:<kind>"
};

// Per-sample scores by round. entries[id][r-1] is the sample's score in
// round r, or absent when its batch exhausted parse retries that round.
struct ScoreTable {
    std::vector<std::string> ids;  // dataset order
    std::map<std::string, std::vector<std::optional<double>>> entries;
    int rounds = 0;

    std::optional<double> mean_of(const std::string& id) const {
        auto it = entries.find(id);
        if (it == entries.end()) return std::nullopt;
        double sum = 0;
        int n = 0;
        for (const auto& v : it->second)
            if (v) {
                sum += *v;
                ++n;
            }
        if (n == 0) return std::nullopt;
        return sum / n;
    }
};

// Ensemble scores: per-sample mean over the rounds that produced a score.
// Samples with no scored round at all are omitted.
inline std::map<std::string, double> ensemble_scores(const ScoreTable& table) {
    std::map<std::string, double> out;
    for (const auto& id : table.ids)
        if (auto m = table.mean_of(id)) out[id] = *m;
    return out;
}

struct RunResult {
    ScoreTable table;
    std::map<std::string, double> ensemble;
    std::vector<std::string> never_scored;  // ids missing from every round
    std::vector<Partition> partitions;      // one per round
    std::vector<JudgeTranscript> transcripts;
    CostReport ledger;
    int batches_total = 0;
    int batches_parse_failed = 0;  // batches that exhausted every retry
};

namespace detail {

// Scores steering the next repartition: the running mean over completed
// rounds, with the scale midpoint standing in for samples that have no
// score yet.
inline std::map<std::string, double> repartition_basis(const ScoreTable& table, const Criterion& crit) {
    std::map<std::string, double> basis;
    for (const auto& id : table.ids) {
        auto m = table.mean_of(id);
        basis[id] = m ? *m : crit.midpoint();
    }
    return basis;
}

struct BatchOutcome {
    std::vector<std::optional<double>> scores;  // aligned with the batch's ids
    std::vector<JudgeTranscript> transcripts;
    bool parsed = false;
};

inline BatchOutcome run_batch(const std::vector<std::string>& batch_ids,
                              const std::map<std::string, const Sample*>& by_id,
                              const Criterion& crit, const PromptTemplate& tmpl,
                              const RunConfig& cfg, JudgeGateway& judge, int round, int batch_index) {
    std::vector<Sample> batch;
    batch.reserve(batch_ids.size());
    for (const auto& id : batch_ids) batch.push_back(*by_id.at(id));
    JudgeRequest req;
    req.prompt = render_prompt(tmpl, batch);
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;
    req.round = round;
    req.batch_index = batch_index;

    BatchOutcome out;
    out.scores.assign(batch_ids.size(), std::nullopt);
    int attempts = 1 + cfg.max_parse_retries;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        JudgeResponse resp = judge.complete(req);
        JudgeTranscript tr;
        tr.round = round;
        tr.batch_index = batch_index;
        tr.attempt = attempt;
        tr.prompt = req.prompt;
        tr.response = resp.text;
        tr.usage = resp.usage;
        try {
            ParsedScores parsed = parse_batch_scores(resp.text, static_cast<int>(batch_ids.size()),
                                                     crit, cfg.procedure);
            tr.parse_status = parsed.clamped.empty() ? "ok" : "ok_clamped";
            out.transcripts.push_back(std::move(tr));
            for (const auto& [k, v] : parsed.scores) out.scores[static_cast<std::size_t>(k - 1)] = v;
            out.parsed = true;
            return out;
        } catch (const ParseError& e) {
            tr.parse_status = std::string("error:") + to_string(e.kind);
            out.transcripts.push_back(std::move(tr));
        }
    }
    return out;  // every attempt failed to parse; scores stay missing
}

}  // namespace detail

// Run the full batched evaluation. Throws ConfigError for invalid
// configuration and lets JudgeError propagate (a judge outage aborts the
// run); parse failures never abort -- the affected batch simply contributes
// no scores for that round.
inline RunResult run_batcheval(const std::vector<Sample>& samples, const Criterion& crit,
                               const PromptTemplate& tmpl, const RunConfig& cfg, JudgeGateway& judge) {
    cfg.validate();
    validate_criterion(crit);
    if (samples.empty()) throw ConfigError("run_batcheval: no samples");
    if (tmpl.procedure != cfg.procedure)
        throw ConfigError("template procedure does not match the run procedure");
    if (tmpl.format != crit.format)
        throw ConfigError("template score format does not match the criterion");

    std::map<std::string, const Sample*> by_id;
    RunResult result;
    for (const auto& s : samples) {
        if (!by_id.emplace(s.id, &s).second)
            throw ConfigError("duplicate sample id '" + s.id + "'");
        result.table.ids.push_back(s.id);
        result.table.entries[s.id] = {};
    }

    for (int round = 1; round <= cfg.rounds; ++round) {
        Partition part;
        if (round == 1) {
            Rng rng(derive_seed(cfg.seed, {0xF157u, static_cast<std::uint64_t>(round)}));
            part = partition_random(result.table.ids, cfg.batch_size, rng);
        } else if (round == cfg.rounds && !cfg.repartition_on_last_round) {
            part = result.partitions.back();
        } else {
            switch (cfg.strategy) {
                case Strategy::random: {
                    Rng rng(derive_seed(cfg.seed, {0xF157u, static_cast<std::uint64_t>(round)}));
                    part = partition_random(result.table.ids, cfg.batch_size, rng);
                    break;
                }
                case Strategy::homogeneous:
                    part = partition_homogeneous(result.table.ids,
                                                 detail::repartition_basis(result.table, crit),
                                                 cfg.batch_size);
                    break;
                case Strategy::heterogeneous:
                    part = partition_heterogeneous(result.table.ids,
                                                   detail::repartition_basis(result.table, crit),
                                                   cfg.batch_size, round - 1);
                    break;
            }
        }
        part.round = round;

        // Dispatch the round's batches, at most cfg.in_flight at once.
        std::counting_semaphore<256> slots(std::min(cfg.in_flight, 256));
        std::vector<std::future<detail::BatchOutcome>> futures;
        futures.reserve(part.batches.size());
        for (std::size_t b = 0; b < part.batches.size(); ++b) {
            futures.push_back(std::async(std::launch::async, [&, b] {
                slots.acquire();
                struct Release {
                    std::counting_semaphore<256>& s;
                    ~Release() { s.release(); }
                } release{slots};
                return detail::run_batch(part.batches[b], by_id, crit, tmpl, cfg, judge, round,
                                         static_cast<int>(b));
            }));
        }
        std::vector<detail::BatchOutcome> outcomes;
        outcomes.reserve(futures.size());
        std::exception_ptr first_error;
        for (auto& f : futures) {
            try {
                outcomes.push_back(f.get());
            } catch (...) {
                if (!first_error) first_error = std::current_exception();
            }
        }
        if (first_error) std::rethrow_exception(first_error);

        for (std::size_t b = 0; b < outcomes.size(); ++b) {
            ++result.batches_total;
            if (!outcomes[b].parsed) ++result.batches_parse_failed;
            const auto& ids = part.batches[b];
            for (std::size_t i = 0; i < ids.size(); ++i)
                result.table.entries[ids[i]].push_back(outcomes[b].scores[i]);
            for (auto& tr : outcomes[b].transcripts) result.transcripts.push_back(std::move(tr));
        }
        result.table.rounds = round;
        result.partitions.push_back(std::move(part));
    }

    std::sort(result.transcripts.begin(), result.transcripts.end(),
              [](const JudgeTranscript& a, const JudgeTranscript& b) {
                  return std::tie(a.round, a.batch_index, a.attempt) <
                         std::tie(b.round, b.batch_index, b.attempt);
              });
    result.ensemble = ensemble_scores(result.table);
    for (const auto& id : result.table.ids)
        if (!result.ensemble.count(id)) result.never_scored.push_back(id);
    result.ledger = judge.ledger().report(static_cast<long long>(samples.size()));
    return result;
}

}  // namespace batcheval
