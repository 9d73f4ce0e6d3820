#pragma once

// Judge gateway interface, token/cost accounting, and the deterministic
// simulated judge used for tests, demos, and controlled experiments.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "batcheval/errors.hpp"
#include "batcheval/parsing.hpp"
#include "batcheval/rng.hpp"
#include "batcheval/types.hpp"

namespace batcheval {

struct TokenUsage {
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
};

inline long long whitespace_token_count(const std::string& text) {
    long long n = 0;
    bool in_tok = false;
    for (unsigned char c : text) {
        bool ws = std::isspace(c);
        if (!ws && !in_tok) ++n;
        in_tok = !ws;
    }
    return n;
}

struct JudgeRequest {
    std::string prompt;
    double temperature = 0.2;
    int max_output_tokens = 2048;
    int round = 1;       // 1-based round index
    int batch_index = 0;  // 0-based batch index within the round
};

struct JudgeResponse {
    std::string text;
    TokenUsage usage;
};

// Prices are dollars per 1000 tokens; all arithmetic is integer nanodollars
// so ledgers add up exactly.
struct PriceTable {
    double prompt_per_1k = 0.0;
    double completion_per_1k = 0.0;

    long long prompt_nanos_per_1k() const { return std::llround(prompt_per_1k * 1e9); }
    long long completion_nanos_per_1k() const { return std::llround(completion_per_1k * 1e9); }
};

struct CostReport {
    long long calls = 0;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    double price_per_1k_prompt = 0.0;
    double price_per_1k_completion = 0.0;
    long long cost_nanos = 0;
    double cost = 0.0;
    long long items = 0;
    long long per_item_nanos = 0;
    double per_item = 0.0;
};

class CostLedger {
  public:
    explicit CostLedger(PriceTable prices = {}) : prices_(prices) {}

    // Copies snapshot the counters so gateways stay movable.
    CostLedger(const CostLedger& other)
        : prices_(other.prices_),
          prompt_tokens_(other.prompt_tokens_.load()),
          completion_tokens_(other.completion_tokens_.load()),
          calls_(other.calls_.load()) {}
    CostLedger& operator=(const CostLedger& other) {
        prices_ = other.prices_;
        prompt_tokens_ = other.prompt_tokens_.load();
        completion_tokens_ = other.completion_tokens_.load();
        calls_ = other.calls_.load();
        return *this;
    }

    void set_prices(PriceTable p) { prices_ = p; }
    const PriceTable& prices() const { return prices_; }

    void add(const TokenUsage& u) {
        prompt_tokens_ += u.prompt_tokens;
        completion_tokens_ += u.completion_tokens;
        ++calls_;
    }

    long long prompt_tokens() const { return prompt_tokens_.load(); }
    long long completion_tokens() const { return completion_tokens_.load(); }
    long long calls() const { return calls_.load(); }

    // Total cost in nanodollars, computed from token totals so one rounding
    // step covers the whole run.
    long long cost_nanos() const {
        long long p = prompt_tokens_.load() * prices_.prompt_nanos_per_1k();
        long long c = completion_tokens_.load() * prices_.completion_nanos_per_1k();
        long long total = p + c;
        return (total + 500) / 1000;  // nanos-per-1k-token units -> nanos
    }

    CostReport report(long long items = 0) const {
        CostReport r;
        r.calls = calls();
        r.prompt_tokens = prompt_tokens();
        r.completion_tokens = completion_tokens();
        r.price_per_1k_prompt = prices_.prompt_per_1k;
        r.price_per_1k_completion = prices_.completion_per_1k;
        r.cost_nanos = cost_nanos();
        r.cost = static_cast<double>(r.cost_nanos) / 1e9;
        r.items = items;
        if (items > 0) {
            r.per_item_nanos = (r.cost_nanos + items / 2) / items;
            r.per_item = static_cast<double>(r.per_item_nanos) / 1e9;
        }
        return r;
    }

  private:
    PriceTable prices_;
    std::atomic<long long> prompt_tokens_{0};
    std::atomic<long long> completion_tokens_{0};
    std::atomic<long long> calls_{0};
};

class JudgeGateway {
  public:
    virtual ~JudgeGateway() = default;
    virtual JudgeResponse complete(const JudgeRequest& req) = 0;

    CostLedger& ledger() { return ledger_; }
    const CostLedger& ledger() const { return ledger_; }

    // 0 disables the cap.
    void set_budget_cap(double dollars) { budget_cap_nanos_ = std::llround(dollars * 1e9); }
    long long budget_cap_nanos() const { return budget_cap_nanos_; }

  protected:
    // Call at the top of complete(): refuses to spend once the cap is hit.
    void ensure_budget() const {
        if (budget_cap_nanos_ > 0 && ledger_.cost_nanos() >= budget_cap_nanos_)
            throw JudgeError(JudgeError::Kind::budget_exceeded,
                             "budget cap reached before the next judge call");
    }

    CostLedger ledger_;
    long long budget_cap_nanos_ = 0;
};

// Extract sample ids from [[id:...]] markers embedded in the prompt's data
// block, in order of first appearance.
inline std::vector<std::string> extract_id_markers(const std::string& prompt) {
    std::vector<std::string> ids;
    std::set<std::string> seen;
    static const std::string open = "[[id:";
    std::size_t pos = 0;
    while ((pos = prompt.find(open, pos)) != std::string::npos) {
        std::size_t start = pos + open.size();
        std::size_t close = prompt.find("]]", start);
        if (close == std::string::npos) break;
        std::string id = prompt.substr(start, close - start);
        if (seen.insert(id).second) ids.push_back(id);
        pos = close + 2;
    }
    return ids;
}

struct SimJudgeParams {
    double bias_alpha = 0.5;         // weight of the batch-composition shift
    double noise_sigma = 0.2;        // per-sample score noise (std dev)
    double calibration_noise = 0.3;  // extra batch-level noise when the batch
                                     // spans less of the scale than the pool
};

// Deterministic stand-in for an LLM judge. Each sample has a hidden true
// quality; a batch's scores are the qualities plus
//   * a shift toward the batch mean's offset from the pool mean
//     (bias_alpha): a batch of strong samples drags every score up,
//   * a batch-level wobble that grows as the batch's spread narrows
//     relative to the pool (calibration_noise): a batch that spans the whole
//     scale anchors the judge, a uniform batch leaves it guessing,
//   * per-sample noise (noise_sigma) keyed by (seed, round, id) so the same
//     sample can be compared across strategies at one seed,
// clipped to the scale and quantized to the score format. Responses follow
// the template wording and always parse. Samples are located via [[id:...]]
// markers in the prompt; temperature is accepted but has no effect.
class SimJudge : public JudgeGateway {
  public:
    SimJudge(std::map<std::string, double> quality, Criterion crit, Procedure procedure,
             std::uint64_t seed, SimJudgeParams params = {})
        : quality_(std::move(quality)),
          crit_(std::move(crit)),
          procedure_(procedure),
          seed_(seed),
          params_(params) {
        if (quality_.empty())
            throw ConfigError("simulated judge needs at least one sample quality");
        double sum = 0;
        for (const auto& [id, q] : quality_) sum += q;
        global_mean_ = sum / static_cast<double>(quality_.size());
        double var = 0;
        for (const auto& [id, q] : quality_) var += (q - global_mean_) * (q - global_mean_);
        global_sd_ = std::sqrt(var / static_cast<double>(quality_.size()));
    }

    JudgeResponse complete(const JudgeRequest& req) override {
        ensure_budget();
        std::vector<std::string> ids = extract_id_markers(req.prompt);
        if (ids.empty())
            throw JudgeError(JudgeError::Kind::unknown_sample,
                             "prompt carries no [[id:...]] sample markers");
        std::vector<double> q;
        q.reserve(ids.size());
        for (const auto& id : ids) {
            auto it = quality_.find(id);
            if (it == quality_.end())
                throw JudgeError(JudgeError::Kind::unknown_sample, "no quality for sample id '" + id + "'");
            q.push_back(it->second);
        }
        double n = static_cast<double>(q.size());
        double bmean = 0;
        for (double v : q) bmean += v;
        bmean /= n;
        double bvar = 0;
        for (double v : q) bvar += (v - bmean) * (v - bmean);
        double bsd = std::sqrt(bvar / n);

        double shift = params_.bias_alpha * (bmean - global_mean_);
        double narrowness = global_sd_ > 0.0 ? std::max(0.0, 1.0 - bsd / global_sd_) : 0.0;
        double eta = Rng(derive_seed(seed_, {0xBA7C4u, static_cast<std::uint64_t>(req.round),
                                             static_cast<std::uint64_t>(req.batch_index)}))
                         .normal();

        std::vector<double> scores(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) {
            double eps = Rng(derive_seed(seed_, {0x5A3Bu, static_cast<std::uint64_t>(req.round),
                                                 fnv1a64(ids[i])}))
                             .normal(0.0, params_.noise_sigma);
            double s = q[i] + shift + params_.calibration_noise * narrowness * eta + eps;
            s = std::clamp(s, crit_.score_min, crit_.score_max);
            // Quantize exactly the way the transcript will print it.
            scores[i] = std::strtod(format_score(s, crit_.format).c_str(), nullptr);
        }

        JudgeResponse resp;
        resp.text = render_response(scores);
        resp.usage.prompt_tokens = whitespace_token_count(req.prompt);
        resp.usage.completion_tokens = whitespace_token_count(resp.text);
        ledger_.add(resp.usage);
        return resp;
    }

    const Criterion& criterion() const { return crit_; }

  private:
    std::string render_response(const std::vector<double>& scores) const {
        std::string out;
        if (procedure_ == Procedure::one_stage) {
            out = "I will do my best to provide individual analysis and give a suitable float score "
                  "for each sample in order.\n";
            for (std::size_t i = 0; i < scores.size(); ++i)
                out += "Sample " + std::to_string(i + 1) + ": judged against the rest of the batch. " +
                       "Score of Sample" + std::to_string(i + 1) + ":[" +
                       format_score(scores[i], crit_.format) + "]\n";
            return out;
        }
        out = "I will do my best to provide individual analysis for each sample. Analysis:\n\n";
        for (std::size_t i = 0; i < scores.size(); ++i)
            out += "Sample " + std::to_string(i + 1) + ": judged against the rest of the batch.\n";
        if (procedure_ == Procedure::three_stage)
            out += "\nRanking: the samples are ordered by the strength of the analysis above.\n";
        out += "\n" + format_batch_scores(scores, crit_.format, procedure_) + "\n";
        return out;
    }

    std::map<std::string, double> quality_;
    Criterion crit_;
    Procedure procedure_;
    std::uint64_t seed_;
    SimJudgeParams params_;
    double global_mean_ = 0;
    double global_sd_ = 0;
};

}  // namespace batcheval
