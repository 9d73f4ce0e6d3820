#pragma once

// Simulation sweeps: run the full engine against the simulated judge over a
// grid of knob settings, averaging agreement/bias/entropy over seeds. This
// is how batch-size and strategy effects are measured without spending a
// single API token.

#include <sstream>
#include <string>
#include <vector>

#include "batcheval/datasets.hpp"
#include "batcheval/engine.hpp"
#include "batcheval/judge.hpp"
#include "batcheval/metrics.hpp"
#include "batcheval/prompts.hpp"
#include "batcheval/report.hpp"

namespace batcheval {

struct SweepSpec {
    int n = 100;                  // samples per synthetic dataset
    int seeds = 20;               // replicates per cell
    std::uint64_t seed_base = 1;  // replicate k uses seed_base + k
    std::vector<int> batch_sizes{10};
    std::vector<Strategy> strategies{Strategy::heterogeneous};
    std::vector<int> rounds{5};
    std::vector<double> bias_alphas{0.5};
    std::vector<double> noise_sigmas{0.2};
    std::vector<double> calibration_noises{0.3};
    Procedure procedure = Procedure::two_stage;
    ScoreFormat format = ScoreFormat::decimal;
    Criterion criterion;  // name empty -> default synthetic criterion

    void validate() const {
        if (n < 1) throw ConfigError("sweep: n must be >= 1");
        if (seeds < 1) throw ConfigError("sweep: seeds must be >= 1");
        if (batch_sizes.empty() || strategies.empty() || rounds.empty() || bias_alphas.empty() ||
            noise_sigmas.empty() || calibration_noises.empty())
            throw ConfigError("sweep: every swept list needs at least one value");
        for (int b : batch_sizes)
            if (b < 1) throw ConfigError("sweep: batch sizes must be >= 1");
        for (int r : rounds)
            if (r < 1) throw ConfigError("sweep: rounds must be >= 1");
    }
};

struct SweepRow {
    int batch_size = 0;
    Strategy strategy = Strategy::heterogeneous;
    int rounds = 0;
    double bias_alpha = 0;
    double noise_sigma = 0;
    double calibration_noise = 0;
    int seeds = 0;
    double mean_pearson = 0;
    double mean_spearman = 0;
    double mean_batch_bias = 0;
    double mean_entropy = 0;  // pooled scores
};

inline Criterion default_sweep_criterion(ScoreFormat fmt = ScoreFormat::decimal) {
    Criterion c;
    c.name = "Quality";
    c.definition = "Overall latent quality of the passage.";
    c.score_min = 1;
    c.score_max = 3;
    c.format = fmt;
    c.anchors = {
        {1, "(low) means the passage reads poorly overall."},
        {2, "(medium) means the passage is serviceable but flawed."},
        {3, "(high) means the passage reads well throughout."},
    };
    return c;
}

// Evaluate one cell at one seed and report (pearson, spearman, bias, entropy).
struct SweepCellResult {
    double pearson = 0, spearman = 0, bias = 0, entropy = 0;
};

inline SweepCellResult run_sweep_cell(const SweepSpec& spec, int batch_size, Strategy strategy,
                                      int rounds, double bias_alpha, double noise_sigma,
                                      double calibration_noise, std::uint64_t seed) {
    Criterion crit = spec.criterion.name.empty() ? default_sweep_criterion(spec.format) : spec.criterion;
    crit.format = spec.format;
    Dataset ds = synth_dataset(spec.n, crit, seed);
    std::map<std::string, double> quality = ds.human_scores(crit.name);

    SimJudgeParams params;
    params.bias_alpha = bias_alpha;
    params.noise_sigma = noise_sigma;
    params.calibration_noise = calibration_noise;
    SimJudge judge(quality, crit, spec.procedure, seed, params);

    RunConfig cfg;
    cfg.rounds = rounds;
    cfg.batch_size = batch_size;
    cfg.strategy = strategy;
    cfg.procedure = spec.procedure;
    cfg.seed = seed;
    PromptTemplate tmpl = select_template("", spec.procedure, ds.flavor, crit, ds.name);
    RunResult result = run_batcheval(ds.samples, crit, tmpl, cfg, judge);

    std::vector<double> ens, hum;
    for (const auto& [id, h] : quality) {
        auto it = result.ensemble.find(id);
        if (it == result.ensemble.end()) continue;
        ens.push_back(it->second);
        hum.push_back(h);
    }
    SweepCellResult out;
    CorrelationReport corr = correlation_report(ens, hum);
    out.pearson = corr.pearson.r;
    out.spearman = corr.spearman.r;
    DiagReport diag = compute_diagnostics(result.table, result.ensemble, result.partitions, quality,
                                          crit);
    out.bias = diag.mean_batch_bias;
    out.entropy = diag.entropy_pooled;
    return out;
}

inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    spec.validate();
    std::vector<SweepRow> rows;
    for (int B : spec.batch_sizes)
        for (Strategy st : spec.strategies)
            for (int N : spec.rounds)
                for (double alpha : spec.bias_alphas)
                    for (double sigma : spec.noise_sigmas)
                        for (double gamma : spec.calibration_noises) {
                            SweepRow row;
                            row.batch_size = B;
                            row.strategy = st;
                            row.rounds = N;
                            row.bias_alpha = alpha;
                            row.noise_sigma = sigma;
                            row.calibration_noise = gamma;
                            row.seeds = spec.seeds;
                            for (int k = 0; k < spec.seeds; ++k) {
                                SweepCellResult cell = run_sweep_cell(
                                    spec, B, st, N, alpha, sigma, gamma, spec.seed_base + static_cast<std::uint64_t>(k));
                                row.mean_pearson += cell.pearson;
                                row.mean_spearman += cell.spearman;
                                row.mean_batch_bias += cell.bias;
                                row.mean_entropy += cell.entropy;
                            }
                            double s = static_cast<double>(spec.seeds);
                            row.mean_pearson /= s;
                            row.mean_spearman /= s;
                            row.mean_batch_bias /= s;
                            row.mean_entropy /= s;
                            rows.push_back(row);
                        }
    return rows;
}

inline std::string sweep_tsv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "batch_size\tstrategy\trounds\tbias_alpha\tnoise_sigma\tcalibration_noise\tseeds"
        << "\tmean_pearson\tmean_spearman\tmean_batch_bias\tmean_entropy\n";
    for (const auto& r : rows)
        out << r.batch_size << '\t' << to_string(r.strategy) << '\t' << r.rounds << '\t'
            << r.bias_alpha << '\t' << r.noise_sigma << '\t' << r.calibration_noise << '\t'
            << r.seeds << '\t' << r.mean_pearson << '\t' << r.mean_spearman << '\t'
            << r.mean_batch_bias << '\t' << r.mean_entropy << '\n';
    return out.str();
}

}  // namespace batcheval
