// Command-line front end: run batched evaluations, audit and plot finished
// runs, sweep the simulated judge over knob grids, perturb datasets for
// robustness probes, and validate dataset files.
//
// Exit codes: 0 success, 2 configuration/data problem, 3 judge failure,
// 4 parse retries exhausted on at least half of the batches.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <batcheval/batcheval.hpp>

namespace {

using namespace batcheval;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitJudge = 3;
constexpr int kExitParseExhausted = 4;

struct RunOptions {
    std::string dataset;
    std::string criterion;
    std::string out;
    std::string template_dir;
    std::string strategy = "heterogeneous";
    std::string procedure = "two_stage";
    std::string format;  // empty keeps the criterion's declared format
    std::string judge = "sim";
    std::string timestamp;  // fixed manifest timestamp (reproducible runs)
    RunConfig cfg;
    SimJudgeParams sim;
    ApiJudgeConfig api;
};

struct DiagOptions {
    std::string run_dir;
    std::string dataset;
    std::string criterion;
    std::string out;  // empty writes next to the run artifacts
    double bin_width = 0.0;
};

struct SimulateOptions {
    SweepSpec spec;
    std::vector<std::string> strategies{"random", "homogeneous", "heterogeneous"};
    std::string procedure = "two_stage";
    std::string format = "decimal";
    std::string out;  // empty prints to stdout
};

struct PerturbOptions {
    std::string dataset;
    std::string out;
    std::string lexicon;
    std::string field;  // empty perturbs every field
    NoiseConfig noise;
};

double print_summary_and_pick_exit(const RunResult& r, const Dataset& ds, const Criterion& crit,
                                   int& exit_code) {
    std::printf("samples: %zu   rounds: %d   batches: %d (parse-failed %d)\n", ds.samples.size(),
                r.table.rounds, r.batches_total, r.batches_parse_failed);
    std::printf("scored: %zu   never scored: %zu\n", r.ensemble.size(), r.never_scored.size());

    double pearson_r = std::numeric_limits<double>::quiet_NaN();
    auto human = ds.human_scores(crit.name);
    std::vector<double> ens, hum;
    for (const auto& [id, h] : human) {
        auto it = r.ensemble.find(id);
        if (it == r.ensemble.end()) continue;
        ens.push_back(it->second);
        hum.push_back(h);
    }
    if (ens.size() >= 2) {
        CorrelationReport rep = correlation_report(ens, hum);
        if (rep.pearson.degenerate) {
            std::printf("agreement (n=%d): degenerate (constant scores)\n", rep.n);
        } else {
            std::printf("agreement (n=%d): pearson %.4f (p=%.3g)   spearman %.4f\n", rep.n,
                        rep.pearson.r, rep.pearson.p, rep.spearman.r);
            pearson_r = rep.pearson.r;
        }
    }
    std::printf("judge calls: %lld   tokens: %lld prompt / %lld completion\n", r.ledger.calls,
                r.ledger.prompt_tokens, r.ledger.completion_tokens);
    std::printf("cost: $%.6f   per sample: $%.6f\n", r.ledger.cost, r.ledger.per_item);

    if (r.batches_total > 0 && 2 * r.batches_parse_failed >= r.batches_total) {
        std::fprintf(stderr, "error: parse retries exhausted on %d of %d batches\n",
                     r.batches_parse_failed, r.batches_total);
        exit_code = kExitParseExhausted;
    }
    return pearson_r;
}

int cmd_run(const RunOptions& opt) {
    Dataset ds = load_dataset(opt.dataset);
    Criterion crit = ds.criterion(opt.criterion);
    if (!opt.format.empty()) crit.format = parse_score_format(opt.format);

    RunConfig cfg = opt.cfg;
    cfg.strategy = parse_strategy(opt.strategy);
    cfg.procedure = parse_procedure(opt.procedure);
    cfg.validate();

    PromptTemplate tmpl = select_template(opt.template_dir, cfg.procedure, ds.flavor, crit, ds.name);

    std::unique_ptr<JudgeGateway> judge;
    if (opt.judge == "sim") {
        auto quality = ds.human_scores(crit.name);
        if (quality.size() != ds.samples.size())
            throw ConfigError("the simulated judge needs a human '" + crit.name +
                              "' score on every sample (" + std::to_string(quality.size()) + " of " +
                              std::to_string(ds.samples.size()) + " present)");
        judge = std::make_unique<SimJudge>(std::move(quality), crit, cfg.procedure, cfg.seed, opt.sim);
        judge->ledger().set_prices(opt.api.prices);  // allow cost projection in sim mode
        if (opt.api.budget_cap > 0) judge->set_budget_cap(opt.api.budget_cap);
    } else if (opt.judge == "api") {
        judge = std::make_unique<ApiJudge>(opt.api);
    } else {
        throw ConfigError("unknown judge '" + opt.judge + "' (expected sim or api)");
    }

    Clock clock = opt.timestamp.empty() ? Clock::system() : Clock::fixed(opt.timestamp);
    RunManifest manifest;
    manifest.config = cfg;
    manifest.criterion_name = crit.name;
    manifest.format = to_string(crit.format);
    manifest.dataset_name = ds.name;
    manifest.dataset_digest = file_digest(opt.dataset);
    manifest.dataset_samples = static_cast<long long>(ds.samples.size());
    manifest.template_name = tmpl.name;
    manifest.judge_mode = opt.judge;
    manifest.started = clock.now();

    RunResult result = run_batcheval(ds.samples, crit, tmpl, cfg, *judge);
    manifest.finished = clock.now();

    write_run_artifacts(opt.out, result, manifest);
    int exit_code = kExitOk;
    print_summary_and_pick_exit(result, ds, crit, exit_code);
    std::printf("artifacts: %s\n", opt.out.c_str());
    return exit_code;
}

int cmd_diag(const DiagOptions& opt, bool plots_only) {
    LoadedRun run = read_run_artifacts(opt.run_dir);
    Dataset ds = load_dataset(opt.dataset);
    Criterion crit = ds.criterion(run.manifest.criterion_name);
    crit.format = parse_score_format(run.manifest.format);

    std::string digest = file_digest(opt.dataset);
    if (digest != run.manifest.dataset_digest)
        std::fprintf(stderr,
                     "warning: dataset digest %s does not match the manifest's %s; "
                     "diagnostics may mix datasets\n",
                     digest.c_str(), run.manifest.dataset_digest.c_str());

    DiagReport rep = compute_diagnostics(run.table, run.ensemble, run.partitions,
                                         ds.human_scores(crit.name), crit, opt.bin_width);
    std::filesystem::path dir(opt.out.empty() ? opt.run_dir : opt.out);
    if (plots_only) {
        write_plots(dir, rep);
        std::printf("plots: %s\n", dir.string().c_str());
    } else {
        write_diag(dir, rep);
        std::fputs(diag_report_json(rep).c_str(), stdout);
        std::printf("reports: %s\n", dir.string().c_str());
    }
    return kExitOk;
}

int cmd_simulate(const SimulateOptions& opt) {
    SweepSpec spec = opt.spec;
    spec.strategies.clear();
    for (const auto& s : opt.strategies) spec.strategies.push_back(parse_strategy(s));
    spec.procedure = parse_procedure(opt.procedure);
    spec.format = parse_score_format(opt.format);
    std::vector<SweepRow> rows = run_sweep(spec);
    std::string tsv = sweep_tsv(rows);
    if (opt.out.empty()) {
        std::fputs(tsv.c_str(), stdout);
    } else {
        detail::write_file(opt.out, tsv);
        std::printf("sweep: %zu rows -> %s\n", rows.size(), opt.out.c_str());
    }
    return kExitOk;
}

// Perturbs the natural-text stretches of a field while passing embedded
// [[id:...]] markers through verbatim. The markers are machine metadata the
// simulated judge relies on to recognize samples; deleting one would break
// every later run on the perturbed copy, which is not what a text-noise
// probe is meant to measure.
std::string perturb_keeping_markers(const std::string& text, const NoiseConfig& noise) {
    std::string out;
    std::size_t pos = 0;
    auto append_piece = [&out](const std::string& piece) {
        if (piece.empty()) return;
        if (!out.empty()) out += ' ';
        out += piece;
    };
    while (pos < text.size()) {
        std::size_t open = text.find("[[id:", pos);
        std::size_t close = open == std::string::npos ? std::string::npos : text.find("]]", open);
        if (close == std::string::npos) {
            append_piece(perturb(text.substr(pos), noise));
            break;
        }
        append_piece(perturb(text.substr(pos, open - pos), noise));
        append_piece(text.substr(open, close + 2 - open));
        pos = close + 2;
    }
    return out;
}

int cmd_perturb(const PerturbOptions& opt) {
    NoiseConfig noise = opt.noise;
    noise.validate();
    if (!opt.lexicon.empty()) noise.lexicon = load_lexicon(opt.lexicon);
    Dataset ds = load_dataset(opt.dataset);
    long long changed = 0;
    for (auto& s : ds.samples)
        for (auto& [name, value] : s.fields) {
            if (!opt.field.empty() && name != opt.field) continue;
            std::string next = perturb_keeping_markers(value, noise);
            if (next != value) ++changed;
            value = std::move(next);
        }
    ds.provenance += " | perturbed(p_delete=" + std::to_string(noise.p_delete) +
                     ", p_synonym=" + std::to_string(noise.p_synonym) +
                     ", seed=" + std::to_string(noise.seed) + ")";
    save_dataset(ds, opt.out);
    std::printf("perturbed %lld field(s) across %zu samples -> %s\n", changed, ds.samples.size(),
                opt.out.c_str());
    return kExitOk;
}

int cmd_validate(const std::string& path) {
    Dataset ds = load_dataset(path);  // throws DataError on any violation
    std::printf("ok: dataset '%s' with %zu sample(s), %zu criterion(-ia)\n", ds.name.c_str(),
                ds.samples.size(), ds.criteria.size());
    for (const auto& c : ds.criteria) {
        auto gold = ds.human_scores(c.name);
        std::printf("  - %s [%g,%g] %s, human scores on %zu sample(s)\n", c.name.c_str(),
                    c.score_min, c.score_max, to_string(c.format), gold.size());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Batched LLM-as-judge text evaluation"};
    app.require_subcommand(1);
    // Precedence: defaults, then the config file, then explicit flags.
    app.set_config("--config", "", "Read options from a TOML file ([run], [diag], ... sections)");

    RunOptions run_opt;
    CLI::App* run = app.add_subcommand("run", "Evaluate a dataset in scored batches");
    run->add_option("--dataset", run_opt.dataset, "Dataset JSONL file")->required();
    run->add_option("--criterion", run_opt.criterion, "Criterion name (default: the dataset's first)");
    run->add_option("--out", run_opt.out, "Directory for run artifacts")->required();
    run->add_option("--rounds", run_opt.cfg.rounds, "Evaluation rounds (default 5)");
    run->add_option("--batch-size", run_opt.cfg.batch_size, "Samples per batch (default 10)");
    run->add_option("--strategy", run_opt.strategy,
                    "Repartition strategy after round 1 (default heterogeneous)")
        ->check(CLI::IsMember({"random", "homogeneous", "heterogeneous"}));
    run->add_option("--procedure", run_opt.procedure, "Prompting procedure (default two_stage)")
        ->check(CLI::IsMember({"one_stage", "two_stage", "three_stage"}));
    run->add_option("--format", run_opt.format, "Override the criterion's score format")
        ->check(CLI::IsMember({"decimal", "integer"}));
    run->add_option("--temperature", run_opt.cfg.temperature, "Judge sampling temperature (default 0.2)");
    run->add_option("--seed", run_opt.cfg.seed, "Run seed (default 0)");
    run->add_option("--max-parse-retries", run_opt.cfg.max_parse_retries,
                    "Extra judge calls per unparseable batch (default 3)");
    run->add_option("--in-flight", run_opt.cfg.in_flight, "Concurrent judge calls (default 4)");
    run->add_option("--max-output", run_opt.cfg.max_output_tokens,
                    "Judge completion token limit (default 2048)");
    run->add_flag("--repartition-last,!--no-repartition-last", run_opt.cfg.repartition_on_last_round,
                  "Repartition before the final round too (default on)");
    run->add_option("--template-dir", run_opt.template_dir,
                    "Directory with <procedure>_<format>.txt prompt templates");
    run->add_option("--judge", run_opt.judge, "Judge backend: sim or api (default sim)")
        ->check(CLI::IsMember({"sim", "api"}));
    run->add_option("--timestamp", run_opt.timestamp,
                    "Fixed manifest timestamp (makes reruns byte-identical)");
    run->add_option("--bias-alpha", run_opt.sim.bias_alpha,
                    "Sim judge: batch-composition shift weight (default 0.5)");
    run->add_option("--noise-sigma", run_opt.sim.noise_sigma,
                    "Sim judge: per-sample score noise (default 0.2)");
    run->add_option("--calibration-noise", run_opt.sim.calibration_noise,
                    "Sim judge: extra wobble for narrow batches (default 0.3)");
    run->add_option("--model", run_opt.api.model, "API judge: model name (default gpt-4)");
    run->add_option("--api-base", run_opt.api.api_base,
                    "API judge: endpoint base URL (default $JUDGE_API_BASE)");
    run->add_option("--price-prompt", run_opt.api.prices.prompt_per_1k,
                    "Dollars per 1k prompt tokens (cost reporting)");
    run->add_option("--price-completion", run_opt.api.prices.completion_per_1k,
                    "Dollars per 1k completion tokens (cost reporting)");
    run->add_option("--budget-cap", run_opt.api.budget_cap,
                    "Abort before exceeding this many dollars (0 = off)");

    DiagOptions diag_opt;
    CLI::App* diag = app.add_subcommand("diag", "Audit a finished run: agreement, bias, decomposition");
    diag->add_option("--run", diag_opt.run_dir, "Run artifact directory")->required();
    diag->add_option("--dataset", diag_opt.dataset, "Dataset the run evaluated")->required();
    diag->add_option("--out", diag_opt.out, "Report directory (default: the run directory)");
    diag->add_option("--bin-width", diag_opt.bin_width,
                     "Entropy/histogram bin width (default 0.1 decimal, 1 integer)");

    DiagOptions plot_opt;
    CLI::App* plot = app.add_subcommand("plot", "Render SVG charts for a finished run");
    plot->add_option("--run", plot_opt.run_dir, "Run artifact directory")->required();
    plot->add_option("--dataset", plot_opt.dataset, "Dataset the run evaluated")->required();
    plot->add_option("--out", plot_opt.out, "Chart directory (default: the run directory)");
    plot->add_option("--bin-width", plot_opt.bin_width, "Histogram bin width");

    SimulateOptions sim_opt;
    CLI::App* simulate = app.add_subcommand(
        "simulate", "Sweep the simulated judge over batching strategies and knobs");
    simulate->add_option("--n", sim_opt.spec.n, "Samples per synthetic dataset (default 100)");
    simulate->add_option("--seeds", sim_opt.spec.seeds, "Replicates per cell (default 20)");
    simulate->add_option("--seed-base", sim_opt.spec.seed_base, "First replicate seed (default 1)");
    simulate->add_option("--batch-size", sim_opt.spec.batch_sizes, "Batch sizes to sweep");
    simulate->add_option("--strategy", sim_opt.strategies, "Strategies to sweep (default all three)")
        ->check(CLI::IsMember({"random", "homogeneous", "heterogeneous"}));
    simulate->add_option("--rounds", sim_opt.spec.rounds, "Round counts to sweep (default 5)");
    simulate->add_option("--bias-alpha", sim_opt.spec.bias_alphas, "Shift weights to sweep");
    simulate->add_option("--noise-sigma", sim_opt.spec.noise_sigmas, "Noise levels to sweep");
    simulate->add_option("--calibration-noise", sim_opt.spec.calibration_noises,
                         "Narrow-batch wobble levels to sweep");
    simulate->add_option("--procedure", sim_opt.procedure, "Prompting procedure (default two_stage)")
        ->check(CLI::IsMember({"one_stage", "two_stage", "three_stage"}));
    simulate->add_option("--format", sim_opt.format, "Score format (default decimal)")
        ->check(CLI::IsMember({"decimal", "integer"}));
    simulate->add_option("--out", sim_opt.out, "Write the TSV here instead of stdout");

    PerturbOptions pert_opt;
    CLI::App* perturb = app.add_subcommand(
        "perturb", "Write a noise-injected copy of a dataset for robustness probes");
    perturb->add_option("--dataset", pert_opt.dataset, "Dataset JSONL file")->required();
    perturb->add_option("--out", pert_opt.out, "Output dataset path")->required();
    perturb->add_option("--p-delete", pert_opt.noise.p_delete,
                        "Per-token deletion probability (default 0.05)");
    perturb->add_option("--p-synonym", pert_opt.noise.p_synonym,
                        "Per-token synonym swap probability (default 0.05)");
    perturb->add_option("--lexicon", pert_opt.lexicon, "Synonym lexicon (word<TAB>alt1,alt2,...)");
    perturb->add_option("--field", pert_opt.field, "Only perturb this sample field");
    perturb->add_option("--seed", pert_opt.noise.seed, "Perturbation seed (default 0)");

    std::string validate_path;
    CLI::App* validate = app.add_subcommand("validate", "Check a dataset file against the schema");
    validate->add_option("--dataset", validate_path, "Dataset JSONL file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(run_opt);
        if (diag->parsed()) return cmd_diag(diag_opt, false);
        if (plot->parsed()) return cmd_diag(plot_opt, true);
        if (simulate->parsed()) return cmd_simulate(sim_opt);
        if (perturb->parsed()) return cmd_perturb(pert_opt);
        if (validate->parsed()) return cmd_validate(validate_path);
    } catch (const JudgeError& e) {
        std::fprintf(stderr, "judge error: %s\n", e.what());
        return kExitJudge;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
    return kExitOk;
}
