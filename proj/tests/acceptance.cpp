// End-to-end acceptance checks, one per core behavioural guarantee. Each
// check prints [PASS]/[FAIL] with the measured numbers; the process exits
// nonzero if any check fails. Tolerances and seed blocks are pinned here.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <batcheval/artifacts.hpp>
#include <batcheval/batcheval.hpp>

using namespace batcheval;

namespace {

// ---- pinned tolerances and experiment sizes -------------------------------
constexpr double kIdentityTol = 1e-9;       // decomposition identity
constexpr int kIdentityCases = 1000;
constexpr int kPartitionCases = 500;        // randomized partition-law cases
constexpr int kSeeds = 20;                  // replicates for ordering checks
constexpr std::uint64_t kSeedBase = 1;      // first replicate seed
constexpr int kBiasOrderMin = 14;           // of kSeeds: bias ordering holds
constexpr int kPearsonOrderMin = 14;        // of kSeeds: agreement ordering holds
constexpr int kVarianceOrderMin = 13;       // of kSeeds: diversity gain holds
constexpr int kEntropyOrderMin = 16;        // of kSeeds: format entropy ordering
constexpr int kBoundTrials = 1000;          // rank-stability Monte Carlo
constexpr double kBoundWindow = 0.02;       // distance to the theoretical bound
constexpr int kFuzzTrials = 1000;           // parser fuzz per (procedure, format)
constexpr double kAttentionTol = 1e-12;

int g_failures = 0;

void report(int index, const char* title, bool pass, const std::string& detail) {
    std::printf("[%s] %2d. %-38s %s\n", pass ? "PASS" : "FAIL", index, title, detail.c_str());
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. Mean/variance error decomposition identity.

bool check_decomposition(std::string& detail) {
    Rng rng(101);
    double worst = 0.0;
    for (int rep = 0; rep < kIdentityCases; ++rep) {
        int n = 1 + static_cast<int>(rng.index(40));
        std::vector<double> scores(static_cast<std::size_t>(n));
        for (auto& s : scores) s = rng.uniform(-1.0, 5.0);
        double y = rng.uniform(-1.0, 6.0);
        Decomposition d = decompose(scores, y);
        worst = std::max(worst, std::fabs(d.err_mean - (d.err_ensemble + d.variance)));
    }
    // Worked example: scores {2, 3, 2.5} against gold 2.
    Decomposition d = decompose({2.0, 3.0, 2.5}, 2.0);
    bool example = std::fabs(d.err_ensemble - 0.25) < 1e-12 &&
                   std::fabs(d.err_mean - 5.0 / 12.0) < 1e-12 &&
                   std::fabs(d.variance - 1.0 / 6.0) < 1e-12;
    detail = fmt("%d cases, worst |err_mean-(err_ensemble+var)| = %.2e (tol %.0e)", kIdentityCases,
                 worst, kIdentityTol);
    return worst <= kIdentityTol && example;
}

// ---------------------------------------------------------------------------
// 2. Partition laws across strategies for randomized sizes.

bool check_partition_laws(std::string& detail) {
    Rng rng(202);
    for (int rep = 0; rep < kPartitionCases; ++rep) {
        int n = 1 + static_cast<int>(rng.index(500));
        int B = 1 + static_cast<int>(rng.index(20));
        std::vector<std::string> ids;
        std::map<std::string, double> scores;
        for (int i = 0; i < n; ++i) {
            std::string id = "x" + std::to_string(i);
            ids.push_back(id);
            scores[id] = 0.5 * static_cast<double>(rng.index(9));  // ties on purpose
        }
        rng.shuffle(ids);
        int L = (n + B - 1) / B;

        Rng prng(derive_seed(7, {0xF157u, static_cast<std::uint64_t>(rep)}));
        std::vector<Partition> parts{partition_random(ids, B, prng),
                                     partition_homogeneous(ids, scores, B),
                                     partition_heterogeneous(ids, scores, B, rep % (L + 1))};
        for (std::size_t v = 0; v < parts.size(); ++v) {
            const Partition& p = parts[v];
            if (static_cast<int>(p.batches.size()) != L) {
                detail = fmt("case %d variant %zu: %zu batches, expected %d", rep, v,
                             p.batches.size(), L);
                return false;
            }
            std::set<std::string> seen;
            for (const auto& b : p.batches) {
                if (b.empty()) {
                    detail = fmt("case %d variant %zu: empty batch", rep, v);
                    return false;
                }
                for (const auto& id : b)
                    if (!seen.insert(id).second) {
                        detail = fmt("case %d variant %zu: id repeated", rep, v);
                        return false;
                    }
            }
            if (static_cast<int>(seen.size()) != n) {
                detail = fmt("case %d variant %zu: covered %zu of %d ids", rep, v, seen.size(), n);
                return false;
            }
            std::size_t mx = 0, mn = ids.size();
            for (const auto& b : p.batches) {
                mx = std::max(mx, b.size());
                mn = std::min(mn, b.size());
            }
            if (v <= 1 && static_cast<int>(mx) > B) {
                detail = fmt("case %d variant %zu: batch larger than %d", rep, v, B);
                return false;
            }
            if (v == 2 && mx - mn > 1) {
                detail = fmt("case %d: spread batch sizes differ by %zu", rep, mx - mn);
                return false;
            }
        }

        // Contiguity of the sorted order for the similarity grouping.
        {
            std::vector<std::string> sorted = ids;
            std::sort(sorted.begin(), sorted.end(), [&](const auto& a, const auto& b) {
                return std::make_pair(scores.at(a), a) < std::make_pair(scores.at(b), b);
            });
            std::map<std::string, int> rank;
            for (std::size_t i = 0; i < sorted.size(); ++i) rank[sorted[i]] = static_cast<int>(i);
            int expect = 0;
            for (const auto& b : parts[1].batches)
                for (const auto& id : b)
                    if (rank.at(id) != expect++) {
                        detail = fmt("case %d: similarity grouping not contiguous", rep);
                        return false;
                    }
            // Spread grouping: at most one element per contiguous run of L.
            for (const auto& b : parts[2].batches) {
                std::set<int> splits;
                for (const auto& id : b)
                    if (!splits.insert(rank.at(id) / L).second) {
                        detail = fmt("case %d: two same-split elements in one spread batch", rep);
                        return false;
                    }
            }
            // With full splits, every spread batch straddles the whole scale:
            // its mean rank stays within L/2 of the global mean rank.
            if (n % B == 0) {
                double mid = (static_cast<double>(n) - 1.0) / 2.0;
                for (const auto& b : parts[2].batches) {
                    double m = 0;
                    for (const auto& id : b) m += rank.at(id);
                    m /= static_cast<double>(b.size());
                    if (std::fabs(m - mid) > static_cast<double>(L) / 2.0) {
                        detail = fmt("case %d: spread batch mean rank off by %.2f > %.2f", rep,
                                     std::fabs(m - mid), static_cast<double>(L) / 2.0);
                        return false;
                    }
                }
            }
        }
    }
    detail = fmt("%d randomized cases, n in [1,500], batch size in [1,20]", kPartitionCases);
    return true;
}

// ---------------------------------------------------------------------------
// 3. Worked example: 20 ranked samples, batch size 10, alternating placement.

bool check_spread_worked_example(std::string& detail) {
    std::vector<std::string> ids;
    std::map<std::string, double> scores;
    for (int i = 1; i <= 20; ++i) {
        std::string id = (i < 10 ? "a0" : "a") + std::to_string(i);
        ids.push_back(id);
        scores[id] = 0.1 * i;  // rank i
    }
    Partition p = partition_heterogeneous(ids, scores, 10, 0);
    if (p.batches.size() != 2) {
        detail = fmt("expected 2 batches, got %zu", p.batches.size());
        return false;
    }
    auto ranks_of = [&](const std::vector<std::string>& b) {
        std::set<int> r;
        for (const auto& id : b) r.insert(static_cast<int>(std::lround(scores.at(id) * 10)));
        return r;
    };
    std::set<int> odd{1, 3, 5, 7, 9, 11, 13, 15, 17, 19};
    std::set<int> even{2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
    bool ok = ranks_of(p.batches[0]) == odd && ranks_of(p.batches[1]) == even;
    // A different rotation must move elements between the two batches.
    Partition q = partition_heterogeneous(ids, scores, 10, 1);
    ok = ok && ranks_of(q.batches[0]) != odd;
    detail = ok ? "ranks 1..20 split into odd/even interleave; rotation reshuffles"
                : "interleave did not split odd/even ranks";
    return ok;
}

// ---------------------------------------------------------------------------
// Shared simulated-judge experiment plumbing for checks 4-6.

struct SimRun {
    Dataset ds;
    Criterion crit;
    RunResult result;
    DiagReport diag;
};

SimRun sim_run(int n, std::uint64_t seed, Strategy strategy, ScoreFormat format,
               SimJudgeParams params, int rounds = 5, int batch = 10) {
    SimRun out;
    out.crit = default_sweep_criterion(format);
    out.ds = synth_dataset(n, out.crit, seed);
    PromptTemplate tmpl = select_template("", Procedure::two_stage, out.ds.flavor, out.crit,
                                          out.ds.name);
    RunConfig cfg;
    cfg.rounds = rounds;
    cfg.batch_size = batch;
    cfg.strategy = strategy;
    cfg.seed = seed;
    SimJudge judge(out.ds.human_scores(out.crit.name), out.crit, cfg.procedure, seed, params);
    out.result = run_batcheval(out.ds.samples, out.crit, tmpl, cfg, judge);
    out.diag = compute_diagnostics(out.result.table, out.result.ensemble, out.result.partitions,
                                   out.ds.human_scores(out.crit.name), out.crit);
    return out;
}

double pearson_vs_human(const SimRun& r) {
    std::vector<double> ens, hum;
    for (const auto& [id, h] : r.ds.human_scores(r.crit.name)) {
        auto it = r.result.ensemble.find(id);
        if (it == r.result.ensemble.end()) continue;
        ens.push_back(it->second);
        hum.push_back(h);
    }
    return pearson(ens, hum).r;
}

// ---------------------------------------------------------------------------
// 4. Strategy ordering: spreading the scale across each batch beats random
//    grouping, which beats grouping similar samples together.

bool check_strategy_ordering(std::string& detail) {
    int bias_ok = 0, pearson_ok = 0;
    double mb_het = 0, mb_rand = 0, mb_hom = 0, mp_het = 0, mp_hom = 0, mp_rand = 0;
    for (int k = 0; k < kSeeds; ++k) {
        std::uint64_t seed = kSeedBase + static_cast<std::uint64_t>(k);
        SimRun het = sim_run(100, seed, Strategy::heterogeneous, ScoreFormat::decimal, {});
        SimRun rnd = sim_run(100, seed, Strategy::random, ScoreFormat::decimal, {});
        SimRun hom = sim_run(100, seed, Strategy::homogeneous, ScoreFormat::decimal, {});
        if (het.diag.mean_batch_bias < rnd.diag.mean_batch_bias &&
            rnd.diag.mean_batch_bias < hom.diag.mean_batch_bias)
            ++bias_ok;
        double ph = pearson_vs_human(het), pm = pearson_vs_human(hom), pr = pearson_vs_human(rnd);
        if (ph > pm) ++pearson_ok;
        mb_het += het.diag.mean_batch_bias;
        mb_rand += rnd.diag.mean_batch_bias;
        mb_hom += hom.diag.mean_batch_bias;
        mp_het += ph;
        mp_hom += pm;
        mp_rand += pr;
    }
    double s = kSeeds;
    bool mean_bias = mb_het / s < mb_rand / s && mb_rand / s < mb_hom / s;
    bool mean_pearson = mp_het / s > mp_hom / s;
    detail = fmt("bias spread<random<similar on %d/%d seeds (means %.3f/%.3f/%.3f); "
                 "agreement spread>similar on %d/%d (means %.3f/%.3f/%.3f)",
                 bias_ok, kSeeds, mb_het / s, mb_rand / s, mb_hom / s, pearson_ok, kSeeds,
                 mp_het / s, mp_rand / s, mp_hom / s);
    return bias_ok >= kBiasOrderMin && pearson_ok >= kPearsonOrderMin && mean_bias && mean_pearson;
}

// ---------------------------------------------------------------------------
// 5. Score averaging never hurts, and regrouping each round adds diversity
//    over freezing one grouping.

bool check_averaging_and_diversity(std::string& detail) {
    int var_ok = 0;
    double worst_gap = -1e300;
    for (int k = 0; k < kSeeds; ++k) {
        std::uint64_t seed = kSeedBase + static_cast<std::uint64_t>(k);
        SimRun het = sim_run(100, seed, Strategy::heterogeneous, ScoreFormat::decimal, {});
        for (const auto& d : het.diag.decomposition_by_round)
            worst_gap = std::max(worst_gap, d.err_ensemble - d.err_mean);

        // Control: the same judge scores the round-1 grouping five times.
        Criterion crit = het.crit;
        auto quality = het.ds.human_scores(crit.name);
        SimJudge judge(quality, crit, Procedure::two_stage, seed, {});
        Rng prng(derive_seed(seed, {0xF157u, 1u}));
        Partition fixed = partition_random(het.ds.ids(), 10, prng);
        std::map<std::string, std::vector<double>> frozen;
        for (int round = 1; round <= 5; ++round) {
            for (std::size_t b = 0; b < fixed.batches.size(); ++b) {
                const auto& batch = fixed.batches[b];
                std::string prompt = "You will be given a batch of " +
                                     std::to_string(batch.size()) + " samples.\n";
                for (std::size_t i = 0; i < batch.size(); ++i)
                    prompt += "Sample " + std::to_string(i + 1) + ": [[id:" + batch[i] + "]]\n";
                JudgeRequest req;
                req.prompt = prompt;
                req.round = round;
                req.batch_index = static_cast<int>(b);
                JudgeResponse resp = judge.complete(req);
                auto parsed = parse_batch_scores(resp.text, static_cast<int>(batch.size()), crit,
                                                 Procedure::two_stage);
                for (const auto& [idx, v] : parsed.scores)
                    frozen[batch[static_cast<std::size_t>(idx - 1)]].push_back(v);
            }
        }
        auto mean_variance = [](const std::map<std::string, std::vector<double>>& scores) {
            double acc = 0;
            for (const auto& [id, v] : scores) {
                double m = 0;
                for (double s : v) m += s;
                m /= static_cast<double>(v.size());
                double var = 0;
                for (double s : v) var += (s - m) * (s - m);
                acc += var / static_cast<double>(v.size());
            }
            return acc / static_cast<double>(scores.size());
        };
        std::map<std::string, std::vector<double>> het_scores;
        for (const auto& [id, slots] : het.result.table.entries)
            for (const auto& v : slots)
                if (v) het_scores[id].push_back(*v);
        if (mean_variance(het_scores) > mean_variance(frozen)) ++var_ok;
    }
    detail = fmt("ensemble error <= per-score error every round (worst gap %.2e); "
                 "regrouping beats a frozen grouping on diversity in %d/%d seeds",
                 worst_gap, var_ok, kSeeds);
    return worst_gap <= 1e-12 && var_ok >= kVarianceOrderMin;
}

// ---------------------------------------------------------------------------
// 6. Decimal scoring spreads scores across more of the scale than integer
//    scoring.

bool check_format_entropy(std::string& detail) {
    int ok = 0;
    double md = 0, mi = 0;
    for (int k = 0; k < kSeeds; ++k) {
        std::uint64_t seed = kSeedBase + static_cast<std::uint64_t>(k);
        SimRun dec = sim_run(100, seed, Strategy::heterogeneous, ScoreFormat::decimal, {});
        SimRun itg = sim_run(100, seed, Strategy::heterogeneous, ScoreFormat::integer, {});
        if (dec.diag.entropy_pooled > itg.diag.entropy_pooled) ++ok;
        md += dec.diag.entropy_pooled;
        mi += itg.diag.entropy_pooled;
    }
    detail = fmt("decimal entropy > integer entropy on %d/%d seeds (means %.3f vs %.3f bits)", ok,
                 kSeeds, md / kSeeds, mi / kSeeds);
    return ok >= kEntropyOrderMin && md > mi;
}

// ---------------------------------------------------------------------------
// 7. Rank stability under small score disturbances: the uniform distribution
//    attains the theoretical ceiling, concentrated distributions fall short.

bool check_rank_stability_bound(std::string& detail) {
    const int n = 100;
    const double lambda_hi = 0.02;  // per-item disturbance ~ U[0, 0.02]
    Rng rng(707);
    auto mean_spearman = [&](bool concentrated) {
        double acc = 0;
        for (int t = 0; t < kBoundTrials; ++t) {
            std::vector<double> x(n), v(n);
            for (int i = 0; i < n; ++i) {
                double u = rng.uniform();
                x[i] = concentrated ? u * u * u : u;  // cube packs mass near 0
                v[i] = x[i] + rng.uniform(0.0, lambda_hi);
            }
            acc += spearman(x, v).r;
        }
        return acc / kBoundTrials;
    };
    double uniform_rs = mean_spearman(false);
    double concentrated_rs = mean_spearman(true);
    // The closed form takes the expected per-item rank displacement. A value
    // shift of expected size E(lambda) on a unit scale displaces a rank by
    // the probability mass it jumps over, i.e. about n*E(lambda) positions
    // when the scores are uniform -- the distribution that attains the bound.
    const double mean_shift = lambda_hi / 2.0;  // E(lambda) = 0.01
    double bound_attained = spearman_noise_bound(n * mean_shift, n);
    bool near = std::fabs(bound_attained - uniform_rs) <= kBoundWindow;
    bool below = uniform_rs <= bound_attained + 0.005;  // co-movement + MC slack
    bool ordered = concentrated_rs < uniform_rs;
    detail = fmt("bound %.6f, uniform %.6f (|gap| %.4g <= %.2f), concentrated %.6f below uniform",
                 bound_attained, uniform_rs, std::fabs(bound_attained - uniform_rs), kBoundWindow,
                 concentrated_rs);
    return near && below && ordered;
}

// ---------------------------------------------------------------------------
// 8. Score-list parsing: canonical outputs, decorated outputs, and the
//    designated failure taxonomy.

bool check_parsing(std::string& detail) {
    Criterion dec = default_sweep_criterion(ScoreFormat::decimal);
    Criterion itg = default_sweep_criterion(ScoreFormat::integer);
    Rng rng(808);

    for (Procedure proc : {Procedure::one_stage, Procedure::two_stage, Procedure::three_stage}) {
        for (const Criterion* crit : {&dec, &itg}) {
            for (int t = 0; t < kFuzzTrials; ++t) {
                int n = 1 + static_cast<int>(rng.index(12));
                std::vector<double> scores(static_cast<std::size_t>(n));
                for (auto& s : scores) {
                    double raw = rng.uniform(crit->score_min, crit->score_max);
                    s = std::strtod(format_score(raw, crit->format).c_str(), nullptr);
                }
                std::string body = format_batch_scores(scores, crit->format, proc);
                std::string text;
                if (rng.uniform() < 0.7) text += "Analysis of each sample follows.\n";
                if (proc != Procedure::one_stage && rng.uniform() < 0.3)
                    text += "Scores: [Sample1:" + format_score(crit->score_min, crit->format) +
                            "]\nOn reflection, the calibrated list is below.\n";
                text += body;
                if (rng.uniform() < 0.5) text += "\nThese ratings are final.";
                ParsedScores parsed = parse_batch_scores(text, n, *crit, proc);
                for (int i = 1; i <= n; ++i)
                    if (parsed.scores.at(i) != scores[static_cast<std::size_t>(i - 1)]) {
                        detail = fmt("fuzz mismatch at trial %d", t);
                        return false;
                    }
            }
        }
    }

    // Designated failures.
    struct Bad {
        const char* text;
        int n;
        ParseError::Kind kind;
    };
    const std::vector<Bad> corpus = {
        {"no list at all", 3, ParseError::Kind::marker_not_found},
        {"Scores happen later, maybe", 2, ParseError::Kind::marker_not_found},
        {"Scores: [Sample1:2.0]", 2, ParseError::Kind::count_mismatch},
        {"Scores: [Sample1:2.0,Sample2:2.5,Sample3:1.0]", 2, ParseError::Kind::count_mismatch},
        {"Scores: [Sample1:2.0,Sample1:2.5]", 2, ParseError::Kind::duplicate_index},
        {"Scores: [Sample1:2.0,Sample3:2.5]", 2, ParseError::Kind::count_mismatch},
        {"Scores: [Sample1:9.0,Sample2:2.0]", 2, ParseError::Kind::out_of_range},
        {"Scores: [Sample1:0.2,Sample2:2.0]", 2, ParseError::Kind::out_of_range},
        {"Scores: [Sample1:nan,Sample2:2.0]", 2, ParseError::Kind::out_of_range},
        {"Scores: [Sample1:2.0,Sample2:banana]", 2, ParseError::Kind::count_mismatch},
        {"Scores: [Sample1:2.0,Sample2:2.5", 2, ParseError::Kind::count_mismatch},
        {"Scores: []", 2, ParseError::Kind::count_mismatch},
    };
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        try {
            parse_batch_scores(corpus[i].text, corpus[i].n, dec, Procedure::two_stage);
            detail = fmt("malformed case %zu parsed without error", i);
            return false;
        } catch (const ParseError& e) {
            if (e.kind != corpus[i].kind) {
                detail = fmt("malformed case %zu raised %s, expected %s", i, to_string(e.kind),
                             to_string(corpus[i].kind));
                return false;
            }
        }
    }
    // Integer lists reject fractional entries.
    try {
        parse_batch_scores("Scores: [Sample1:2.5,Sample2:2]", 2, itg, Procedure::two_stage);
        detail = "fractional integer score parsed without error";
        return false;
    } catch (const ParseError& e) {
        if (e.kind != ParseError::Kind::non_integer_score) {
            detail = "fractional integer score raised the wrong kind";
            return false;
        }
    }
    detail = fmt("%d fuzzed lists per procedure/format round-trip; 13 designated failures typed",
                 kFuzzTrials);
    return true;
}

// ---------------------------------------------------------------------------
// 9. Attention normalization equals a brute-force reference.

bool check_attention(std::string& detail) {
    std::mt19937_64 gen(909);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int rep = 0; rep < 25; ++rep) {
        int n = 8 + static_cast<int>(gen() % 57);
        std::vector<std::vector<double>> att(static_cast<std::size_t>(n),
                                             std::vector<double>(static_cast<std::size_t>(n), 0.0));
        for (int x = 0; x < n; ++x) {
            double sum = 0;
            for (int y = 0; y <= x; ++y) {
                att[x][y] = u(gen) + 1e-3;
                sum += att[x][y];
            }
            for (int y = 0; y <= x; ++y) att[x][y] /= sum;
        }
        int c1 = 1 + static_cast<int>(gen() % (n - 2));
        int c2 = c1 + 1 + static_cast<int>(gen() % (n - c1 - 1));
        std::vector<Span> spans{{"s0", 0, c1}, {"s1", c1, c2}, {"s2", c2, n}};
        auto out = normalize_attention(att, spans);
        for (std::size_t i = 0; i < spans.size(); ++i) {
            for (std::size_t j = 0; j < spans.size(); ++j) {
                double sum = 0;
                long long cnt = 0;
                for (int x = spans[i].begin; x < spans[i].end; ++x)
                    for (int y = spans[j].begin; y < spans[j].end; ++y) {
                        if (y > x) continue;
                        sum += att[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] *
                               (x + 1);
                        ++cnt;
                    }
                if (cnt == 0) {
                    if (!std::isnan(out[i][j])) {
                        detail = "acausal span pair did not yield NaN";
                        return false;
                    }
                } else {
                    worst = std::max(worst, std::fabs(out[i][j] - sum / static_cast<double>(cnt)));
                }
            }
        }
    }
    // Uniform causal attention normalizes to exactly one everywhere causal.
    const int n = 16;
    std::vector<std::vector<double>> att(n, std::vector<double>(n, 0.0));
    for (int x = 0; x < n; ++x)
        for (int y = 0; y <= x; ++y) att[x][y] = 1.0 / (x + 1);
    auto out = normalize_attention(att, {{"lo", 0, 8}, {"hi", 8, 16}});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            worst = std::max(worst, std::fabs(out[i][j] - 1.0));
    detail = fmt("25 randomized matrices (<=64 tokens) + uniform case, worst gap %.2e (tol %.0e)",
                 worst, kAttentionTol);
    return worst <= kAttentionTol;
}

// ---------------------------------------------------------------------------
// 10. Determinism: reruns and concurrency changes leave every artifact byte
//     untouched.

bool check_determinism(std::string& detail) {
    auto one = [](int in_flight) {
        SimRun r;
        r.crit = default_sweep_criterion();
        r.ds = synth_dataset(60, r.crit, 404);
        PromptTemplate tmpl = select_template("", Procedure::two_stage, r.ds.flavor, r.crit,
                                              r.ds.name);
        RunConfig cfg;
        cfg.rounds = 4;
        cfg.batch_size = 8;
        cfg.seed = 404;
        cfg.in_flight = in_flight;
        SimJudge judge(r.ds.human_scores(r.crit.name), r.crit, cfg.procedure, 404, {});
        r.result = run_batcheval(r.ds.samples, r.crit, tmpl, cfg, judge);
        return r;
    };
    SimRun a = one(1), b = one(1), c = one(8);
    bool tables = serialize_score_table(a.result.table) == serialize_score_table(b.result.table) &&
                  serialize_score_table(a.result.table) == serialize_score_table(c.result.table);
    bool parts = serialize_partitions(a.result.partitions) ==
                     serialize_partitions(b.result.partitions) &&
                 serialize_partitions(a.result.partitions) ==
                     serialize_partitions(c.result.partitions);
    bool trans = serialize_transcripts(a.result.transcripts) ==
                     serialize_transcripts(b.result.transcripts) &&
                 serialize_transcripts(a.result.transcripts) ==
                     serialize_transcripts(c.result.transcripts);

    auto manifest_bytes = [&](const SimRun& r) {
        RunManifest m;
        m.config.seed = 404;
        m.criterion_name = r.crit.name;
        m.format = to_string(r.crit.format);
        m.dataset_name = r.ds.name;
        m.dataset_digest = content_digest(serialize_dataset(r.ds));
        m.dataset_samples = 60;
        m.template_name = "generic_two_stage_decimal";
        m.judge_mode = "sim";
        Clock clock = Clock::fixed("2026-01-01T00:00:00Z");
        m.started = clock.now();
        m.finished = clock.now();
        return serialize_manifest(m);
    };
    bool manifests = manifest_bytes(a) == manifest_bytes(c);
    detail = fmt("rerun and in-flight 1 vs 8: tables %s, partitions %s, transcripts %s, "
                 "fixed-clock manifests %s",
                 tables ? "identical" : "DIFFER", parts ? "identical" : "DIFFER",
                 trans ? "identical" : "DIFFER", manifests ? "identical" : "DIFFER");
    return tables && parts && trans && manifests;
}

// ---------------------------------------------------------------------------
// 11. Cost ledger: integer-exact accounting.

bool check_ledger(std::string& detail) {
    // (a) Worked example: 1000 prompt + 500 completion tokens at $0.03/$0.06
    //     per 1k over 10 items.
    CostLedger a({0.03, 0.06});
    a.add({1000, 500});
    CostReport ra = a.report(10);
    bool worked = a.cost_nanos() == 60000000 && ra.per_item_nanos == 6000000 &&
                  ra.per_item == 0.006 && ra.cost == 0.06;

    // (b) Sub-nanodollar rounding is half-up, per item rounding too.
    CostLedger b({0.0000001, 0.0});  // 100 nanodollars per 1k tokens
    b.add({5, 0});                   // 0.5 nanodollars -> rounds up to 1
    bool half_up = b.cost_nanos() == 1;
    CostLedger b2({0.0000001, 0.0});
    b2.add({1, 0});  // 0.1 nanodollars -> rounds down to 0
    bool round_down = b2.cost_nanos() == 0;
    CostReport rb = b.report(2);  // 1 nanodollar over 2 items -> 1 each (half-up)
    bool per_item = rb.per_item_nanos == 1;

    // (c) A full simulated run adds up from its own transcripts.
    SimRun r;
    r.crit = default_sweep_criterion();
    r.ds = synth_dataset(30, r.crit, 5);
    PromptTemplate tmpl = select_template("", Procedure::two_stage, r.ds.flavor, r.crit, r.ds.name);
    RunConfig cfg;
    cfg.rounds = 3;
    cfg.batch_size = 10;
    cfg.seed = 5;
    SimJudge judge(r.ds.human_scores(r.crit.name), r.crit, cfg.procedure, 5, {});
    judge.ledger().set_prices({0.0015, 0.002});
    RunResult res = run_batcheval(r.ds.samples, r.crit, tmpl, cfg, judge);
    long long pt = 0, ct = 0;
    for (const auto& tr : res.transcripts) {
        pt += tr.usage.prompt_tokens;
        ct += tr.usage.completion_tokens;
    }
    long long expect = (pt * 1500000 + ct * 2000000 + 500) / 1000;
    bool integrated = res.ledger.prompt_tokens == pt && res.ledger.completion_tokens == ct &&
                      res.ledger.cost_nanos == expect && res.ledger.items == 30 &&
                      res.ledger.per_item_nanos == (expect + 15) / 30;
    detail = fmt("worked example $%.6f/item, half-up %s/%s, run recomputation %s", ra.per_item,
                 half_up ? "ok" : "BAD", round_down ? "ok" : "BAD",
                 integrated ? "matches" : "DIFFERS");
    return worked && half_up && round_down && per_item && integrated;
}

}  // namespace

int main() {
    struct Check {
        const char* title;
        std::function<bool(std::string&)> fn;
    };
    const std::vector<Check> checks = {
        {"error decomposition identity", check_decomposition},
        {"partition laws (all strategies)", check_partition_laws},
        {"interleaved split worked example", check_spread_worked_example},
        {"strategy bias/agreement ordering", check_strategy_ordering},
        {"averaging gain and score diversity", check_averaging_and_diversity},
        {"decimal vs integer score entropy", check_format_entropy},
        {"rank stability bound (Monte Carlo)", check_rank_stability_bound},
        {"score-list parsing and failure taxonomy", check_parsing},
        {"attention normalization vs brute force", check_attention},
        {"byte-identical determinism", check_determinism},
        {"cost ledger exactness", check_ledger},
    };
    for (std::size_t i = 0; i < checks.size(); ++i) {
        std::string detail;
        bool pass = false;
        try {
            pass = checks[i].fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        report(static_cast<int>(i) + 1, checks[i].title, pass, detail);
    }
    if (g_failures) std::printf("%d of %zu checks failed\n", g_failures, checks.size());
    return g_failures == 0 ? 0 : 1;
}
