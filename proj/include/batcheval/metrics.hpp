#pragma once

// Statistical metrics: correlation with significance, error/variance
// decomposition of multi-round scores, batch bias, score-distribution
// entropy, the rank-correlation perturbation bound, and attention-matrix
// normalization for visualization.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "batcheval/errors.hpp"

namespace batcheval {

struct CorrValue {
    double r = std::numeric_limits<double>::quiet_NaN();
    double p = std::numeric_limits<double>::quiet_NaN();
    bool degenerate = false;  // a side had zero variance; r/p are NaN
};

struct CorrelationReport {
    CorrValue pearson;
    CorrValue spearman;
    int n = 0;
};

namespace detail {

inline void check_pair_sizes(std::size_t nx, std::size_t ny) {
    if (nx != ny)
        throw MetricError(MetricError::Kind::length_mismatch,
                          "paired vectors differ in length (" + std::to_string(nx) + " vs " +
                              std::to_string(ny) + ")");
    if (nx < 2)
        throw MetricError(MetricError::Kind::empty_input,
                          "need at least 2 paired observations, got " + std::to_string(nx));
}

// Two-sided p-value from the t statistic of a sample correlation r at n-2
// degrees of freedom.
inline double corr_p_value(double r, std::size_t n) {
    if (n < 3) return std::numeric_limits<double>::quiet_NaN();
    double df = static_cast<double>(n) - 2.0;
    double denom = 1.0 - r * r;
    if (denom <= 0.0) return 0.0;
    double t = r * std::sqrt(df / denom);
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

}  // namespace detail

inline CorrValue pearson(const std::vector<double>& x, const std::vector<double>& y) {
    detail::check_pair_sizes(x.size(), y.size());
    std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return {std::numeric_limits<double>::quiet_NaN(),
                                          std::numeric_limits<double>::quiet_NaN(), true};
    double r = sxy / std::sqrt(sxx * syy);
    r = std::clamp(r, -1.0, 1.0);
    return {r, detail::corr_p_value(r, n), false};
}

// Average (midrank) ranks, 1-based: ties share the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& x) {
    std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline CorrValue spearman(const std::vector<double>& x, const std::vector<double>& y) {
    detail::check_pair_sizes(x.size(), y.size());
    return pearson(average_ranks(x), average_ranks(y));
}

inline CorrelationReport correlation_report(const std::vector<double>& x, const std::vector<double>& y) {
    CorrelationReport rep;
    rep.pearson = pearson(x, y);
    rep.spearman = spearman(x, y);
    rep.n = static_cast<int>(x.size());
    return rep;
}

// Mean signed bias of one batch's scores against the reference scores for
// the same ids: |sum(batch) - sum(reference)| / |batch|.
inline double batch_bias(const std::map<std::string, double>& batch_scores,
                         const std::map<std::string, double>& reference_scores) {
    if (batch_scores.empty())
        throw MetricError(MetricError::Kind::empty_input, "batch_bias: empty batch");
    double diff = 0.0;
    for (const auto& [id, s] : batch_scores) {
        auto it = reference_scores.find(id);
        if (it == reference_scores.end())
            throw MetricError(MetricError::Kind::key_mismatch, "batch_bias: no reference score for id '" + id + "'");
        diff += s - it->second;
    }
    return std::fabs(diff) / static_cast<double>(batch_scores.size());
}

struct Decomposition {
    double err_ensemble = 0;  // squared error of the mean score
    double err_mean = 0;      // mean squared error of the individual scores
    double variance = 0;      // population variance of the individual scores
};

// For repeated scores S of one sample with gold y:
//   err_ensemble = (mean(S) - y)^2
//   err_mean     = mean((S_i - y)^2)
//   variance     = mean((S_i - mean(S))^2)
// and err_ensemble == err_mean - variance identically.
inline Decomposition decompose(const std::vector<double>& scores, double y) {
    if (scores.empty())
        throw MetricError(MetricError::Kind::empty_input, "decompose: no scores");
    double n = static_cast<double>(scores.size());
    double mean = 0;
    for (double s : scores) mean += s;
    mean /= n;
    Decomposition d;
    d.err_ensemble = (mean - y) * (mean - y);
    for (double s : scores) {
        d.err_mean += (s - y) * (s - y);
        d.variance += (s - mean) * (s - mean);
    }
    d.err_mean /= n;
    d.variance /= n;
    return d;
}

// Shannon entropy (bits) of the score histogram with uniform bins of
// bin_width covering [lo, hi]; values are floor-binned and hi falls in the
// last bin.
inline double score_entropy(const std::vector<double>& scores, double bin_width, double lo, double hi) {
    if (scores.empty())
        throw MetricError(MetricError::Kind::empty_input, "score_entropy: no scores");
    if (!(bin_width > 0.0) || !(hi > lo))
        throw MetricError(MetricError::Kind::invalid_bin_width, "score_entropy: invalid bins");
    int nbins = static_cast<int>(std::ceil((hi - lo) / bin_width - 1e-9));
    if (nbins < 1) nbins = 1;
    std::vector<std::size_t> counts(static_cast<std::size_t>(nbins), 0);
    for (double s : scores) {
        int b = static_cast<int>(std::floor((s - lo) / bin_width + 1e-9));
        b = std::clamp(b, 0, nbins - 1);
        counts[static_cast<std::size_t>(b)]++;
    }
    double n = static_cast<double>(scores.size());
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

// Upper bound on the expected Spearman correlation between a ranking of n
// items and the ranking after each item is shifted by a perturbation with
// expected magnitude lambda: 1 - 6*lambda^2 / (n^2 - 1).
inline double spearman_noise_bound(double lambda, int n) {
    if (n < 2) throw MetricError(MetricError::Kind::invalid_n, "spearman_noise_bound: n must be >= 2");
    double nn = static_cast<double>(n);
    return 1.0 - 6.0 * lambda * lambda / (nn * nn - 1.0);
}

// A half-open token interval [begin, end) labelled for display.
struct Span {
    std::string label;
    int begin = 0;
    int end = 0;
};

// Normalize a causal attention matrix for span-level display. Raw attention
// Att(x, y) of token x over token y has expected value 1/x under uniform
// attention (1-based x), so each entry is scaled by its 1-based row index
// before averaging over span pairs. Only causal pairs (y <= x) enter the
// average; a span pair with no causal pairs yields NaN.
inline std::vector<std::vector<double>> normalize_attention(
    const std::vector<std::vector<double>>& att, const std::vector<Span>& spans) {
    std::size_t n = att.size();
    if (n == 0) throw MetricError(MetricError::Kind::empty_input, "normalize_attention: empty matrix");
    for (std::size_t x = 0; x < n; ++x) {
        if (att[x].size() != n)
            throw MetricError(MetricError::Kind::length_mismatch, "normalize_attention: matrix not square");
        double row = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
            if (y > x && std::fabs(att[x][y]) > 1e-12)
                throw MetricError(MetricError::Kind::non_causal_matrix,
                                  "normalize_attention: nonzero attention above the diagonal");
            row += att[x][y];
        }
        if (std::fabs(row - 1.0) > 1e-6)
            throw MetricError(MetricError::Kind::non_causal_matrix,
                              "normalize_attention: row " + std::to_string(x) + " does not sum to 1");
    }
    for (const auto& s : spans) {
        if (s.begin < 0 || s.end > static_cast<int>(n) || s.begin >= s.end)
            throw MetricError(MetricError::Kind::span_out_of_range,
                              "normalize_attention: span '" + s.label + "' out of range");
    }
    std::size_t m = spans.size();
    std::vector<std::vector<double>> out(m, std::vector<double>(m, std::numeric_limits<double>::quiet_NaN()));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double sum = 0.0;
            std::size_t cnt = 0;
            for (int x = spans[i].begin; x < spans[i].end; ++x) {
                for (int y = spans[j].begin; y < spans[j].end; ++y) {
                    if (y > x) continue;  // non-causal pair
                    sum += static_cast<double>(x + 1) * att[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
                    ++cnt;
                }
            }
            if (cnt > 0) out[i][j] = sum / static_cast<double>(cnt);
        }
    }
    return out;
}

}  // namespace batcheval
