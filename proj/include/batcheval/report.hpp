#pragma once

// Diagnostics over a completed run: agreement with human scores, per-round
// batch bias against the final ensemble, the error/variance decomposition
// of cumulative rounds, and score-distribution entropy -- plus TSV/JSON
// writers and small self-contained SVG charts.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "batcheval/artifacts.hpp"
#include "batcheval/engine.hpp"
#include "batcheval/metrics.hpp"

namespace batcheval {

struct DiagReport {
    CorrelationReport agreement;       // ensemble vs human, ids with both
    int agreement_n = 0;
    double mean_batch_bias = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> bias_by_round;               // mean over a round's batches
    std::vector<Decomposition> decomposition_by_round;  // cumulative through round r
    double entropy_pooled = std::numeric_limits<double>::quiet_NaN();    // all per-round scores
    double entropy_ensemble = std::numeric_limits<double>::quiet_NaN();  // ensemble scores
    double bin_width = 0.1;
    std::vector<std::pair<double, long long>> histogram;  // bin lower edge -> count (pooled)
};

// bin_width <= 0 picks the format default: 0.1 for decimal scales, 1.0 for
// integer scales.
inline DiagReport compute_diagnostics(const ScoreTable& table,
                                      const std::map<std::string, double>& ensemble,
                                      const std::vector<Partition>& partitions,
                                      const std::map<std::string, double>& human,
                                      const Criterion& crit, double bin_width = 0.0) {
    DiagReport rep;
    rep.bin_width = bin_width > 0 ? bin_width : (crit.format == ScoreFormat::integer ? 1.0 : 0.1);

    std::vector<double> ens_v, hum_v;
    for (const auto& [id, h] : human) {
        auto it = ensemble.find(id);
        if (it == ensemble.end()) continue;
        ens_v.push_back(it->second);
        hum_v.push_back(h);
    }
    rep.agreement_n = static_cast<int>(ens_v.size());
    if (ens_v.size() >= 2) rep.agreement = correlation_report(ens_v, hum_v);

    // Bias of each round's batches against the final ensemble.
    double bias_sum = 0;
    long long bias_cnt = 0;
    for (const auto& part : partitions) {
        double round_sum = 0;
        long long round_cnt = 0;
        for (const auto& batch : part.batches) {
            std::map<std::string, double> batch_scores, reference;
            for (const auto& id : batch) {
                auto slot = table.entries.find(id);
                auto ref = ensemble.find(id);
                if (slot == table.entries.end() || ref == ensemble.end()) continue;
                const auto& v = slot->second;
                std::size_t r = static_cast<std::size_t>(part.round - 1);
                if (r >= v.size() || !v[r]) continue;
                batch_scores[id] = *v[r];
                reference[id] = ref->second;
            }
            if (batch_scores.empty()) continue;
            double b = batch_bias(batch_scores, reference);
            round_sum += b;
            bias_sum += b;
            ++round_cnt;
            ++bias_cnt;
        }
        rep.bias_by_round.push_back(round_cnt ? round_sum / static_cast<double>(round_cnt)
                                              : std::numeric_limits<double>::quiet_NaN());
    }
    if (bias_cnt) rep.mean_batch_bias = bias_sum / static_cast<double>(bias_cnt);

    // Cumulative decomposition: through round r, average the per-sample
    // decomposition of its scores so far against the human score.
    for (int r = 1; r <= table.rounds; ++r) {
        Decomposition acc;
        long long n = 0;
        for (const auto& [id, h] : human) {
            auto it = table.entries.find(id);
            if (it == table.entries.end()) continue;
            std::vector<double> upto;
            for (int k = 0; k < r && k < static_cast<int>(it->second.size()); ++k)
                if (it->second[static_cast<std::size_t>(k)]) upto.push_back(*it->second[static_cast<std::size_t>(k)]);
            if (upto.empty()) continue;
            Decomposition d = decompose(upto, h);
            acc.err_ensemble += d.err_ensemble;
            acc.err_mean += d.err_mean;
            acc.variance += d.variance;
            ++n;
        }
        if (n) {
            acc.err_ensemble /= static_cast<double>(n);
            acc.err_mean /= static_cast<double>(n);
            acc.variance /= static_cast<double>(n);
        }
        rep.decomposition_by_round.push_back(acc);
    }

    // Entropy over pooled per-round scores and over the ensemble.
    std::vector<double> pooled;
    for (const auto& [id, slots] : table.entries)
        for (const auto& v : slots)
            if (v) pooled.push_back(*v);
    if (!pooled.empty())
        rep.entropy_pooled = score_entropy(pooled, rep.bin_width, crit.score_min, crit.score_max);
    if (!ens_v.empty()) {
        std::vector<double> all_ens;
        for (const auto& [id, v] : ensemble) all_ens.push_back(v);
        rep.entropy_ensemble = score_entropy(all_ens, rep.bin_width, crit.score_min, crit.score_max);
    }

    // Pooled histogram for plotting.
    if (!pooled.empty()) {
        int nbins = static_cast<int>(std::ceil((crit.score_max - crit.score_min) / rep.bin_width - 1e-9));
        if (nbins < 1) nbins = 1;
        std::vector<long long> counts(static_cast<std::size_t>(nbins), 0);
        for (double s : pooled) {
            int b = static_cast<int>(std::floor((s - crit.score_min) / rep.bin_width + 1e-9));
            b = std::clamp(b, 0, nbins - 1);
            counts[static_cast<std::size_t>(b)]++;
        }
        for (int b = 0; b < nbins; ++b)
            rep.histogram.emplace_back(crit.score_min + b * rep.bin_width, counts[static_cast<std::size_t>(b)]);
    }
    return rep;
}

inline std::string diag_report_json(const DiagReport& rep) {
    nlohmann::ordered_json j;
    auto corr = [](const CorrValue& c) {
        nlohmann::ordered_json o;
        if (c.degenerate || std::isnan(c.r)) {
            o["r"] = nullptr;
            o["p"] = nullptr;
            o["degenerate"] = true;
        } else {
            o["r"] = c.r;
            o["p"] = c.p;
            o["degenerate"] = false;
        }
        return o;
    };
    j["agreement"] = {{"n", rep.agreement_n},
                      {"pearson", corr(rep.agreement.pearson)},
                      {"spearman", corr(rep.agreement.spearman)}};
    j["mean_batch_bias"] = rep.mean_batch_bias;
    j["bias_by_round"] = rep.bias_by_round;
    j["decomposition_by_round"] = nlohmann::ordered_json::array();
    for (const auto& d : rep.decomposition_by_round)
        j["decomposition_by_round"].push_back({{"err_ensemble", d.err_ensemble},
                                               {"err_mean", d.err_mean},
                                               {"variance", d.variance}});
    j["entropy"] = {{"pooled", rep.entropy_pooled},
                    {"ensemble", rep.entropy_ensemble},
                    {"bin_width", rep.bin_width}};
    return j.dump(2) + "\n";
}

inline std::string decomposition_tsv(const DiagReport& rep) {
    std::ostringstream out;
    out << "round\terr_ensemble\terr_mean\tvariance\n";
    for (std::size_t r = 0; r < rep.decomposition_by_round.size(); ++r) {
        const auto& d = rep.decomposition_by_round[r];
        out << (r + 1) << '\t' << d.err_ensemble << '\t' << d.err_mean << '\t' << d.variance << '\n';
    }
    return out.str();
}

inline std::string bias_tsv(const DiagReport& rep) {
    std::ostringstream out;
    out << "round\tmean_batch_bias\n";
    for (std::size_t r = 0; r < rep.bias_by_round.size(); ++r)
        out << (r + 1) << '\t' << rep.bias_by_round[r] << '\n';
    return out.str();
}

inline std::string histogram_tsv(const DiagReport& rep) {
    std::ostringstream out;
    out << "bin_lo\tcount\n";
    for (const auto& [lo, cnt] : rep.histogram) out << lo << '\t' << cnt << '\n';
    return out.str();
}

inline void write_diag(const std::filesystem::path& dir, const DiagReport& rep) {
    std::filesystem::create_directories(dir);
    detail::write_file(dir / "report.json", diag_report_json(rep));
    detail::write_file(dir / "decomposition.tsv", decomposition_tsv(rep));
    detail::write_file(dir / "bias.tsv", bias_tsv(rep));
    detail::write_file(dir / "histogram.tsv", histogram_tsv(rep));
}

// ---------------------------------------------------------------------------
// Minimal SVG charts (no external tooling required to view them).

namespace detail {

struct SvgFrame {
    double width = 640, height = 400;
    double left = 60, right = 20, top = 30, bottom = 45;
    double plot_w() const { return width - left - right; }
    double plot_h() const { return height - top - bottom; }
};

inline std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

inline std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace detail

// Line chart of one or more named series over a shared x axis.
inline std::string svg_line_chart(const std::string& title, const std::string& x_label,
                                  const std::vector<double>& xs,
                                  const std::vector<std::pair<std::string, std::vector<double>>>& series) {
    detail::SvgFrame f;
    double xmin = xs.empty() ? 0 : *std::min_element(xs.begin(), xs.end());
    double xmax = xs.empty() ? 1 : *std::max_element(xs.begin(), xs.end());
    double ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& [name, ys] : series)
        for (double y : ys) {
            if (std::isnan(y)) continue;
            if (first) {
                ymin = ymax = y;
                first = false;
            } else {
                ymin = std::min(ymin, y);
                ymax = std::max(ymax, y);
            }
        }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    double ypad = 0.08 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;
    auto px = [&](double x) { return f.left + (x - xmin) / (xmax - xmin) * f.plot_w(); };
    auto py = [&](double y) { return f.top + (ymax - y) / (ymax - ymin) * f.plot_h(); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\""
        << f.height << "\" viewBox=\"0 0 " << f.width << " " << f.height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << f.width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\" "
        << "font-family=\"sans-serif\">" << detail::svg_escape(title) << "</text>\n";
    // axes
    svg << "<line x1=\"" << f.left << "\" y1=\"" << f.top + f.plot_h() << "\" x2=\""
        << f.left + f.plot_w() << "\" y2=\"" << f.top + f.plot_h() << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << f.left << "\" y1=\"" << f.top << "\" x2=\"" << f.left << "\" y2=\""
        << f.top + f.plot_h() << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        double y = ymin + (ymax - ymin) * t / 4.0;
        svg << "<text x=\"" << f.left - 6 << "\" y=\"" << py(y) + 4
            << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">"
            << detail::fmt_num(y) << "</text>\n";
    }
    for (std::size_t i = 0; i < xs.size(); ++i)
        svg << "<text x=\"" << px(xs[i]) << "\" y=\"" << f.top + f.plot_h() + 16
            << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">"
            << detail::fmt_num(xs[i]) << "</text>\n";
    svg << "<text x=\"" << f.left + f.plot_w() / 2 << "\" y=\"" << f.height - 8
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
        << detail::svg_escape(x_label) << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& [name, ys] = series[s];
        const char* color = colors[s % 5];
        std::ostringstream pts;
        for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
            if (std::isnan(ys[i])) continue;
            pts << px(xs[i]) << "," << py(ys[i]) << " ";
        }
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
            << pts.str() << "\"/>\n";
        for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
            if (std::isnan(ys[i])) continue;
            svg << "<circle cx=\"" << px(xs[i]) << "\" cy=\"" << py(ys[i])
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        svg << "<rect x=\"" << f.left + 10 << "\" y=\"" << f.top + 8 + 16 * static_cast<double>(s)
            << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n"
            << "<text x=\"" << f.left + 24 << "\" y=\"" << f.top + 17 + 16 * static_cast<double>(s)
            << "\" font-size=\"11\" font-family=\"sans-serif\">" << detail::svg_escape(name)
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

inline std::string svg_histogram(const std::string& title,
                                 const std::vector<std::pair<double, long long>>& bins,
                                 double bin_width) {
    detail::SvgFrame f;
    long long maxc = 1;
    for (const auto& [lo, c] : bins) maxc = std::max(maxc, c);
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\""
        << f.height << "\" viewBox=\"0 0 " << f.width << " " << f.height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << f.width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\" "
        << "font-family=\"sans-serif\">" << detail::svg_escape(title) << "</text>\n"
        << "<line x1=\"" << f.left << "\" y1=\"" << f.top + f.plot_h() << "\" x2=\""
        << f.left + f.plot_w() << "\" y2=\"" << f.top + f.plot_h() << "\" stroke=\"black\"/>\n";
    if (!bins.empty()) {
        double w = f.plot_w() / static_cast<double>(bins.size());
        for (std::size_t i = 0; i < bins.size(); ++i) {
            double h = f.plot_h() * static_cast<double>(bins[i].second) / static_cast<double>(maxc);
            svg << "<rect x=\"" << f.left + w * static_cast<double>(i) + 1 << "\" y=\""
                << f.top + f.plot_h() - h << "\" width=\"" << w - 2 << "\" height=\"" << h
                << "\" fill=\"#1f77b4\"/>\n";
            if (bins.size() <= 25 || i % 5 == 0)
                svg << "<text x=\"" << f.left + w * (static_cast<double>(i) + 0.5) << "\" y=\""
                    << f.top + f.plot_h() + 14
                    << "\" text-anchor=\"middle\" font-size=\"9\" font-family=\"sans-serif\">"
                    << detail::fmt_num(bins[i].first) << "</text>\n";
        }
        svg << "<text x=\"" << f.left - 6 << "\" y=\"" << f.top + 4
            << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" << maxc
            << "</text>\n";
    }
    svg << "<text x=\"" << f.left + f.plot_w() / 2 << "\" y=\"" << f.height - 8
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">score (bin width "
        << detail::fmt_num(bin_width) << ")</text>\n</svg>\n";
    return svg.str();
}

inline void write_plots(const std::filesystem::path& dir, const DiagReport& rep) {
    std::filesystem::create_directories(dir);
    std::vector<double> rounds;
    std::vector<double> err_e, err_m, var, bias;
    for (std::size_t r = 0; r < rep.decomposition_by_round.size(); ++r) {
        rounds.push_back(static_cast<double>(r + 1));
        err_e.push_back(rep.decomposition_by_round[r].err_ensemble);
        err_m.push_back(rep.decomposition_by_round[r].err_mean);
        var.push_back(rep.decomposition_by_round[r].variance);
    }
    detail::write_file(dir / "decomposition.svg",
                       svg_line_chart("Error decomposition by cumulative rounds", "rounds", rounds,
                                      {{"err(ensemble)", err_e}, {"mean err(scores)", err_m},
                                       {"variance", var}}));
    std::vector<double> bias_rounds;
    for (std::size_t r = 0; r < rep.bias_by_round.size(); ++r) {
        bias_rounds.push_back(static_cast<double>(r + 1));
        bias.push_back(rep.bias_by_round[r]);
    }
    detail::write_file(dir / "bias.svg",
                       svg_line_chart("Mean batch bias by round", "round", bias_rounds,
                                      {{"mean batch bias", bias}}));
    detail::write_file(dir / "histogram.svg",
                       svg_histogram("Pooled score distribution", rep.histogram, rep.bin_width));
}

}  // namespace batcheval
