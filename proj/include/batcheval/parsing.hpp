#pragma once

// Extraction of per-sample scores from judge transcripts, plus the
// canonical inverse (formatting a score list the way the prompt templates
// ask for it). Parsing is tolerant of prose around the markers and of
// whitespace inside them, and strict about indices and scale bounds.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "batcheval/errors.hpp"
#include "batcheval/types.hpp"

namespace batcheval {

// Scores that land within this distance beyond a scale bound are clamped to
// the bound and flagged; anything further out is an error.
constexpr double kClampTolerance = 0.05;

struct ParsedScores {
    std::map<int, double> scores;  // 1-based sample index -> score
    std::set<int> clamped;         // indices whose values were pulled back to a bound
    std::size_t span_begin = 0;    // byte range of the matched score region
    std::size_t span_end = 0;

    std::vector<double> ordered() const {
        std::vector<double> v;
        v.reserve(scores.size());
        for (const auto& [k, s] : scores) v.push_back(s);
        return v;
    }
};

namespace detail {

inline void skip_ws(const std::string& s, std::size_t& i) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
}

inline bool match_word_ci(const std::string& s, std::size_t& i, const char* word) {
    std::size_t j = i;
    for (const char* w = word; *w; ++w, ++j) {
        if (j >= s.size()) return false;
        if (std::tolower(static_cast<unsigned char>(s[j])) != std::tolower(static_cast<unsigned char>(*w)))
            return false;
    }
    i = j;
    return true;
}

inline bool parse_uint(const std::string& s, std::size_t& i, long& out) {
    std::size_t j = i;
    long v = 0;
    bool any = false;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
        v = v * 10 + (s[j] - '0');
        if (v > 1000000) return false;
        ++j;
        any = true;
    }
    if (!any) return false;
    i = j;
    out = v;
    return true;
}

inline bool parse_number(const std::string& s, std::size_t& i, double& out) {
    const char* begin = s.c_str() + i;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) return false;
    i += static_cast<std::size_t>(end - begin);
    out = v;
    return true;
}

// Validate one parsed (index, value) against scale bounds and format, then
// store it. Throws on duplicate index, out-of-range value, or a fractional
// value under the integer format.
inline void accept_score(ParsedScores& acc, int k, double v, const Criterion& crit) {
    if (acc.scores.count(k)) {
        ParseError e(ParseError::Kind::duplicate_index,
                     "sample index " + std::to_string(k) + " scored more than once");
        e.index = k;
        throw e;
    }
    if (!std::isfinite(v)) {
        ParseError e(ParseError::Kind::out_of_range,
                     "sample " + std::to_string(k) + ": non-finite score");
        e.index = k;
        e.value = v;
        throw e;
    }
    if (crit.format == ScoreFormat::integer && std::fabs(v - std::round(v)) > 1e-9) {
        ParseError e(ParseError::Kind::non_integer_score,
                     "sample " + std::to_string(k) + ": expected an integer score, got " + std::to_string(v));
        e.index = k;
        e.value = v;
        throw e;
    }
    if (v < crit.score_min - kClampTolerance || v > crit.score_max + kClampTolerance) {
        ParseError e(ParseError::Kind::out_of_range,
                     "sample " + std::to_string(k) + ": score " + std::to_string(v) + " outside [" +
                         std::to_string(crit.score_min) + "," + std::to_string(crit.score_max) + "]");
        e.index = k;
        e.value = v;
        throw e;
    }
    if (v < crit.score_min) {
        v = crit.score_min;
        acc.clamped.insert(k);
    } else if (v > crit.score_max) {
        v = crit.score_max;
        acc.clamped.insert(k);
    }
    acc.scores[k] = v;
}

inline void check_complete(const ParsedScores& acc, int n) {
    bool complete = static_cast<int>(acc.scores.size()) == n;
    if (complete)
        for (const auto& [k, v] : acc.scores)
            if (k < 1 || k > n) complete = false;
    if (!complete) {
        ParseError e(ParseError::Kind::count_mismatch,
                     "expected scores for samples 1.." + std::to_string(n) + ", found " +
                         std::to_string(acc.scores.size()) + " usable entries");
        e.expected = n;
        e.found = static_cast<int>(acc.scores.size());
        throw e;
    }
}

// Parse the bracketed list form: [Sample1:2.4, Sample2:2.8, ...] where the
// "Sample" word is optional per entry. i points just past '['. Returns the
// index past the closing bracket. Entries that fail the grammar end the
// scan (the completeness check then reports the shortfall).
inline std::size_t scan_bracket_list(const std::string& s, std::size_t i, ParsedScores& acc,
                                     const Criterion& crit) {
    for (;;) {
        skip_ws(s, i);
        if (i >= s.size()) {
            ParseError e(ParseError::Kind::count_mismatch, "score list is never closed");
            e.found = static_cast<int>(acc.scores.size());
            throw e;
        }
        if (s[i] == ']') return i + 1;
        std::size_t entry = i;
        match_word_ci(s, entry, "sample");
        skip_ws(s, entry);
        long k = 0;
        if (!parse_uint(s, entry, k)) break;
        skip_ws(s, entry);
        if (entry >= s.size() || s[entry] != ':') break;
        ++entry;
        skip_ws(s, entry);
        double v = 0;
        if (!parse_number(s, entry, v)) break;
        accept_score(acc, static_cast<int>(k), v, crit);
        skip_ws(s, entry);
        // Tolerate stray sentence punctuation after the value.
        while (entry < s.size() && (s[entry] == '.' || s[entry] == '!' || s[entry] == ';')) ++entry;
        skip_ws(s, entry);
        if (entry < s.size() && s[entry] == ',') {
            i = entry + 1;
            continue;
        }
        i = entry;
        if (i < s.size() && s[i] == ']') return i + 1;
        break;  // junk between entries
    }
    ParseError e(ParseError::Kind::count_mismatch, "malformed entry inside the score list");
    e.found = static_cast<int>(acc.scores.size());
    throw e;
}

inline bool is_scores_anchor(const std::string& s, std::size_t pos, std::size_t& bracket) {
    // pos points at "Scores:"; the next non-space char must open the list.
    std::size_t i = pos + 7;
    skip_ws(s, i);
    if (i < s.size() && s[i] == '[') {
        bracket = i;
        return true;
    }
    return false;
}

}  // namespace detail

// Parse the response of a batched evaluation into n scores.
//
// For the one-stage procedure the response carries one marker per sample:
//     Score of Sample3:[2.4]
// For two- and three-stage procedures it ends with a single list:
//     Float Scores: [Sample1:2.4,Sample2:2.8,...]
// (the integer template says "Scores:" without "Float"; matching keys on
// the "Scores:" suffix so both spellings work). When the transcript
// restates the template, the last list wins.
inline ParsedScores parse_batch_scores(const std::string& response, int n, const Criterion& crit,
                                       Procedure procedure) {
    if (n < 1) throw MetricError(MetricError::Kind::invalid_n, "parse_batch_scores: n must be >= 1");
    ParsedScores acc;
    if (procedure == Procedure::one_stage) {
        static const std::string marker = "Score of Sample";
        std::size_t pos = 0;
        bool any = false;
        while ((pos = response.find(marker, pos)) != std::string::npos) {
            std::size_t i = pos + marker.size();
            detail::skip_ws(response, i);
            long k = 0;
            if (!detail::parse_uint(response, i, k)) {
                ++pos;
                continue;
            }
            detail::skip_ws(response, i);
            if (i >= response.size() || response[i] != ':') {
                ++pos;
                continue;
            }
            ++i;
            detail::skip_ws(response, i);
            if (i >= response.size() || response[i] != '[') {
                ++pos;
                continue;
            }
            ++i;
            detail::skip_ws(response, i);
            double v = 0;
            if (!detail::parse_number(response, i, v)) {
                ++pos;
                continue;
            }
            detail::skip_ws(response, i);
            if (i >= response.size() || response[i] != ']') {
                ++pos;
                continue;
            }
            if (!any) acc.span_begin = pos;
            any = true;
            acc.span_end = i + 1;
            detail::accept_score(acc, static_cast<int>(k), v, crit);
            pos = i + 1;
        }
        if (!any)
            throw ParseError(ParseError::Kind::marker_not_found,
                             "no 'Score of SampleK:[value]' markers in the response");
        detail::check_complete(acc, n);
        return acc;
    }

    // Two- and three-stage: find the last "Scores:" immediately followed by
    // an opening bracket.
    static const std::string anchor = "Scores:";
    std::size_t best = std::string::npos, bracket = 0;
    for (std::size_t pos = response.find(anchor); pos != std::string::npos;
         pos = response.find(anchor, pos + 1)) {
        std::size_t br = 0;
        if (detail::is_scores_anchor(response, pos, br)) {
            best = pos;
            bracket = br;
        }
    }
    if (best == std::string::npos)
        throw ParseError(ParseError::Kind::marker_not_found, "no 'Scores: [...]' list in the response");
    acc.span_begin = best;
    acc.span_end = detail::scan_bracket_list(response, bracket + 1, acc, crit);
    detail::check_complete(acc, n);
    return acc;
}

// Canonical textual form of a score for the given format: one decimal place
// for decimal scales, plain integer for integer scales.
inline std::string format_score(double v, ScoreFormat fmt) {
    char buf[32];
    if (fmt == ScoreFormat::integer)
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(std::llround(v)));
    else
        std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

// Canonical score list exactly as the templates request it. Parsing this
// string recovers the same values bit-for-bit after quantization.
inline std::string format_batch_scores(const std::vector<double>& scores, ScoreFormat fmt,
                                       Procedure procedure) {
    std::string out;
    if (procedure == Procedure::one_stage) {
        for (std::size_t i = 0; i < scores.size(); ++i) {
            out += "Score of Sample" + std::to_string(i + 1) + ":[" + format_score(scores[i], fmt) + "]";
            if (i + 1 < scores.size()) out += "\n";
        }
        return out;
    }
    out = fmt == ScoreFormat::decimal ? "Float Scores: [" : "Scores: [";
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (i) out += ",";
        out += "Sample" + std::to_string(i + 1) + ":" + format_score(scores[i], fmt);
    }
    out += "]";
    return out;
}

}  // namespace batcheval
