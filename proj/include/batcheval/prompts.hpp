#pragma once

// Prompt templates and rendering. A template is plain text with two
// placeholders: {{number}} (batch size) and {{Data}} (the formatted sample
// block). Built-in templates carry ready-made wording for four benchmarks;
// arbitrary criteria and datasets fall back to a composed template with the
// same skeleton.

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "batcheval/errors.hpp"
#include "batcheval/types.hpp"

namespace batcheval {

// Dataset-specific wording slotted into the template skeleton.
struct PromptFlavor {
    std::string sample_description =
        "Each sample contains a text passage to be judged.";
    std::string task_sentence =
        "Your task is to assign a float score to the sample on one metric.";
    std::string task_sentence_integer =
        "Your task is to rate the samples on one metric.";
    std::string data_header = "Samples to be evaluated:";
};

struct PromptTemplate {
    std::string name;
    Procedure procedure = Procedure::two_stage;
    ScoreFormat format = ScoreFormat::decimal;
    std::string body;  // contains {{number}} and {{Data}}
};

namespace detail {

inline void replace_all(std::string& s, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

inline std::string format_level(double v) {
    char buf[32];
    if (v == static_cast<double>(static_cast<long long>(v)))
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
    else
        std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace detail

// The criterion paragraph: head line plus one anchor paragraph per level.
// head_override substitutes the whole head line for wordings that do not
// follow the regular pattern.
inline std::string criterion_block(const Criterion& crit, const std::string& head_override = "") {
    std::string head = head_override;
    if (head.empty()) {
        if (crit.format == ScoreFormat::decimal)
            head = crit.name + " (floating point numbers within the interval [" +
                   detail::format_level(crit.score_min) + "," + detail::format_level(crit.score_max) +
                   "]): " + crit.definition;
        else
            head = crit.name + " (" + detail::format_level(crit.score_min) + "-" +
                   detail::format_level(crit.score_max) + "): " + crit.definition;
    }
    std::string out = head;
    for (const auto& a : crit.anchors) {
        out += "\n\n";
        if (crit.format == ScoreFormat::decimal)
            out += "- A float score near " + detail::format_level(a.level) + " " + a.text;
        else
            out += "- A score of " + detail::format_level(a.level) + " " + a.text;
    }
    return out;
}

// Assemble a full template from the skeleton. The wording of each slot is
// procedure- and format-dependent.
inline PromptTemplate compose_template(Procedure procedure, const PromptFlavor& flavor,
                                       const Criterion& crit, const std::string& head_override = "",
                                       const std::string& name = "") {
    const bool integer = crit.format == ScoreFormat::integer;
    std::vector<std::string> paras;
    paras.push_back("You will be given a batch of {{number}} samples. " + flavor.sample_description);
    if (procedure == Procedure::three_stage)
        paras.push_back("You will be introduced to a metric to be evaluated.");
    else
        paras.push_back(integer ? flavor.task_sentence_integer : flavor.task_sentence);
    if (integer)
        paras.push_back(
            "You should carefully horizontally compare the given samples in order to assign a score "
            "to each sample.");
    else if (procedure == Procedure::one_stage)
        paras.push_back(
            "You should carefully horizontally compare the given samples in order to assign a "
            "suitable float score to the given samples one by one.");
    else
        paras.push_back(
            "You should carefully horizontally compare the given samples in order to assign a "
            "suitable float score to each sample.");
    paras.push_back(
        "Please make sure you read and understand these instructions carefully. Please keep this "
        "document open while reviewing, and refer to it as needed.");
    paras.push_back(integer ? "Evaluation Crieteria:" : "Evaluation Criteria:");
    paras.push_back(criterion_block(crit, head_override));
    paras.push_back(flavor.data_header);
    paras.push_back("{{Data}}");

    const std::string list_template =
        std::string(integer ? "\"Scores: [" : "\"Float Scores: [") +
        "Sample1:score of Sample1,...,Sample{{number}}:score of Sample{{number}}]\".";
    if (procedure == Procedure::one_stage) {
        if (integer)
            paras.push_back(
                "Evaluation Form (Answer by starting with \"I will do my best to provide individual "
                "analysis and give a suitable score for each sample in order\". When rating for each "
                "sample, please follow the template \"Score of SampleX:[score]\").");
        else
            paras.push_back(
                "Evaluation Form (Answer by starting with \"I will do my best to provide individual "
                "analysis and give a suitable float score for each sample in order\". When rating for "
                "each sample, please follow the template \"Score of SampleX:[float score]\").");
    } else if (procedure == Procedure::two_stage) {
        paras.push_back(
            "Evaluation Form (Answer by starting with \"I will do my best to provide individual "
            "analysis for each sample. Analysis:\" to analyze the given samples regarding the "
            "evaluation criteria as concise as possible (Attention: Don't give your scores during "
            "this step). After analysing all the samples, please give all the " +
            std::string(integer ? "scores" : "float scores") + " in order following the template " +
            list_template);
    } else {
        paras.push_back(
            "Answer by starting with \"I will do my best to provide individual analysis for each "
            "sample. Analysis:\" to analyze the given samples regarding the evaluation criteria as "
            "concise as possible (Attention: Don't give your scores during this step). After "
            "analysing all the samples, please horizontally compare the given samples, rank all the "
            "samples according to the analysis of the response and give the corresponding reasons. "
            "After ranking, according to the analysis and rank, please give all the " +
            std::string(integer ? "scores" : "float scores") + " in order following the template " +
            list_template);
    }
    paras.push_back("- " + crit.name + ":");

    PromptTemplate t;
    t.name = name.empty() ? std::string("composed/") + to_string(procedure) + "/" + to_string(crit.format)
                          : name;
    t.procedure = procedure;
    t.format = crit.format;
    for (std::size_t i = 0; i < paras.size(); ++i) {
        if (i) t.body += "\n\n";
        t.body += paras[i];
    }
    t.body += "\n";
    return t;
}

// ---------------------------------------------------------------------------
// Built-in benchmark wordings.

inline Criterion topical_chat_coherence(ScoreFormat fmt = ScoreFormat::decimal) {
    Criterion c;
    c.name = "Coherence";
    c.definition = "Does the response serve as a valid continuation of the conversation history?";
    c.score_min = 1;
    c.score_max = 3;
    c.format = fmt;
    c.anchors = {
        {1, "(no) means that the response drastically changes topic or ignores the conversation "
            "history."},
        {2, "(somewhat) means the response refers to the conversation history in a limited capacity "
            "(e.g., in a generic way) and shifts the conversation topic."},
        {3, "(yes) means the response is on topic and strongly acknowledges the conversation "
            "history."},
    };
    return c;
}

inline Criterion fed_coherent() {
    Criterion c;
    c.name = "Coherent";
    c.definition =
        "Does System maintain coherence and a good flow of conversation throughout the dialogue?";
    c.score_min = 1;
    c.score_max = 3;
    c.anchors = {
        {1, "(not coherent) means that System's responses are unrelated to the conversation topic "
            "and may disrupt or confuse the flow of the dialogue."},
        {2, "(somewhat coherent) means that System's responses are partially related to the "
            "conversation topic but may not be clear or direct."},
        {3, "(very coherent) means that System's responses are closely related to the conversation "
            "topic and contribute to maintaining a smooth dialogue."},
    };
    return c;
}

inline Criterion hanna_coherence() {
    Criterion c;
    c.name = "Coherence";
    c.definition = "Measures whether the story makes sense?";
    c.score_min = 1;
    c.score_max = 5;
    c.anchors = {
        {1, "means the story does not make sense at all. For instance, the setting and/or characters "
            "keep changing, and/or there is no understandable plot."},
        {2, "means most of the story does not make sense."},
        {3, "means the story mostly makes sense but has some incoherences."},
        {4, "means the story almost makes sense overall, except for one or two small incoherences."},
        {5, "means the story makes sense from beginning to end."},
    };
    return c;
}

inline Criterion qags_consistency() {
    Criterion c;
    c.name = "Consistency";
    c.definition = "Is the sentence supported by the article? (consistent with the article)";
    c.score_min = 1;
    c.score_max = 3;
    c.anchors = {
        {1, "(not) means that the sentence is totally not supported by the article."},
        {2, "(somewhat) means that the sentence is partially supported by the article."},
        {3, "(very) means that the sentence is completely supported by the article."},
    };
    return c;
}

inline PromptFlavor topical_chat_flavor() {
    return {"Each sample contains a conversation between Speaker A and Speaker B and one potential "
            "response for the next turn.",
            "Your task is to assign a float score to the response on one metric.",
            "Your task is to rate the responses on one metric.",
            "Conversations and corresponding potential response to be evaluated:"};
}
inline PromptFlavor fed_flavor() {
    return {"Each sample contains a conversation between User and a dialogue System.",
            "Your task is to assign a float score to the sample on one metric.",
            "Your task is to rate the samples on one metric.",
            "Conversations to be evaluated:"};
}
inline PromptFlavor hanna_flavor() {
    return {"Each sample contains a prompt and a story generated following the prompt.",
            "Your task is to assign a float score to the story according to the prompt on one metric.",
            "Your task is to rate the stories on one metric.",
            "Prompts and corresponding stories to be evaluated:"};
}
inline PromptFlavor qags_flavor() {
    return {"Each sample contains an article and a sentence.",
            "Your task is to determine if the sentence is factually correct given the contents of "
            "the article.",
            "Your task is to determine if the sentence is factually correct given the contents of "
            "the article.",
            "Articles and corresponding sentences to be evaluated:"};
}

struct BuiltinPrompt {
    std::string name;       // e.g. "topical_chat/two_stage/decimal"
    std::string benchmark;  // e.g. "topical_chat"
    Procedure procedure;
    ScoreFormat format;
    PromptFlavor flavor;
    Criterion criterion;
    std::string criterion_head;  // non-empty when the head line is irregular
};

inline const std::vector<BuiltinPrompt>& builtin_prompts() {
    static const std::vector<BuiltinPrompt> all = [] {
        std::vector<BuiltinPrompt> v;
        v.push_back({"topical_chat/two_stage/decimal", "topical_chat", Procedure::two_stage,
                     ScoreFormat::decimal, topical_chat_flavor(), topical_chat_coherence(), ""});
        v.push_back({"topical_chat/one_stage/decimal", "topical_chat", Procedure::one_stage,
                     ScoreFormat::decimal, topical_chat_flavor(), topical_chat_coherence(), ""});
        v.push_back({"topical_chat/three_stage/decimal", "topical_chat", Procedure::three_stage,
                     ScoreFormat::decimal, topical_chat_flavor(), topical_chat_coherence(), ""});
        v.push_back({"topical_chat/two_stage/integer", "topical_chat", Procedure::two_stage,
                     ScoreFormat::integer, topical_chat_flavor(),
                     topical_chat_coherence(ScoreFormat::integer), ""});
        v.push_back({"fed/two_stage/decimal", "fed", Procedure::two_stage, ScoreFormat::decimal,
                     fed_flavor(), fed_coherent(), ""});
        v.push_back({"hanna/two_stage/decimal", "hanna", Procedure::two_stage, ScoreFormat::decimal,
                     hanna_flavor(), hanna_coherence(),
                     "Coherence (floating point numbers within the interval [1,5]) Measures whether "
                     "the story makes sense?"});
        v.push_back({"qags/two_stage/decimal", "qags", Procedure::two_stage, ScoreFormat::decimal,
                     qags_flavor(), qags_consistency(),
                     "Consistency ([1,3]) - Is the sentence supported by the article? (consistent "
                     "with the article)"});
        return v;
    }();
    return all;
}

inline PromptTemplate builtin_template(const std::string& name) {
    for (const auto& b : builtin_prompts())
        if (b.name == name)
            return compose_template(b.procedure, b.flavor, b.criterion, b.criterion_head, b.name);
    throw ConfigError("unknown built-in template '" + name + "'");
}

// ---------------------------------------------------------------------------
// Rendering.

// Sample block: "Sample k:" then each field as "Name:\nvalue", all
// paragraph-separated, samples in batch order.
inline std::string render_data_block(const std::vector<Sample>& samples) {
    std::string out;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (k) out += "\n\n";
        out += "Sample " + std::to_string(k + 1) + ":";
        for (const auto& [fname, fval] : samples[k].fields) out += "\n\n" + fname + ":\n" + fval;
    }
    return out;
}

inline std::string render_prompt(const PromptTemplate& tmpl, const std::vector<Sample>& samples) {
    if (samples.empty()) throw MetricError(MetricError::Kind::empty_input, "render_prompt: empty batch");
    std::string out = tmpl.body;
    detail::replace_all(out, "{{number}}", std::to_string(samples.size()));
    detail::replace_all(out, "{{Data}}", render_data_block(samples));
    return out;
}

// Recover the declared batch size from a rendered prompt; -1 when absent.
inline int parse_sample_count(const std::string& prompt) {
    static const std::string marker = "a batch of ";
    std::size_t pos = prompt.find(marker);
    if (pos == std::string::npos) return -1;
    std::size_t i = pos + marker.size();
    long v = 0;
    bool any = false;
    while (i < prompt.size() && std::isdigit(static_cast<unsigned char>(prompt[i]))) {
        v = v * 10 + (prompt[i] - '0');
        ++i;
        any = true;
    }
    return any ? static_cast<int>(v) : -1;
}

// Load a user template from disk. The file must contain a {{Data}}
// placeholder; {{number}} is recommended but optional.
inline PromptTemplate load_template_file(const std::string& path, Procedure procedure,
                                         ScoreFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open template file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    PromptTemplate t;
    t.name = "file:" + path;
    t.procedure = procedure;
    t.format = format;
    t.body = ss.str();
    if (t.body.find("{{Data}}") == std::string::npos)
        throw ConfigError("template file '" + path + "' is missing the {{Data}} placeholder");
    return t;
}

// Pick the template for a run: an on-disk override when template_dir holds
// <procedure>_<format>.txt, else the built-in benchmark wording when the
// dataset and criterion match one, else a composed template.
inline PromptTemplate select_template(const std::string& template_dir, Procedure procedure,
                                      const PromptFlavor& flavor, const Criterion& crit,
                                      const std::string& dataset_name) {
    if (!template_dir.empty()) {
        std::string path = template_dir + "/" + std::string(to_string(procedure)) + "_" +
                           std::string(to_string(crit.format)) + ".txt";
        if (std::ifstream probe(path); probe.good()) return load_template_file(path, procedure, crit.format);
    }
    std::string lname;
    for (char c : dataset_name) lname += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (const auto& b : builtin_prompts()) {
        if (b.procedure != procedure || b.format != crit.format) continue;
        if (b.criterion.name != crit.name) continue;
        if (lname.find(b.benchmark) == std::string::npos) continue;
        return compose_template(b.procedure, b.flavor, b.criterion, b.criterion_head, b.name);
    }
    return compose_template(procedure, flavor, crit);
}

}  // namespace batcheval
