#include "sleuth/bender/bender.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"
#include "sleuth/common/url.hpp"

namespace sleuth::bender {
namespace {

using Values = std::vector<std::pair<std::string, std::string>>;

std::string squash_key(std::string_view key) {
    std::string out;
    for (char c : key) {
        if (c == '_' || c == '-' || c == ' ') continue;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

/// Scheme-less, `www.`-less normalized form, so "www.x.org/a" matches "https://x.org/a/".
std::string citation_key(std::string_view url) {
    std::string s = trim(url);
    if (s.find("://") == std::string::npos) s = "https://" + s;
    std::string key = normalize_url(s);
    for (std::string_view prefix : {"https://", "http://"}) {
        if (key.starts_with(prefix)) {
            key.erase(0, prefix.size());
            break;
        }
    }
    if (key.starts_with("www.")) key.erase(0, 4);
    return key;
}

bool is_sentence_end(std::string_view text, std::size_t i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') return false;
    return i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]));
}

std::string strip_reply_wrapping(std::string_view raw) {
    std::string text = trim(raw);
    if (text.starts_with("```")) {
        const auto first_newline = text.find('\n');
        const auto closing = text.rfind("```");
        if (first_newline != std::string::npos && closing > first_newline) {
            text = trim(text.substr(first_newline + 1, closing - first_newline - 1));
        }
    }
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') text = trim(text.substr(1, text.size() - 2));
    return text;
}

std::string example_block(const PromptConfig& config) {
    if (!config.one_shot_example || trim(*config.one_shot_example).empty()) return "";
    return "Here is an example of the kind of comment we are looking for (written for a different video):\n"
           "<<<EXAMPLE\n" +
           trim(*config.one_shot_example) + "\nEXAMPLE>>>";
}

std::string report_block(const std::string& report_text) {
    if (trim(report_text).empty()) return "";
    return "Fact-check report for this video:\n<<<REPORT\n" + trim(report_text) + "\nREPORT>>>";
}

std::string corpus_section(const Corpus& corpus, std::size_t budget) {
    const std::string body = corpus_block(corpus, budget);
    if (body.empty()) return "";
    const std::string label = corpus.theme.empty() ? std::string() : " on \"" + corpus.theme + "\"";
    return "Background articles" + label + ":\n<<<ARTICLES\n" + body + "\nARTICLES>>>";
}

std::string comments_block(const std::vector<ingest::UserComment>& comments, std::size_t budget) {
    std::string lines;
    for (const auto& comment : comments) {
        std::string line = "- " + collapse_whitespace(comment.author) + ": " + collapse_whitespace(comment.text) + "\n";
        if (lines.size() + line.size() > budget) break;
        lines += line;
    }
    if (lines.empty()) return "";
    return "What viewers are saying in the comments:\n<<<COMMENTS\n" + lines + "COMMENTS>>>";
}

std::string target_block(const std::optional<ingest::UserComment>& target) {
    if (!target) return "";
    return "Write your comment as a reply to this viewer comment by " + collapse_whitespace(target->author) +
           ", answering their points directly:\n<<<TARGET\n" + target->text + "\nTARGET>>>";
}

std::string evaluation_block(const RubricEvaluation& evaluation) {
    std::string out;
    for (auto c : kAllCriteria) {
        out += fmt::format("- {} ({}): {}/{}. {}\n", display_name(c), key(c), evaluation.score(c), kMaxCriterionScore,
                           evaluation.feedback_for(c));
    }
    return out;
}

void validate_evaluation(const RubricEvaluation& evaluation) {
    for (auto c : kAllCriteria) {
        const int s = evaluation.score(c);
        if (s < 0 || s > kMaxCriterionScore) {
            throw PreconditionError(fmt::format("score for {} out of range: {}", key(c), s));
        }
    }
}

Values shared_values(const BenderInputs& inputs) {
    return {
        {"title", inputs.metadata.title},
        {"channel", inputs.metadata.channel_name},
    };
}

/// Truncates, then strips disallowed URLs until none remain; removal can
/// splice neighbouring text into a new URL-like span, hence the loop.
CommentDraft finish_draft(std::string_view raw, const BenderInputs& inputs, const BenderSettings& settings) {
    std::string text = truncate_at_sentence(strip_reply_wrapping(raw), settings.hard_cap_chars);
    const auto allowed = allowed_citations(inputs.report_text, inputs.corpus);
    std::vector<std::string> cited;
    while (true) {
        auto [cleaned, urls] = filter_citations(text, allowed);
        cited = std::move(urls);
        if (cleaned == text) break;
        text = std::move(cleaned);
    }
    if (text.empty()) throw LlmError("model returned an empty comment");
    CommentDraft draft;
    draft.text = std::move(text);
    draft.cited_urls = std::move(cited);
    return draft;
}

}  // namespace

std::string_view key(RubricCriterion c) noexcept {
    switch (c) {
        case RubricCriterion::NoHallucination: return "no_hallucination";
        case RubricCriterion::RightStand: return "right_stand";
        case RubricCriterion::Specific: return "specific";
        case RubricCriterion::SoundLogical: return "sound_logical";
        case RubricCriterion::CitesEvidence: return "cites_evidence";
        case RubricCriterion::AvoidsTruisms: return "avoids_truisms";
        case RubricCriterion::ShowsEmpathy: return "shows_empathy";
    }
    return "unknown";
}

std::string_view display_name(RubricCriterion c) noexcept {
    switch (c) {
        case RubricCriterion::NoHallucination: return "Does not hallucinate";
        case RubricCriterion::RightStand: return "Takes the right stand";
        case RubricCriterion::Specific: return "Is specific";
        case RubricCriterion::SoundLogical: return "Is sound and logical";
        case RubricCriterion::CitesEvidence: return "Cites evidence";
        case RubricCriterion::AvoidsTruisms: return "Avoids truisms";
        case RubricCriterion::ShowsEmpathy: return "Shows empathy";
    }
    return "Unknown";
}

int RubricEvaluation::total() const {
    int sum = 0;
    for (int s : scores) sum += s;
    return sum;
}

bool RubricEvaluation::perfect() const {
    return std::all_of(scores.begin(), scores.end(), [](int s) { return s == kMaxCriterionScore; });
}

double overall_score(const RubricEvaluation& evaluation) {
    constexpr int kMaxTotal = kMaxCriterionScore * static_cast<int>(kCriterionCount);
    return std::round(evaluation.total() * 1000.0 / kMaxTotal) / 10.0;
}

RubricEvaluation rubric_from_json(const nlohmann::json& document) {
    if (!document.is_object()) throw SchemaViolation("$", "self-evaluation must be a JSON object");
    std::map<std::string, const nlohmann::json*> by_key;
    for (const auto& [name, value] : document.items()) by_key[squash_key(name)] = &value;

    RubricEvaluation evaluation;
    for (auto c : kAllCriteria) {
        const std::string path(key(c));
        const auto it = by_key.find(squash_key(path));
        if (it == by_key.end()) throw SchemaViolation(path, "missing criterion " + path);
        const nlohmann::json& entry = *it->second;
        if (!entry.is_object()) throw SchemaViolation(path, "expected an object with score and feedback");
        const auto score = entry.find("score");
        if (score == entry.end() || !score->is_number_integer()) {
            throw SchemaViolation(path + ".score", "score must be an integer");
        }
        const auto value = score->get<std::int64_t>();
        if (value < 0 || value > kMaxCriterionScore) {
            throw SchemaViolation(path + ".score", fmt::format("score {} outside 0..{}", value, kMaxCriterionScore));
        }
        const auto feedback = entry.find("feedback");
        if (feedback == entry.end() || !feedback->is_string() || trim(feedback->get<std::string>()).empty()) {
            throw SchemaViolation(path + ".feedback", "feedback must be a non-empty string");
        }
        const auto index = static_cast<std::size_t>(c);
        evaluation.scores[index] = static_cast<int>(value);
        evaluation.feedback[index] = trim(feedback->get<std::string>());
    }
    return evaluation;
}

nlohmann::json to_json(const RubricEvaluation& evaluation) {
    nlohmann::json j = nlohmann::json::object();
    for (auto c : kAllCriteria) {
        j[std::string(key(c))] = {{"score", evaluation.score(c)}, {"feedback", evaluation.feedback_for(c)}};
    }
    return j;
}

nlohmann::json to_json(const CommentDraft& draft) {
    return {
        {"text", draft.text},
        {"cited_urls", draft.cited_urls},
        {"target_comment_id", draft.target_comment_id ? nlohmann::json(*draft.target_comment_id) : nlohmann::json()},
        {"generation", draft.generation},
    };
}

CommentDraft comment_draft_from_json(const nlohmann::json& j) {
    CommentDraft draft;
    draft.text = j.at("text").get<std::string>();
    draft.cited_urls = j.at("cited_urls").get<std::vector<std::string>>();
    if (j.contains("target_comment_id") && !j.at("target_comment_id").is_null()) {
        draft.target_comment_id = j.at("target_comment_id").get<std::string>();
    }
    draft.generation = j.at("generation").get<int>();
    return draft;
}

void PromptConfig::validate() const {
    if (max_improvement_passes < 0) throw PreconditionError("max_improvement_passes must be >= 0");
    if (self_eval_enabled && max_improvement_passes < 1) {
        throw PreconditionError("self-evaluation needs max_improvement_passes >= 1");
    }
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
    const auto read = [&](const char* name) {
        const auto path = dir / name;
        if (!std::filesystem::is_regular_file(path)) throw IoError("missing prompt template " + path.string());
        return read_file(path);
    };
    PromptTemplates t;
    t.comment_high_level = read("comment_high_level.txt");
    t.comment_detailed = read("comment_detailed.txt");
    t.example_comment = read("example_comment.txt");
    t.self_evaluate = read("self_evaluate.txt");
    t.improve_comment = read("improve_comment.txt");
    return t;
}

PromptConfig recommended_config(const PromptTemplates& templates) {
    PromptConfig config;
    config.instruction_level = InstructionLevel::Detailed;
    config.one_shot_example = trim(templates.example_comment);
    config.use_report = true;
    config.use_corpus = true;
    config.self_eval_enabled = true;
    config.max_improvement_passes = 1;
    return config;
}

std::string corpus_block(const Corpus& corpus, std::size_t budget_chars) {
    std::string out;
    for (const auto& article : corpus.articles) {
        const std::string header = "### " + article.title + "\nSource: " + article.url + "\n";
        const std::string block = header + article.body + "\n\n";
        const std::size_t remaining = budget_chars - out.size();
        if (block.size() <= remaining) {
            out += block;
            continue;
        }
        if (remaining > header.size()) {
            out += header;
            out += utf8_prefix(article.body, remaining - header.size());
        }
        break;
    }
    return trim(out);
}

std::vector<std::string> allowed_citations(std::string_view report_text, const Corpus& corpus) {
    std::vector<std::string> candidates = find_urls(report_text);
    for (const auto& article : corpus.articles) candidates.push_back(article.url);
    std::vector<std::string> out;
    std::vector<std::string> keys;
    for (auto& url : candidates) {
        auto k = citation_key(url);
        if (std::find(keys.begin(), keys.end(), k) != keys.end()) continue;
        keys.push_back(std::move(k));
        out.push_back(std::move(url));
    }
    return out;
}

std::pair<std::string, std::vector<std::string>> filter_citations(std::string_view text,
                                                                  const std::vector<std::string>& allowed) {
    std::map<std::string, std::string> allowed_by_key;
    for (const auto& url : allowed) allowed_by_key.emplace(citation_key(url), url);

    std::string out;
    std::vector<std::string> cited;
    bool removed = false;
    std::size_t pos = 0;
    for (const auto& span : find_url_spans(text)) {
        out.append(text.substr(pos, span.position - pos));
        const std::string_view url = text.substr(span.position, span.length);
        const auto it = allowed_by_key.find(citation_key(url));
        if (it != allowed_by_key.end()) {
            out.append(url);
            if (std::find(cited.begin(), cited.end(), it->second) == cited.end()) cited.push_back(it->second);
        } else {
            spdlog::warn("bender: stripped URL outside the report and corpus: {}", url);
            removed = true;
        }
        pos = span.position + span.length;
    }
    out.append(text.substr(pos));
    if (removed) out = tidy_after_removal(std::move(out));
    return {std::move(out), std::move(cited)};
}

std::string truncate_at_sentence(std::string_view text, std::size_t cap) {
    if (text.size() <= cap) return std::string(text);
    const std::string_view head = utf8_prefix(text, cap);
    for (std::size_t i = head.size(); i-- > 0;) {
        if (is_sentence_end(text, i)) return trim(text.substr(0, i + 1));
    }
    const auto space = head.find_last_of(" \n\t");
    if (space != std::string_view::npos && space > 0) return trim(head.substr(0, space));
    return std::string(head);
}

std::string generation_prompt(const BenderInputs& inputs, const PromptConfig& config, const PromptTemplates& templates,
                              const BenderSettings& settings) {
    config.validate();
    if (config.use_report && trim(inputs.report_text).empty()) {
        throw PreconditionError("use_report is set but the report text is empty");
    }
    const std::string& tmpl = config.instruction_level == InstructionLevel::Detailed ? templates.comment_detailed
                                                                                      : templates.comment_high_level;
    Values values = shared_values(inputs);
    values.emplace_back("example", example_block(config));
    values.emplace_back("report", config.use_report ? report_block(inputs.report_text) : "");
    values.emplace_back("corpus", config.use_corpus ? corpus_section(inputs.corpus, settings.corpus_budget_chars) : "");
    values.emplace_back("comments", comments_block(inputs.comments, settings.comments_budget_chars));
    values.emplace_back("target", target_block(inputs.target));
    std::string prompt = render_template(tmpl, values);
    if (inputs.target && prompt.find(inputs.target->text) == std::string::npos) {
        prompt += "\n\n" + target_block(inputs.target);
    }
    return prompt;
}

CommentDraft generate_comment(const BenderInputs& inputs, const PromptConfig& config, const PromptTemplates& templates,
                              llm::LanguageModel& model, const BenderSettings& settings) {
    const std::string prompt = generation_prompt(inputs, config, templates, settings);
    CommentDraft draft = finish_draft(model.complete(prompt, settings.generation_model), inputs, settings);
    draft.generation = 0;
    if (inputs.target) draft.target_comment_id = inputs.target->comment_id;
    return draft;
}

RubricEvaluation self_evaluate(const CommentDraft& draft, const BenderInputs& context,
                               const PromptTemplates& templates, llm::LanguageModel& model,
                               const BenderSettings& settings) {
    if (trim(draft.text).empty()) throw PreconditionError("cannot evaluate an empty draft");
    Values values = shared_values(context);
    values.emplace_back("comment", draft.text);
    values.emplace_back("report", report_block(context.report_text));
    values.emplace_back("corpus", corpus_section(context.corpus, settings.corpus_budget_chars));
    std::string prompt = render_template(templates.self_evaluate, values);
    if (prompt.find(draft.text) == std::string::npos) prompt += "\n\nDraft comment:\n" + draft.text;

    const llm::DocumentSchema schema{"self-evaluation", [](const nlohmann::json& j) { (void)rubric_from_json(j); }};
    return rubric_from_json(
        model.complete_structured(prompt, schema, settings.evaluation_model, settings.attempt_budget));
}

CommentDraft improve_comment(const CommentDraft& draft, const RubricEvaluation& evaluation, const BenderInputs& context,
                             const PromptConfig& config, const PromptTemplates& templates, llm::LanguageModel& model,
                             const BenderSettings& settings) {
    validate_evaluation(evaluation);
    const std::string review = evaluation_block(evaluation);
    Values values = shared_values(context);
    values.emplace_back("comment", draft.text);
    values.emplace_back("evaluation", review);
    values.emplace_back("example", example_block(config));
    values.emplace_back("report", config.use_report ? report_block(context.report_text) : "");
    values.emplace_back("corpus",
                        config.use_corpus ? corpus_section(context.corpus, settings.corpus_budget_chars) : "");
    values.emplace_back("comments", comments_block(context.comments, settings.comments_budget_chars));
    values.emplace_back("target", draft.target_comment_id ? target_block(context.target) : "");
    std::string prompt = render_template(templates.improve_comment, values);
    if (prompt.find(draft.text) == std::string::npos) prompt += "\n\nCurrent draft:\n" + draft.text;
    if (prompt.find(review) == std::string::npos) prompt += "\n\nReview:\n" + review;

    CommentDraft improved = finish_draft(model.complete(prompt, settings.generation_model), context, settings);
    improved.generation = draft.generation + 1;
    improved.target_comment_id = draft.target_comment_id;
    return improved;
}

BenderResult run_bender_loop(const BenderInputs& inputs, const PromptConfig& config, const PromptTemplates& templates,
                             llm::LanguageModel& model, const BenderSettings& settings) {
    config.validate();
    BenderResult result;
    result.drafts.push_back(generate_comment(inputs, config, templates, model, settings));
    if (config.self_eval_enabled) {
        for (int pass = 0; pass < config.max_improvement_passes; ++pass) {
            const CommentDraft& current = result.drafts.back();
            result.evaluations.push_back(self_evaluate(current, inputs, templates, model, settings));
            if (result.evaluations.back().perfect()) break;
            result.drafts.push_back(
                improve_comment(current, result.evaluations.back(), inputs, config, templates, model, settings));
        }
    }
    result.final_draft = result.drafts.back();
    return result;
}

}  // namespace sleuth::bender
