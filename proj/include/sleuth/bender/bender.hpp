#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sleuth/ingest/types.hpp"
#include "sleuth/llm/model.hpp"

namespace sleuth::bender {

struct Article {
    std::string title;
    std::string url;
    std::string body;

    bool operator==(const Article&) const = default;
};

struct Corpus {
    std::string theme;
    std::vector<Article> articles;
    std::size_t total_chars = 0;
};

/// One article per regular, non-hidden file, in filename order. Each file
/// starts with a `---` front-matter block holding `title:` and `url:` lines;
/// the rest is the body. Files with an empty body are skipped.
Corpus load_corpus(const std::filesystem::path& directory, std::string theme);

struct CommentDraft {
    std::string text;
    std::vector<std::string> cited_urls;
    std::optional<std::string> target_comment_id;
    int generation = 0;

    bool operator==(const CommentDraft&) const = default;
};

enum class RubricCriterion {
    NoHallucination,
    RightStand,
    Specific,
    SoundLogical,
    CitesEvidence,
    AvoidsTruisms,
    ShowsEmpathy,
};

inline constexpr std::size_t kCriterionCount = 7;
inline constexpr std::array<RubricCriterion, kCriterionCount> kAllCriteria = {
    RubricCriterion::NoHallucination, RubricCriterion::RightStand,    RubricCriterion::Specific,
    RubricCriterion::SoundLogical,    RubricCriterion::CitesEvidence, RubricCriterion::AvoidsTruisms,
    RubricCriterion::ShowsEmpathy,
};
inline constexpr int kMaxCriterionScore = 2;

/// JSON key, e.g. `cites_evidence`.
std::string_view key(RubricCriterion c) noexcept;
/// Display name, e.g. "Cites evidence".
std::string_view display_name(RubricCriterion c) noexcept;

struct RubricEvaluation {
    std::array<int, kCriterionCount> scores{};
    std::array<std::string, kCriterionCount> feedback{};

    [[nodiscard]] int score(RubricCriterion c) const { return scores[static_cast<std::size_t>(c)]; }
    [[nodiscard]] const std::string& feedback_for(RubricCriterion c) const {
        return feedback[static_cast<std::size_t>(c)];
    }
    [[nodiscard]] int total() const;
    [[nodiscard]] bool perfect() const;

    bool operator==(const RubricEvaluation&) const = default;
};

/// Sum of scores over the maximum (14), as a percentage rounded to one decimal.
double overall_score(const RubricEvaluation& evaluation);

/// Strict parse of a self-evaluation document; all seven criteria with an
/// integer score in [0, 2] and non-empty feedback. Keys are matched ignoring
/// case and `_`/`-`/space.
RubricEvaluation rubric_from_json(const nlohmann::json& document);
nlohmann::json to_json(const RubricEvaluation& evaluation);
nlohmann::json to_json(const CommentDraft& draft);
CommentDraft comment_draft_from_json(const nlohmann::json& j);

enum class InstructionLevel { HighLevel, Detailed };

struct PromptConfig {
    InstructionLevel instruction_level = InstructionLevel::Detailed;
    std::optional<std::string> one_shot_example;
    bool use_report = true;
    bool use_corpus = true;
    bool self_eval_enabled = true;
    int max_improvement_passes = 1;

    /// Throws PreconditionError when self-evaluation is on with zero passes.
    void validate() const;
};

/// Editable prompt files. Placeholders: {title} {channel} {report} {corpus}
/// {comments} {target} {example} for generation; {comment} and {evaluation}
/// additionally for self-evaluation and improvement.
struct PromptTemplates {
    std::string comment_high_level;
    std::string comment_detailed;
    std::string example_comment;
    std::string self_evaluate;
    std::string improve_comment;

    /// Reads comment_high_level.txt, comment_detailed.txt, example_comment.txt,
    /// self_evaluate.txt and improve_comment.txt from `dir`.
    static PromptTemplates load(const std::filesystem::path& dir);
};

/// Detailed instructions, the shipped exemplar, report, corpus and one
/// self-evaluation pass.
PromptConfig recommended_config(const PromptTemplates& templates);

struct BenderInputs {
    std::string report_text;
    Corpus corpus;
    ingest::VideoMetadata metadata;
    std::vector<ingest::UserComment> comments;
    std::optional<ingest::UserComment> target;
};

struct BenderSettings {
    llm::ModelConfig generation_model = llm::stylistic_config();
    llm::ModelConfig evaluation_model = llm::factual_config();
    int attempt_budget = llm::kDefaultAttemptBudget;
    std::size_t corpus_budget_chars = 12'000;
    std::size_t comments_budget_chars = 4'000;
    std::size_t hard_cap_chars = 1'500;
};

/// Article blocks in order until the budget runs out; the article crossing
/// the budget is cut at the boundary.
std::string corpus_block(const Corpus& corpus, std::size_t budget_chars);

/// Every URL a draft may cite: URLs in the report text plus corpus article URLs.
std::vector<std::string> allowed_citations(std::string_view report_text, const Corpus& corpus);

/// Removes every URL not in `allowed` from the text and returns the cleaned
/// text and the allowed URLs it cites (in the allowed list's spelling).
std::pair<std::string, std::vector<std::string>> filter_citations(std::string_view text,
                                                                  const std::vector<std::string>& allowed);

/// Cuts text longer than `cap` at the last sentence end that fits (or the
/// last space when there is none).
std::string truncate_at_sentence(std::string_view text, std::size_t cap);

std::string generation_prompt(const BenderInputs& inputs, const PromptConfig& config, const PromptTemplates& templates,
                              const BenderSettings& settings = {});

CommentDraft generate_comment(const BenderInputs& inputs, const PromptConfig& config, const PromptTemplates& templates,
                              llm::LanguageModel& model, const BenderSettings& settings = {});

/// The evaluator sees the report and corpus whenever they are available,
/// independent of what the generation prompt was given.
RubricEvaluation self_evaluate(const CommentDraft& draft, const BenderInputs& context,
                               const PromptTemplates& templates, llm::LanguageModel& model,
                               const BenderSettings& settings = {});

CommentDraft improve_comment(const CommentDraft& draft, const RubricEvaluation& evaluation, const BenderInputs& context,
                             const PromptConfig& config, const PromptTemplates& templates, llm::LanguageModel& model,
                             const BenderSettings& settings = {});

struct BenderResult {
    CommentDraft final_draft;
    /// Every draft produced, generation 0 first.
    std::vector<CommentDraft> drafts;
    std::vector<RubricEvaluation> evaluations;
};

/// generate, then up to `max_improvement_passes` rounds of evaluate/improve,
/// stopping early once an evaluation scores 2 on every criterion.
BenderResult run_bender_loop(const BenderInputs& inputs, const PromptConfig& config, const PromptTemplates& templates,
                             llm::LanguageModel& model, const BenderSettings& settings = {});

}  // namespace sleuth::bender
