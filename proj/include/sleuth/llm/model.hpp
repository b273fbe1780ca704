#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "sleuth/common/clock.hpp"

namespace sleuth::llm {

struct ModelConfig {
    std::string provider = "gemini";
    std::string model_name = "gemini-1.5-flash";
    double temperature = 0.2;
    int max_output_tokens = 2048;
    std::chrono::milliseconds request_timeout{60'000};
    /// Prompts longer than this fail fast with SizingError.
    std::size_t context_budget_chars = 400'000;

    /// Throws PreconditionError on out-of-range fields.
    void validate() const;
};

/// Extraction, assessment and evaluation: factual, low temperature.
ModelConfig factual_config(ModelConfig base = {});
/// Comment generation: stylistic, higher temperature.
ModelConfig stylistic_config(ModelConfig base = {});

struct TokenCounts {
    std::int64_t prompt = 0;
    std::int64_t output = 0;
};

struct CompletionRecord {
    std::string prompt_hash;
    std::string response;
    std::int64_t latency_ms = 0;
    TokenCounts tokens;
    Timestamp timestamp;
};

nlohmann::json to_json(const CompletionRecord& record);
CompletionRecord completion_record_from_json(const nlohmann::json& j);

/// Validator for a structured model output. `validate` throws
/// SchemaViolation naming the first failing path.
struct DocumentSchema {
    std::string name;
    std::function<void(const nlohmann::json&)> validate;
};

/// Total attempts (first try plus re-prompts) allowed for a structured call
/// inside the pipeline: one initial prompt and two repairs.
inline constexpr int kDefaultAttemptBudget = 3;

/// Provider-agnostic model interface.
class LanguageModel {
  public:
    virtual ~LanguageModel() = default;

    virtual std::string complete(const std::string& prompt, const ModelConfig& config) = 0;

    /// Parses and validates the response against `schema`. Soft violations
    /// (code fences, prose around the document) are repaired locally; any
    /// other violation triggers a re-prompt embedding the validation error,
    /// up to `attempt_budget` model calls in total.
    virtual nlohmann::json complete_structured(const std::string& prompt, const DocumentSchema& schema,
                                               const ModelConfig& config,
                                               int attempt_budget = kDefaultAttemptBudget);
};

/// Pulls the JSON document out of a model reply: strips a Markdown code fence
/// and any prose before the first `{`/`[` or after its matching close.
std::optional<std::string> extract_json_document(std::string_view reply);

/// The repair loop behind `LanguageModel::complete_structured`, usable with
/// any completion function.
nlohmann::json structured_completion(const std::function<std::string(const std::string&)>& complete,
                                     const std::string& prompt, const DocumentSchema& schema,
                                     int attempt_budget);

}  // namespace sleuth::llm
