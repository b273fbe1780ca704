#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sleuth/claims/claims.hpp"
#include "sleuth/common/clock.hpp"
#include "sleuth/ingest/types.hpp"
#include "sleuth/llm/model.hpp"
#include "sleuth/retrieval/evidence.hpp"

namespace sleuth::verdict {

enum class Verdict { True, PartlyTrue, PartlyFalse, False, Unsure };

/// Enum name as serialized: TRUE, PARTLY_TRUE, PARTLY_FALSE, FALSE, UNSURE.
std::string_view to_string(Verdict v) noexcept;
/// Human label: True, Partly True, Partly False, False, Unsure.
std::string_view label(Verdict v) noexcept;
/// 🟢 🟡 🟠 🔴; Unsure has no indicator because it is never rendered.
std::string_view indicator(Verdict v) noexcept;
/// Accepts enum names and labels, ignoring case and `_`/`-`/space differences.
std::optional<Verdict> parse_verdict(std::string_view text) noexcept;

struct ClaimAssessment {
    claims::Claim claim;
    Verdict verdict = Verdict::Unsure;
    std::string reasoning;
    std::vector<std::string> sources;

    bool operator==(const ClaimAssessment&) const = default;
};

struct FactCheckReport {
    ingest::VideoMetadata metadata;
    std::vector<ClaimAssessment> assessments;
    Timestamp generated_at{};

    bool operator==(const FactCheckReport&) const = default;
};

inline constexpr std::string_view kInsufficientEvidence = "insufficient evidence";

struct AssessmentSettings {
    int attempt_budget = llm::kDefaultAttemptBudget;
    llm::ModelConfig model = llm::factual_config();
};

std::string assessment_prompt(const claims::Claim& claim, std::span<const retrieval::EvidenceBundle> bundles);

/// Judges one claim against the evidence gathered for its questions.
///
/// With no evidence at all the verdict is UNSURE without a model call.
/// Otherwise the model's structured answer is validated, and every cited URL
/// that does not appear in `bundles` is removed. If that leaves a definite
/// verdict without sources, SchemaViolation is thrown.
ClaimAssessment assess_claim(const claims::Claim& claim, std::span<const retrieval::EvidenceBundle> bundles,
                             llm::LanguageModel& model, const AssessmentSettings& settings = {});

/// Keeps every assessment, UNSURE included; suppression happens at render time.
FactCheckReport build_report(std::vector<ClaimAssessment> assessments, ingest::VideoMetadata metadata,
                             Timestamp generated_at);

/// Human-facing report. UNSURE assessments never appear.
std::string render_markdown(const FactCheckReport& report);

/// Deterministic plain text for downstream agents; includes UNSURE assessments.
std::string render_text(const FactCheckReport& report);

inline constexpr int kReportSchemaVersion = 1;
nlohmann::json to_json(const FactCheckReport& report);
FactCheckReport report_from_json(const nlohmann::json& j);

/// Every source URL cited anywhere in the report, first occurrence order.
std::vector<std::string> report_urls(const FactCheckReport& report);

}  // namespace sleuth::verdict
