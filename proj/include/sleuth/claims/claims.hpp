#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sleuth/ingest/types.hpp"
#include "sleuth/llm/model.hpp"

namespace sleuth::claims {

struct Claim {
    int id = 0;
    std::string text;
    std::optional<std::string> transcript_anchor;

    bool operator==(const Claim&) const = default;
};

struct VerifiableQuestion {
    int id = 0;
    int claim_id = 0;
    std::string text;

    bool operator==(const VerifiableQuestion&) const = default;
};

/// Claims in transcript order plus their fact-checkable questions. The only
/// way to build one is `create`, which enforces referential integrity, so a
/// ClaimSet in hand is always valid.
class ClaimSet {
  public:
    ClaimSet() = default;

    /// Throws SchemaViolation when ids repeat or are not increasing, a claim
    /// text is empty, a question does not end with '?', or a question's
    /// claim_id does not resolve.
    static ClaimSet create(std::string video_id, std::vector<Claim> claims, std::vector<VerifiableQuestion> questions);

    [[nodiscard]] const std::string& video_id() const noexcept { return video_id_; }
    [[nodiscard]] const std::vector<Claim>& claims() const noexcept { return claims_; }
    [[nodiscard]] const std::vector<VerifiableQuestion>& questions() const noexcept { return questions_; }
    [[nodiscard]] std::vector<VerifiableQuestion> questions_for(int claim_id) const;
    [[nodiscard]] bool empty() const noexcept { return claims_.empty(); }

    bool operator==(const ClaimSet&) const = default;

  private:
    std::string video_id_;
    std::vector<Claim> claims_;
    std::vector<VerifiableQuestion> questions_;
};

inline constexpr int kClaimDocumentVersion = 1;

/// Canonical claim document:
/// `{"schema_version":1,"video_id":..,"claims":[{"id":1,"text":..,"anchor":..,"questions":[{"id":1,"text":..}]}]}`
nlohmann::json to_document(const ClaimSet& set);

/// Strict structural validation of a parsed claim document. Accepts nested
/// questions (strings or `{text}` objects) and/or a top-level `questions`
/// array of `{claim_id, text}`; question ids are assigned in claim order.
/// `min_claims` lets the extractor require at least one claim.
ClaimSet claim_set_from_json(const nlohmann::json& document, std::size_t min_claims = 0);

/// Parses model or file text into a ClaimSet. Code fences and prose around
/// the document are repaired by extracting the embedded JSON and retrying;
/// anything else raises SchemaViolation carrying the failing path.
ClaimSet validate_claim_document(std::string_view raw);

/// Merges claims whose case-folded, whitespace-collapsed text matches,
/// re-parenting questions onto the first occurrence.
ClaimSet dedupe_claims(const ClaimSet& set);

struct ExtractionSettings {
    std::size_t max_claims = 10;
    std::size_t max_questions_per_claim = 3;
    int attempt_budget = llm::kDefaultAttemptBudget;
    llm::ModelConfig model = llm::factual_config();
};

std::string extraction_prompt(const ingest::Transcript& transcript, const ingest::VideoMetadata& metadata,
                              const ExtractionSettings& settings);

/// Identifies checkable claims and rewrites each into questions. Returns a
/// schema-valid ClaimSet with 1..max_claims claims or throws.
ClaimSet extract_claims(const ingest::Transcript& transcript, const ingest::VideoMetadata& metadata,
                        llm::LanguageModel& model, const ExtractionSettings& settings = {});

}  // namespace sleuth::claims
