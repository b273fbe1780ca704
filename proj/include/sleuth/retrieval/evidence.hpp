#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace sleuth::retrieval {

/// Declaration order is bundle order.
enum class SourceKind { WebSearch, Encyclopedia, ClaimReview };

std::string_view to_string(SourceKind kind) noexcept;
std::optional<SourceKind> source_kind_from_string(std::string_view name) noexcept;

inline constexpr std::size_t kMaxExcerptChars = 1000;

struct Evidence {
    std::string url;
    std::string excerpt;
    SourceKind source_kind = SourceKind::WebSearch;
    std::optional<std::string> publisher;
    /// Only for ClaimReview items.
    std::optional<std::string> review_rating;

    bool operator==(const Evidence&) const = default;
};

/// Builds an Evidence item, truncating the snippet to a UTF-8-safe prefix of
/// at most kMaxExcerptChars bytes. Returns nullopt for invalid URLs or empty
/// snippets. A rating on a non-ClaimReview item is dropped.
std::optional<Evidence> make_evidence(std::string_view url, std::string_view snippet, SourceKind kind,
                                      std::optional<std::string> publisher = std::nullopt,
                                      std::optional<std::string> review_rating = std::nullopt);

struct RetrieverError {
    SourceKind source_kind = SourceKind::WebSearch;
    std::string summary;

    bool operator==(const RetrieverError&) const = default;
};

struct EvidenceBundle {
    int question_id = 0;
    std::string question_text;
    std::vector<Evidence> items;
    std::vector<RetrieverError> retriever_errors;

    bool operator==(const EvidenceBundle&) const = default;
};

nlohmann::json to_json(const Evidence& e);
Evidence evidence_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvidenceBundle& b);
EvidenceBundle evidence_bundle_from_json(const nlohmann::json& j);

}  // namespace sleuth::retrieval
