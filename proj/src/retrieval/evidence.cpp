#include "sleuth/retrieval/evidence.hpp"

#include "sleuth/common/text.hpp"
#include "sleuth/common/url.hpp"

namespace sleuth::retrieval {

std::string_view to_string(SourceKind kind) noexcept {
    switch (kind) {
        case SourceKind::WebSearch: return "WEB_SEARCH";
        case SourceKind::Encyclopedia: return "ENCYCLOPEDIA";
        case SourceKind::ClaimReview: return "CLAIM_REVIEW";
    }
    return "WEB_SEARCH";
}

std::optional<SourceKind> source_kind_from_string(std::string_view name) noexcept {
    if (name == "WEB_SEARCH") return SourceKind::WebSearch;
    if (name == "ENCYCLOPEDIA") return SourceKind::Encyclopedia;
    if (name == "CLAIM_REVIEW") return SourceKind::ClaimReview;
    return std::nullopt;
}

std::optional<Evidence> make_evidence(std::string_view url, std::string_view snippet, SourceKind kind,
                                      std::optional<std::string> publisher, std::optional<std::string> review_rating) {
    if (!is_valid_url(url)) return std::nullopt;
    const std::string_view excerpt = utf8_prefix(snippet, kMaxExcerptChars);
    if (trim(excerpt).empty()) return std::nullopt;
    Evidence e;
    e.url = trim(url);
    e.excerpt = std::string(excerpt);
    e.source_kind = kind;
    e.publisher = std::move(publisher);
    if (kind == SourceKind::ClaimReview) e.review_rating = std::move(review_rating);
    return e;
}

nlohmann::json to_json(const Evidence& e) {
    nlohmann::json j = {{"url", e.url}, {"excerpt", e.excerpt}, {"source_kind", to_string(e.source_kind)}};
    j["publisher"] = e.publisher ? nlohmann::json(*e.publisher) : nlohmann::json(nullptr);
    j["review_rating"] = e.review_rating ? nlohmann::json(*e.review_rating) : nlohmann::json(nullptr);
    return j;
}

Evidence evidence_from_json(const nlohmann::json& j) {
    Evidence e;
    e.url = j.at("url").get<std::string>();
    e.excerpt = j.at("excerpt").get<std::string>();
    e.source_kind = source_kind_from_string(j.at("source_kind").get<std::string>()).value_or(SourceKind::WebSearch);
    if (j.contains("publisher") && j["publisher"].is_string()) e.publisher = j["publisher"].get<std::string>();
    if (j.contains("review_rating") && j["review_rating"].is_string()) {
        e.review_rating = j["review_rating"].get<std::string>();
    }
    return e;
}

nlohmann::json to_json(const EvidenceBundle& b) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& e : b.items) items.push_back(to_json(e));
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& err : b.retriever_errors) {
        errors.push_back({{"source_kind", to_string(err.source_kind)}, {"summary", err.summary}});
    }
    return {{"question_id", b.question_id},
            {"question", b.question_text},
            {"items", std::move(items)},
            {"retriever_errors", std::move(errors)}};
}

EvidenceBundle evidence_bundle_from_json(const nlohmann::json& j) {
    EvidenceBundle b;
    b.question_id = j.at("question_id").get<int>();
    b.question_text = j.value("question", "");
    for (const auto& item : j.at("items")) b.items.push_back(evidence_from_json(item));
    for (const auto& err : j.value("retriever_errors", nlohmann::json::array())) {
        b.retriever_errors.push_back(
            {source_kind_from_string(err.at("source_kind").get<std::string>()).value_or(SourceKind::WebSearch),
             err.value("summary", "")});
    }
    return b;
}

}  // namespace sleuth::retrieval
