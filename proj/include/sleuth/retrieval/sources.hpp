#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sleuth/common/http.hpp"
#include "sleuth/retrieval/evidence.hpp"

namespace sleuth::retrieval {

/// One evidence backend. Implementations must tolerate concurrent calls.
class Retriever {
  public:
    virtual ~Retriever() = default;
    [[nodiscard]] virtual SourceKind kind() const = 0;
    /// At most `k` items in backend rank order. Empty results are not errors.
    virtual std::vector<Evidence> search(const std::string& question, int k) = 0;
};

struct WebSearchConfig {
    std::string api_key;
    std::string engine_id;
    std::string endpoint = "https://www.googleapis.com/customsearch/v1";
};

struct EncyclopediaConfig {
    std::string endpoint = "https://en.wikipedia.org/w/api.php";
    std::string user_agent = "sleuth-factcheck/1.0 (research tool)";
    /// Linked pages tried when a hit is a disambiguation page.
    int max_disambiguation_hops = 5;
};

struct ClaimReviewConfig {
    std::string api_key;
    std::string endpoint = "https://factchecktools.googleapis.com/v1alpha1/claims:search";
    std::string language_code = "en";
};

/// Programmable web search; excerpt is the result snippet.
std::vector<Evidence> search_web(std::string_view question, HttpClient& http, const WebSearchConfig& config, int k);

/// Encyclopedia full-text search; excerpt is the page's intro extract and the
/// URL its canonical page URL. A disambiguation hit is replaced by the first
/// linked article (API order) that is not itself a disambiguation page; the
/// publisher field then reads `Wikipedia (via disambiguation "<title>")`.
std::vector<Evidence> search_encyclopedia(std::string_view question, HttpClient& http,
                                          const EncyclopediaConfig& config, int k);

/// Professional fact-check search. One item per matched claim, from its first
/// review with a usable URL: url = review URL, excerpt = claim text plus
/// rating, review_rating = textual rating, publisher = review publisher.
std::vector<Evidence> search_claimreview(std::string_view question, HttpClient& http, const ClaimReviewConfig& config,
                                         int k);

class WebSearchRetriever final : public Retriever {
  public:
    WebSearchRetriever(HttpClient& http, WebSearchConfig config) : http_(http), config_(std::move(config)) {}
    [[nodiscard]] SourceKind kind() const override { return SourceKind::WebSearch; }
    std::vector<Evidence> search(const std::string& question, int k) override {
        return search_web(question, http_, config_, k);
    }

  private:
    HttpClient& http_;
    WebSearchConfig config_;
};

class EncyclopediaRetriever final : public Retriever {
  public:
    EncyclopediaRetriever(HttpClient& http, EncyclopediaConfig config) : http_(http), config_(std::move(config)) {}
    [[nodiscard]] SourceKind kind() const override { return SourceKind::Encyclopedia; }
    std::vector<Evidence> search(const std::string& question, int k) override {
        return search_encyclopedia(question, http_, config_, k);
    }

  private:
    HttpClient& http_;
    EncyclopediaConfig config_;
};

class ClaimReviewRetriever final : public Retriever {
  public:
    ClaimReviewRetriever(HttpClient& http, ClaimReviewConfig config) : http_(http), config_(std::move(config)) {}
    [[nodiscard]] SourceKind kind() const override { return SourceKind::ClaimReview; }
    std::vector<Evidence> search(const std::string& question, int k) override {
        return search_claimreview(question, http_, config_, k);
    }

  private:
    HttpClient& http_;
    ClaimReviewConfig config_;
};

}  // namespace sleuth::retrieval
