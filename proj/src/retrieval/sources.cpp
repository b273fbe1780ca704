#include "sleuth/retrieval/sources.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"
#include "sleuth/common/url.hpp"

namespace sleuth::retrieval {
namespace {

void require_k(int k) {
    if (k < 1) throw PreconditionError("k must be >= 1");
}

std::string google_error_reason(const std::string& body) {
    const auto parsed = nlohmann::json::parse(body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) return {};
    const auto error = parsed.find("error");
    if (error == parsed.end() || !error->is_object()) return {};
    if (const auto errors = error->find("errors"); errors != error->end() && errors->is_array() && !errors->empty()) {
        return (*errors)[0].value("reason", "");
    }
    return error->value("status", "");
}

void raise_for_status(const HttpResponse& response, std::string_view source) {
    if (response.status >= 200 && response.status < 300) return;
    const std::string reason = google_error_reason(response.body);
    if (response.status == 429 || reason == "rateLimitExceeded" || reason == "dailyLimitExceeded" ||
        reason == "quotaExceeded" || reason == "userRateLimitExceeded" || reason == "RESOURCE_EXHAUSTED") {
        throw QuotaExceeded(fmt::format("{} quota exceeded", source));
    }
    if (response.status == 401 || response.status == 403 || reason == "keyInvalid") {
        throw AuthError(fmt::format("{} rejected credentials ({})", source, response.status));
    }
    throw TransportError(fmt::format("{} returned status {}", source, response.status));
}

nlohmann::json parse_json(const HttpResponse& response, std::string_view source) {
    auto parsed = nlohmann::json::parse(response.body, nullptr, false);
    if (parsed.is_discarded()) throw TransportError(fmt::format("{} returned unparseable JSON", source));
    return parsed;
}

struct WikiPage {
    std::string title;
    std::string url;
    std::string extract;
    bool disambiguation = false;
    int index = 0;
};

std::vector<WikiPage> wiki_pages(const nlohmann::json& body) {
    std::vector<WikiPage> pages;
    const auto query = body.find("query");
    if (query == body.end()) return pages;
    for (const auto& p : query->value("pages", nlohmann::json::array())) {
        if (p.value("missing", false) || p.value("invalid", false)) continue;
        WikiPage page;
        page.title = p.value("title", "");
        page.url = p.value("fullurl", p.value("canonicalurl", ""));
        page.extract = p.value("extract", "");
        page.index = p.value("index", 0);
        page.disambiguation = p.contains("pageprops") && p["pageprops"].contains("disambiguation");
        pages.push_back(std::move(page));
    }
    std::stable_sort(pages.begin(), pages.end(), [](const WikiPage& a, const WikiPage& b) { return a.index < b.index; });
    return pages;
}

HttpResponse wiki_get(HttpClient& http, const EncyclopediaConfig& config, const std::string& query) {
    HttpRequest request;
    request.url = config.endpoint + "?action=query&format=json&formatversion=2&" + query;
    request.headers = {{"User-Agent", config.user_agent}};
    auto response = http.send(request);
    raise_for_status(response, "encyclopedia");
    return response;
}

std::optional<WikiPage> resolve_disambiguation(HttpClient& http, const EncyclopediaConfig& config,
                                               const WikiPage& page) {
    const auto links_body =
        parse_json(wiki_get(http, config, "titles=" + url_encode(page.title) + "&prop=links&plnamespace=0&pllimit=max"),
                   "encyclopedia");
    std::vector<std::string> titles;
    if (const auto query = links_body.find("query"); query != links_body.end()) {
        for (const auto& p : query->value("pages", nlohmann::json::array())) {
            for (const auto& link : p.value("links", nlohmann::json::array())) {
                titles.push_back(link.value("title", ""));
            }
        }
    }
    int hops = 0;
    for (const auto& title : titles) {
        if (title.empty()) continue;
        if (hops++ >= config.max_disambiguation_hops) break;
        const auto body = parse_json(
            wiki_get(http, config,
                     "titles=" + url_encode(title) +
                         "&prop=extracts|pageprops|info&inprop=url&exintro=1&explaintext=1&ppprop=disambiguation&redirects=1"),
            "encyclopedia");
        for (auto& candidate : wiki_pages(body)) {
            if (!candidate.disambiguation && !trim(candidate.extract).empty()) return candidate;
        }
    }
    return std::nullopt;
}

}  // namespace

std::vector<Evidence> search_web(std::string_view question, HttpClient& http, const WebSearchConfig& config, int k) {
    require_k(k);
    if (config.api_key.empty() || config.engine_id.empty()) throw AuthError("web search credentials not configured");
    HttpRequest request;
    request.url = fmt::format("{}?cx={}&q={}&num={}", config.endpoint, url_encode(config.engine_id),
                              url_encode(question), std::min(k, 10));
    request.headers = {{"x-goog-api-key", config.api_key}};
    const auto response = http.send(request);
    raise_for_status(response, "web search");
    const auto body = parse_json(response, "web search");

    std::vector<Evidence> out;
    for (const auto& item : body.value("items", nlohmann::json::array())) {
        if (static_cast<int>(out.size()) == k) break;
        std::string snippet = item.value("snippet", "");
        if (trim(snippet).empty()) snippet = item.value("title", "");
        std::optional<std::string> publisher;
        if (item.contains("displayLink")) publisher = item["displayLink"].get<std::string>();
        if (auto e = make_evidence(item.value("link", ""), snippet, SourceKind::WebSearch, publisher)) {
            out.push_back(std::move(*e));
        }
    }
    return out;
}

std::vector<Evidence> search_encyclopedia(std::string_view question, HttpClient& http,
                                          const EncyclopediaConfig& config, int k) {
    require_k(k);
    const auto body = parse_json(
        wiki_get(http, config,
                 fmt::format("generator=search&gsrsearch={}&gsrlimit={}&prop=extracts|pageprops|info&inprop=url"
                             "&exintro=1&explaintext=1&exlimit=max&ppprop=disambiguation&redirects=1",
                             url_encode(question), std::min(k, 20))),
        "encyclopedia");

    std::vector<Evidence> out;
    std::set<std::string> seen;
    for (const auto& page : wiki_pages(body)) {
        if (static_cast<int>(out.size()) == k) break;
        WikiPage chosen = page;
        std::string publisher = "Wikipedia";
        if (page.disambiguation) {
            auto resolved = resolve_disambiguation(http, config, page);
            if (!resolved) {
                spdlog::info("encyclopedia: disambiguation page '{}' had no concrete article", page.title);
                continue;
            }
            chosen = std::move(*resolved);
            publisher = fmt::format("Wikipedia (via disambiguation \"{}\")", page.title);
        }
        if (!seen.insert(normalize_url(chosen.url)).second) continue;
        if (auto e = make_evidence(chosen.url, trim(chosen.extract), SourceKind::Encyclopedia, publisher)) {
            out.push_back(std::move(*e));
        }
    }
    return out;
}

std::vector<Evidence> search_claimreview(std::string_view question, HttpClient& http, const ClaimReviewConfig& config,
                                         int k) {
    require_k(k);
    if (config.api_key.empty()) throw AuthError("fact-check search credentials not configured");
    HttpRequest request;
    request.url = fmt::format("{}?query={}&pageSize={}&languageCode={}", config.endpoint, url_encode(question), k,
                              url_encode(config.language_code));
    request.headers = {{"x-goog-api-key", config.api_key}};
    const auto response = http.send(request);
    raise_for_status(response, "fact-check search");
    const auto body = parse_json(response, "fact-check search");

    std::vector<Evidence> out;
    for (const auto& claim : body.value("claims", nlohmann::json::array())) {
        if (static_cast<int>(out.size()) == k) break;
        const std::string claim_text = trim(claim.value("text", ""));
        for (const auto& review : claim.value("claimReview", nlohmann::json::array())) {
            const std::string url = review.value("url", "");
            if (!is_valid_url(url)) continue;
            std::optional<std::string> rating;
            if (review.contains("textualRating") && review["textualRating"].is_string() &&
                !trim(review["textualRating"].get<std::string>()).empty()) {
                rating = trim(review["textualRating"].get<std::string>());
            }
            std::optional<std::string> publisher;
            if (const auto pub = review.find("publisher"); pub != review.end() && pub->is_object()) {
                const std::string name = pub->value("name", pub->value("site", ""));
                if (!name.empty()) publisher = name;
            }
            std::string excerpt = "Claim: " + (claim_text.empty() ? review.value("title", "") : claim_text);
            if (rating) excerpt += " Rating: " + *rating;
            if (auto e = make_evidence(url, excerpt, SourceKind::ClaimReview, publisher, rating)) {
                out.push_back(std::move(*e));
                break;
            }
        }
    }
    return out;
}

}  // namespace sleuth::retrieval
