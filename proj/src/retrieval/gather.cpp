#include "sleuth/retrieval/gather.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <future>
#include <set>

#include "sleuth/common/errors.hpp"
#include "sleuth/common/hash.hpp"
#include "sleuth/common/text.hpp"
#include "sleuth/common/url.hpp"

namespace sleuth::retrieval {

EvidenceCache::EvidenceCache(std::filesystem::path dir, std::chrono::milliseconds ttl, Clock& clock)
    : dir_(std::move(dir)), ttl_(ttl), clock_(clock) {}

std::string EvidenceCache::key(SourceKind source, const std::string& question, int k) {
    return sha256_hex(fmt::format("{}\n{}\n{}", to_string(source), question, k));
}

std::optional<std::vector<Evidence>> EvidenceCache::get(SourceKind source, const std::string& question, int k) const {
    const auto path = dir_ / (key(source, question, k) + ".json");
    std::string contents;
    {
        std::shared_lock lock(mutex_);
        if (!std::filesystem::exists(path)) return std::nullopt;
        contents = read_file(path);
    }
    const auto entry = nlohmann::json::parse(contents, nullptr, false);
    if (entry.is_discarded()) return std::nullopt;
    const auto stored = parse_iso8601(entry.value("stored_at", ""));
    if (!stored || clock_.now() - *stored >= ttl_) return std::nullopt;
    std::vector<Evidence> items;
    for (const auto& item : entry.at("items")) items.push_back(evidence_from_json(item));
    return items;
}

void EvidenceCache::put(SourceKind source, const std::string& question, int k, const std::vector<Evidence>& items) {
    nlohmann::json array = nlohmann::json::array();
    for (const auto& e : items) array.push_back(to_json(e));
    const nlohmann::json entry = {{"source", to_string(source)},
                                  {"question", question},
                                  {"k", k},
                                  {"stored_at", format_iso8601(clock_.now())},
                                  {"items", std::move(array)}};
    std::unique_lock lock(mutex_);
    write_file_atomic(dir_ / (key(source, question, k) + ".json"), entry.dump(2) + "\n");
}

RateLimiter::RateLimiter(std::chrono::milliseconds min_interval, Clock& clock)
    : min_interval_(min_interval), clock_(clock) {}

void RateLimiter::acquire() {
    Timestamp slot;
    {
        std::lock_guard lock(mutex_);
        slot = clock_.now();
        if (last_slot_ && *last_slot_ + min_interval_ > slot) slot = *last_slot_ + min_interval_;
        last_slot_ = slot;
    }
    clock_.sleep_until(slot);
}

std::vector<Evidence> CachedRetriever::search(const std::string& question, int k) {
    if (auto hit = cache_.get(inner_.kind(), question, k)) return *hit;
    auto items = inner_.search(question, k);
    cache_.put(inner_.kind(), question, k, items);
    return items;
}

EvidenceBundle gather_evidence(const claims::VerifiableQuestion& question, std::span<Retriever* const> retrievers,
                               int per_source_k) {
    if (retrievers.empty()) throw PreconditionError("at least one retriever must be configured");
    if (per_source_k < 1) throw PreconditionError("per-source k must be >= 1");

    std::vector<std::future<std::vector<Evidence>>> pending;
    pending.reserve(retrievers.size());
    for (Retriever* retriever : retrievers) {
        pending.push_back(std::async(std::launch::async, [retriever, &question, per_source_k] {
            return retriever->search(question.text, per_source_k);
        }));
    }

    EvidenceBundle bundle;
    bundle.question_id = question.id;
    bundle.question_text = question.text;
    std::vector<Evidence> collected;
    for (std::size_t i = 0; i < pending.size(); ++i) {
        try {
            auto items = pending[i].get();
            if (static_cast<int>(items.size()) > per_source_k) items.resize(static_cast<std::size_t>(per_source_k));
            for (auto& item : items) {
                item.source_kind = retrievers[i]->kind();
                if (item.source_kind != SourceKind::ClaimReview) item.review_rating.reset();
                item.excerpt = std::string(utf8_prefix(item.excerpt, kMaxExcerptChars));
                if (!is_valid_url(item.url) || trim(item.excerpt).empty()) continue;
                collected.push_back(std::move(item));
            }
        } catch (const std::exception& e) {
            spdlog::warn("retriever {} failed for question {}: {}", to_string(retrievers[i]->kind()), question.id,
                         e.what());
            bundle.retriever_errors.push_back({retrievers[i]->kind(), e.what()});
        }
    }
    if (bundle.retriever_errors.size() == retrievers.size()) {
        throw AllRetrieversFailed(
            fmt::format("all {} retrievers failed for question {}", retrievers.size(), question.id));
    }

    std::stable_sort(collected.begin(), collected.end(),
                     [](const Evidence& a, const Evidence& b) { return a.source_kind < b.source_kind; });
    std::set<std::string> seen;
    for (auto& item : collected) {
        if (seen.insert(normalize_url(item.url)).second) bundle.items.push_back(std::move(item));
    }
    return bundle;
}

}  // namespace sleuth::retrieval
