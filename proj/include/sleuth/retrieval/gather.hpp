#pragma once

#include <chrono>
#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "sleuth/claims/claims.hpp"
#include "sleuth/common/clock.hpp"
#include "sleuth/retrieval/sources.hpp"

namespace sleuth::retrieval {

inline constexpr int kDefaultPerSourceK = 3;

/// Disk-backed response cache keyed by (source, question, k), one
/// content-addressed JSON file per key. Concurrent readers, serialized writers.
class EvidenceCache {
  public:
    EvidenceCache(std::filesystem::path dir, std::chrono::milliseconds ttl, Clock& clock);

    [[nodiscard]] std::optional<std::vector<Evidence>> get(SourceKind source, const std::string& question, int k) const;
    void put(SourceKind source, const std::string& question, int k, const std::vector<Evidence>& items);

    static std::string key(SourceKind source, const std::string& question, int k);

  private:
    std::filesystem::path dir_;
    std::chrono::milliseconds ttl_;
    Clock& clock_;
    mutable std::shared_mutex mutex_;
};

/// Spaces calls at least `min_interval` apart across all threads.
class RateLimiter {
  public:
    RateLimiter(std::chrono::milliseconds min_interval, Clock& clock);
    void acquire();

  private:
    std::chrono::milliseconds min_interval_;
    Clock& clock_;
    std::mutex mutex_;
    std::optional<Timestamp> last_slot_;
};

class CachedRetriever final : public Retriever {
  public:
    CachedRetriever(Retriever& inner, EvidenceCache& cache) : inner_(inner), cache_(cache) {}
    [[nodiscard]] SourceKind kind() const override { return inner_.kind(); }
    std::vector<Evidence> search(const std::string& question, int k) override;

  private:
    Retriever& inner_;
    EvidenceCache& cache_;
};

class RateLimitedRetriever final : public Retriever {
  public:
    RateLimitedRetriever(Retriever& inner, RateLimiter& limiter) : inner_(inner), limiter_(limiter) {}
    [[nodiscard]] SourceKind kind() const override { return inner_.kind(); }
    std::vector<Evidence> search(const std::string& question, int k) override {
        limiter_.acquire();
        return inner_.search(question, k);
    }

  private:
    Retriever& inner_;
    RateLimiter& limiter_;
};

/// Queries every retriever concurrently and merges their answers. Items are
/// grouped by source kind, then backend rank; the first occurrence of each
/// normalized URL wins. A failing source is recorded in `retriever_errors`;
/// only when all of them fail does this throw AllRetrieversFailed.
EvidenceBundle gather_evidence(const claims::VerifiableQuestion& question, std::span<Retriever* const> retrievers,
                               int per_source_k = kDefaultPerSourceK);

}  // namespace sleuth::retrieval
