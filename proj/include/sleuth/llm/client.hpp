#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>

#include "sleuth/common/clock.hpp"
#include "sleuth/common/http.hpp"
#include "sleuth/llm/model.hpp"

namespace sleuth::llm {

struct BackendReply {
    std::string text;
    TokenCounts tokens;
};

/// One provider round-trip, no retries. Throw TransportError for transient
/// failures (network, 429, 5xx), AuthError for credential problems and
/// LlmError for everything permanent.
class ModelBackend {
  public:
    virtual ~ModelBackend() = default;
    virtual BackendReply generate(const std::string& prompt, const ModelConfig& config) = 0;
};

/// Gemini `generateContent` over HTTPS. The key travels in `x-goog-api-key`.
class GeminiBackend final : public ModelBackend {
  public:
    GeminiBackend(HttpClient& http, std::string api_key,
                  std::string endpoint = "https://generativelanguage.googleapis.com/v1beta");
    BackendReply generate(const std::string& prompt, const ModelConfig& config) override;

  private:
    HttpClient& http_;
    std::string api_key_;
    std::string endpoint_;
};

/// Content-addressed completion store: `<dir>/<sha256(prompt)>.json`.
/// Writes are serialized; reads are lock-free file reads.
class RecordingStore {
  public:
    explicit RecordingStore(std::filesystem::path dir);

    void put(const CompletionRecord& record);
    [[nodiscard]] std::optional<CompletionRecord> get(const std::string& prompt_hash) const;
    [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

  private:
    std::filesystem::path dir_;
    std::mutex write_mutex_;
};

std::string prompt_hash(std::string_view prompt);

/// Answers from recordings only. A prompt without a recording is a
/// permanent LlmError (no retries, no network).
class ReplayBackend final : public ModelBackend {
  public:
    explicit ReplayBackend(const std::filesystem::path& dir);
    BackendReply generate(const std::string& prompt, const ModelConfig& config) override;

  private:
    RecordingStore store_;
};

struct RetryPolicy {
    /// Extra attempts after the first; total attempts <= 1 + retry_budget.
    int retry_budget = 3;
    std::chrono::milliseconds base_backoff{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{30'000};
};

struct ClientOptions {
    RetryPolicy retry;
    int max_concurrent_requests = 4;
    /// When set, every successful call is written here for later replay.
    std::optional<std::filesystem::path> record_dir;
};

struct UsageTotals {
    std::int64_t calls = 0;
    std::int64_t attempts = 0;
    TokenCounts tokens;
};

/// The shareable model client: sizing check, per-provider concurrency limit,
/// retry with exponential backoff, token accounting and optional recording.
class ModelClient final : public LanguageModel {
  public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    ModelClient(ModelBackend& backend, ClientOptions options = {}, Sleeper sleeper = {},
                Clock* clock = nullptr);

    std::string complete(const std::string& prompt, const ModelConfig& config) override;

    [[nodiscard]] UsageTotals usage() const;

  private:
    ModelBackend& backend_;
    ClientOptions options_;
    Sleeper sleeper_;
    SystemClock system_clock_;
    Clock* clock_;
    std::counting_semaphore<64> slots_;
    std::unique_ptr<RecordingStore> recorder_;
    mutable std::mutex usage_mutex_;
    UsageTotals usage_;
};

}  // namespace sleuth::llm
