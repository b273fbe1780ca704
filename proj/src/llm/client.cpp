#include "sleuth/llm/client.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <thread>

#include "sleuth/common/errors.hpp"
#include "sleuth/common/hash.hpp"
#include "sleuth/common/text.hpp"

namespace sleuth::llm {

GeminiBackend::GeminiBackend(HttpClient& http, std::string api_key, std::string endpoint)
    : http_(http), api_key_(std::move(api_key)), endpoint_(std::move(endpoint)) {}

BackendReply GeminiBackend::generate(const std::string& prompt, const ModelConfig& config) {
    if (api_key_.empty()) throw AuthError("no API key configured for provider " + config.provider);
    const nlohmann::json body = {
        {"contents", {{{"role", "user"}, {"parts", {{{"text", prompt}}}}}}},
        {"generationConfig", {{"temperature", config.temperature}, {"maxOutputTokens", config.max_output_tokens}}},
    };
    HttpRequest request;
    request.method = "POST";
    request.url = fmt::format("{}/models/{}:generateContent", endpoint_, config.model_name);
    request.headers = {{"x-goog-api-key", api_key_}};
    request.body = body.dump();
    request.content_type = "application/json";

    const HttpResponse response = http_.send(request);
    if (response.status == 401 || response.status == 403) {
        throw AuthError(fmt::format("model provider rejected credentials ({})", response.status));
    }
    if (response.status == 429 || response.status >= 500) {
        throw TransportError(fmt::format("model provider transient status {}", response.status));
    }
    if (response.status != 200) {
        throw LlmError(fmt::format("model provider status {}: {}", response.status,
                                   std::string(utf8_prefix(response.body, 300))));
    }
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(response.body);
    } catch (const nlohmann::json::parse_error& e) {
        throw LlmError(std::string("unparseable provider response: ") + e.what());
    }
    BackendReply reply;
    const auto& candidates = parsed.value("candidates", nlohmann::json::array());
    if (candidates.empty()) throw LlmError("provider returned no candidates (blocked or empty)");
    for (const auto& part : candidates[0].value("content", nlohmann::json::object())
                                .value("parts", nlohmann::json::array())) {
        reply.text += part.value("text", "");
    }
    if (const auto usage = parsed.find("usageMetadata"); usage != parsed.end()) {
        reply.tokens.prompt = usage->value("promptTokenCount", std::int64_t{0});
        reply.tokens.output = usage->value("candidatesTokenCount", std::int64_t{0});
    }
    return reply;
}

std::string prompt_hash(std::string_view prompt) { return sha256_hex(prompt); }

RecordingStore::RecordingStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

void RecordingStore::put(const CompletionRecord& record) {
    std::lock_guard lock(write_mutex_);
    write_file_atomic(dir_ / (record.prompt_hash + ".json"), to_json(record).dump(2) + "\n");
}

std::optional<CompletionRecord> RecordingStore::get(const std::string& hash) const {
    const auto path = dir_ / (hash + ".json");
    if (!std::filesystem::exists(path)) return std::nullopt;
    return completion_record_from_json(nlohmann::json::parse(read_file(path)));
}

ReplayBackend::ReplayBackend(const std::filesystem::path& dir) : store_(dir) {}

BackendReply ReplayBackend::generate(const std::string& prompt, const ModelConfig&) {
    const std::string hash = prompt_hash(prompt);
    auto record = store_.get(hash);
    if (!record) throw LlmError("no recorded completion for prompt " + hash.substr(0, 12));
    return {record->response, record->tokens};
}

ModelClient::ModelClient(ModelBackend& backend, ClientOptions options, Sleeper sleeper, Clock* clock)
    : backend_(backend),
      options_(std::move(options)),
      sleeper_(std::move(sleeper)),
      clock_(clock ? clock : &system_clock_),
      slots_(std::clamp(options_.max_concurrent_requests, 1, 64)) {
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (options_.record_dir) recorder_ = std::make_unique<RecordingStore>(*options_.record_dir);
}

std::string ModelClient::complete(const std::string& prompt, const ModelConfig& config) {
    if (prompt.empty()) throw PreconditionError("prompt must be non-empty");
    config.validate();
    if (prompt.size() > config.context_budget_chars) {
        throw SizingError(fmt::format("prompt of {} chars exceeds context budget of {}", prompt.size(),
                                      config.context_budget_chars));
    }

    std::chrono::milliseconds backoff = options_.retry.base_backoff;
    const int max_attempts = 1 + std::max(0, options_.retry.retry_budget);
    for (int attempt = 1;; ++attempt) {
        const auto started = std::chrono::steady_clock::now();
        try {
            slots_.acquire();
            BackendReply reply;
            try {
                reply = backend_.generate(prompt, config);
            } catch (...) {
                slots_.release();
                throw;
            }
            slots_.release();
            const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - started);
            {
                std::lock_guard lock(usage_mutex_);
                ++usage_.calls;
                usage_.attempts += attempt;
                usage_.tokens.prompt += reply.tokens.prompt;
                usage_.tokens.output += reply.tokens.output;
            }
            if (recorder_) {
                recorder_->put(CompletionRecord{prompt_hash(prompt), reply.text, latency.count(), reply.tokens,
                                                clock_->now()});
            }
            return reply.text;
        } catch (const TransportError& e) {
            if (attempt >= max_attempts) {
                std::lock_guard lock(usage_mutex_);
                usage_.attempts += attempt;
                throw LlmError(fmt::format("model call failed after {} attempts: {}", attempt, e.what()));
            }
            spdlog::warn("model call attempt {} failed ({}); retrying in {} ms", attempt, e.what(), backoff.count());
            sleeper_(backoff);
            backoff = std::min(options_.retry.max_backoff,
                               std::chrono::milliseconds(static_cast<std::int64_t>(
                                   static_cast<double>(backoff.count()) * options_.retry.multiplier)));
        }
    }
}

UsageTotals ModelClient::usage() const {
    std::lock_guard lock(usage_mutex_);
    return usage_;
}

}  // namespace sleuth::llm
