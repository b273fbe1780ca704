#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sleuth/benchmark/benchmark.hpp"
#include "sleuth/llm/client.hpp"
#include "sleuth/retrieval/gather.hpp"
#include "sleuth/service/pipeline.hpp"
#include "sleuth/service/posting.hpp"
#include "sleuth/service/run_store.hpp"

namespace sleuth::service {

/// Deployment configuration. Credentials are never stored here, only the
/// names of the environment variables holding them.
struct AppConfig {
    std::filesystem::path data_dir = "data";
    std::filesystem::path prompt_dir;
    std::map<std::string, std::filesystem::path> corpora;

    llm::ModelConfig model;
    std::string model_endpoint = "https://generativelanguage.googleapis.com/v1beta";
    std::string model_key_env = "GEMINI_API_KEY";
    llm::ClientOptions llm;

    std::string platform_key_env = "YOUTUBE_API_KEY";
    std::string platform_oauth_env = "YOUTUBE_OAUTH_TOKEN";
    std::string search_key_env = "GOOGLE_SEARCH_API_KEY";
    std::string search_engine_env = "GOOGLE_SEARCH_ENGINE_ID";
    std::string factcheck_key_env = "GOOGLE_FACTCHECK_API_KEY";
    bool encyclopedia_enabled = true;

    int per_source_k = retrieval::kDefaultPerSourceK;
    std::optional<std::filesystem::path> cache_dir;
    std::chrono::hours cache_ttl{24 * 7};
    int comment_limit = ingest::kDefaultCommentLimit;
    std::string caption_language = "en";

    PostingPolicy policy;

    std::string host = "127.0.0.1";
    int port = 8080;
};

/// Built-in defaults; the prompt directory points at the shipped templates.
AppConfig default_config();
/// Reads a JSON config file over the defaults. Relative paths are resolved
/// against the file's directory.
AppConfig load_config(const std::filesystem::path& file);
AppConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

enum class ExecutionMode { Live, Record, Replay };

/// Record writes every HTTP exchange and model completion under `dir`
/// (http/, llm/, session.json); replay answers from there only and runs on a
/// simulated clock fixed at the recorded start time.
struct ModeSettings {
    ExecutionMode mode = ExecutionMode::Live;
    std::optional<std::filesystem::path> dir;
    /// Live and record only: use these instead of the network transport and
    /// the Gemini backend. Not owned.
    HttpClient* transport = nullptr;
    llm::ModelBackend* backend = nullptr;
    /// Record only: session start instead of the current time.
    std::optional<Timestamp> started_at;
};

/// Owns every long-lived collaborator, wired according to the config and mode.
class Application {
  public:
    explicit Application(AppConfig config, ModeSettings mode = {});
    ~Application();

    Application(const Application&) = delete;
    Application& operator=(const Application&) = delete;

    [[nodiscard]] const AppConfig& config() const { return config_; }
    [[nodiscard]] Clock& clock() { return *clock_; }
    [[nodiscard]] RunStore& store() { return *store_; }
    [[nodiscard]] Pipeline& pipeline() { return *pipeline_; }
    [[nodiscard]] PostingScheduler& scheduler() { return *scheduler_; }
    [[nodiscard]] llm::ModelClient& model() { return *model_; }
    [[nodiscard]] const bender::PromptTemplates& templates() const { return templates_; }
    [[nodiscard]] std::vector<retrieval::Retriever*> retrievers() const { return retrievers_; }

    /// Options for a run under this config. Throws PreconditionError for a
    /// theme without a configured corpus (pass an empty theme to skip).
    [[nodiscard]] RunOptions run_options(const std::string& theme, bool run_bender) const;
    [[nodiscard]] benchmark::ClaimAssessor assessor();

  private:
    AppConfig config_;
    ModeSettings mode_;
    std::unique_ptr<Clock> clock_;
    std::unique_ptr<HttpClient> live_http_;
    std::unique_ptr<HttpClient> http_;
    std::unique_ptr<llm::ModelBackend> backend_;
    std::unique_ptr<llm::ModelClient> model_;
    std::unique_ptr<ingest::PlatformClient> platform_;
    std::unique_ptr<retrieval::EvidenceCache> cache_;
    std::vector<std::unique_ptr<retrieval::Retriever>> owned_retrievers_;
    std::vector<retrieval::Retriever*> retrievers_;
    bender::PromptTemplates templates_;
    std::unique_ptr<RunStore> store_;
    std::unique_ptr<Pipeline> pipeline_;
    std::unique_ptr<PostingScheduler> scheduler_;
};

}  // namespace sleuth::service
