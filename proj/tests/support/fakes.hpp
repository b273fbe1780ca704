#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sleuth/common/http.hpp"
#include "sleuth/ingest/platform.hpp"
#include "sleuth/llm/client.hpp"
#include "sleuth/llm/model.hpp"
#include "sleuth/retrieval/sources.hpp"
#include "sleuth/service/app.hpp"

namespace sleuth::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

using Responder = std::function<std::string(const std::string& prompt)>;

/// LanguageModel answering through a function and capturing every prompt.
class FakeModel final : public llm::LanguageModel {
  public:
    explicit FakeModel(Responder responder) : responder_(std::move(responder)) {}

    std::string complete(const std::string& prompt, const llm::ModelConfig& config) override;

    [[nodiscard]] std::vector<std::string> prompts() const;
    [[nodiscard]] std::vector<llm::ModelConfig> configs() const;
    [[nodiscard]] std::size_t calls() const;

  private:
    Responder responder_;
    mutable std::mutex mutex_;
    std::vector<std::string> prompts_;
    std::vector<llm::ModelConfig> configs_;
};

/// Replies in order; the last reply repeats once the script runs out.
Responder scripted(std::vector<std::string> replies);

class FakeBackend final : public llm::ModelBackend {
  public:
    explicit FakeBackend(Responder responder) : responder_(std::move(responder)) {}
    llm::BackendReply generate(const std::string& prompt, const llm::ModelConfig& config) override;

  private:
    Responder responder_;
};

/// Deterministic stand-in for the model across every pipeline prompt:
/// normalization, extraction, assessment, generation, self-evaluation and
/// improvement. Assessments cite the first evidence URL; drafts cite the
/// first report URL.
std::string stub_model_reply(const std::string& prompt);

/// Routes by method and URL substring; the first matching route answers.
/// Unmatched requests get a 404.
class FakeHttpClient final : public HttpClient {
  public:
    using Handler = std::function<HttpResponse(const HttpRequest&)>;

    void route(std::string method, std::string url_contains, Handler handler);
    void route_json(std::string method, std::string url_contains, int status, std::string body);
    HttpResponse send(const HttpRequest& request) override;

    [[nodiscard]] std::vector<HttpRequest> requests() const;

  private:
    struct Route {
        std::string method;
        std::string contains;
        Handler handler;
    };
    mutable std::mutex mutex_;
    std::vector<Route> routes_;
    std::vector<HttpRequest> requests_;
};

struct FakeVideo {
    std::string video_id = "vid00000001";
    std::string title = "Ten food myths";
    std::string channel = "Kitchen Truths";
    std::string vtt;
    std::vector<std::pair<std::string, std::string>> comments;  // id, text
};

/// Three checkable sentences and two viewer comments.
FakeVideo sample_video();

/// Installs platform, web search, encyclopedia and fact-check routes that
/// answer deterministically from the request URL.
void install_fake_web(FakeHttpClient& http, const FakeVideo& video);

class FakePlatform final : public ingest::PlatformClient {
  public:
    ingest::VideoMetadata metadata;
    std::optional<ingest::CaptionTrack> track;
    std::vector<ingest::UserComment> comment_list;
    bool comments_disabled = false;
    /// Posts whose text contains this substring are rejected with a 400.
    std::optional<std::string> reject_containing;

    struct Posted {
        std::string video_id;
        std::string text;
        std::optional<std::string> parent;
    };

    ingest::VideoMetadata video_metadata(const std::string& video_id) override;
    ingest::CaptionTrack caption_track(const std::string& video_id, const std::string& preferred_language) override;
    std::vector<ingest::UserComment> comments(const std::string& video_id, int limit) override;
    std::string post_comment(const std::string& video_id, const std::string& text,
                             const std::optional<std::string>& parent_comment_id) override;

    [[nodiscard]] std::vector<Posted> posted() const;

  private:
    mutable std::mutex mutex_;
    std::vector<Posted> posted_;
};

class FakeRetriever final : public retrieval::Retriever {
  public:
    using Fn = std::function<std::vector<retrieval::Evidence>(const std::string&, int)>;
    FakeRetriever(retrieval::SourceKind kind, Fn fn) : kind_(kind), fn_(std::move(fn)) {}

    [[nodiscard]] retrieval::SourceKind kind() const override { return kind_; }
    std::vector<retrieval::Evidence> search(const std::string& question, int k) override {
        ++calls;
        return fn_(question, k);
    }

    std::atomic<int> calls{0};

  private:
    retrieval::SourceKind kind_;
    Fn fn_;
};

/// `<fixtures>/<relative>` contents.
std::string fixture(const std::string& relative);

/// Config whose credentials come from SLEUTH_TEST_* variables, with the
/// nutrition fixture corpus and every retriever enabled.
service::AppConfig fake_app_config(const std::filesystem::path& data_dir);

/// Runs the whole pipeline for `video` in record mode against the fake web
/// and the stub model, writing the recording to `record_dir`. Returns the run id.
std::string record_fake_run(const std::filesystem::path& record_dir, const std::filesystem::path& data_dir,
                            const FakeVideo& video);
std::filesystem::path fixture_path(const std::string& relative);

}  // namespace sleuth::testing
