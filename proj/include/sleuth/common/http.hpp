#pragma once

#include <chrono>
#include <filesystem>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace sleuth {

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

struct HttpRequest {
    std::string method = "GET";
    std::string url;
    HttpHeaders headers;
    std::string body;
    std::string content_type;
};

struct HttpResponse {
    int status = 0;
    std::string body;
    std::string content_type;
};

/// Blocking request/response transport. Implementations must be safe to
/// call from several threads at once.
class HttpClient {
  public:
    virtual ~HttpClient() = default;
    virtual HttpResponse send(const HttpRequest& request) = 0;
};

/// HTTPS/HTTP over cpp-httplib. Network failures raise TransportError;
/// HTTP error statuses are returned to the caller untouched.
class LiveHttpClient final : public HttpClient {
  public:
    explicit LiveHttpClient(std::chrono::seconds timeout = std::chrono::seconds(30));
    HttpResponse send(const HttpRequest& request) override;

  private:
    std::chrono::seconds timeout_;
};

/// Recording key: sha256 over method, URL and body. Headers are excluded so
/// credentials never influence (or leak into) fixtures.
std::string fixture_key(const HttpRequest& request);

/// Tees every exchange of `inner` into `<dir>/<key>.meta.json` plus the raw
/// response bytes in `<dir>/<key>.body`.
class RecordingHttpClient final : public HttpClient {
  public:
    RecordingHttpClient(HttpClient& inner, std::filesystem::path dir);
    HttpResponse send(const HttpRequest& request) override;

  private:
    HttpClient& inner_;
    std::filesystem::path dir_;
    std::mutex write_mutex_;
};

/// Serves responses captured by RecordingHttpClient; never touches the network.
/// A request without a recording raises TransportError.
class ReplayHttpClient final : public HttpClient {
  public:
    explicit ReplayHttpClient(std::filesystem::path dir);
    HttpResponse send(const HttpRequest& request) override;

  private:
    std::filesystem::path dir_;
};

}  // namespace sleuth
