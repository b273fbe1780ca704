#include "sleuth/common/http.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sleuth/common/errors.hpp"
#include "sleuth/common/hash.hpp"
#include "sleuth/common/text.hpp"
#include "sleuth/common/url.hpp"

namespace sleuth {

LiveHttpClient::LiveHttpClient(std::chrono::seconds timeout) : timeout_(timeout) {}

HttpResponse LiveHttpClient::send(const HttpRequest& request) {
    const auto url = parse_url(request.url);
    if (!url) throw TransportError("invalid request URL: " + request.url);

    std::string base = url->scheme + "://" + url->host;
    if (!url->port.empty()) base += ":" + url->port;
    std::string target = url->path.empty() ? "/" : url->path;
    if (!url->query.empty()) target += "?" + url->query;

    httplib::Client client(base);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    client.set_follow_location(true);

    httplib::Headers headers;
    for (const auto& [name, value] : request.headers) headers.emplace(name, value);

    httplib::Result result;
    if (request.method == "GET") {
        result = client.Get(target, headers);
    } else if (request.method == "POST") {
        result = client.Post(target, headers, request.body,
                             request.content_type.empty() ? "application/json" : request.content_type);
    } else {
        throw TransportError("unsupported HTTP method " + request.method);
    }
    if (!result) {
        throw TransportError("request to " + url->host + " failed: " + httplib::to_string(result.error()));
    }
    HttpResponse response;
    response.status = result->status;
    response.body = result->body;
    response.content_type = result->get_header_value("Content-Type");
    return response;
}

std::string fixture_key(const HttpRequest& request) {
    return sha256_hex(request.method + "\n" + request.url + "\n" + request.body);
}

RecordingHttpClient::RecordingHttpClient(HttpClient& inner, std::filesystem::path dir)
    : inner_(inner), dir_(std::move(dir)) {}

HttpResponse RecordingHttpClient::send(const HttpRequest& request) {
    HttpResponse response = inner_.send(request);
    const std::string key = fixture_key(request);
    const nlohmann::json meta = {
        {"method", request.method},
        {"url", request.url},
        {"request_body", request.body},
        {"status", response.status},
        {"content_type", response.content_type},
    };
    std::lock_guard lock(write_mutex_);
    write_file_atomic(dir_ / (key + ".body"), response.body);
    write_file_atomic(dir_ / (key + ".meta.json"), meta.dump(2) + "\n");
    return response;
}

ReplayHttpClient::ReplayHttpClient(std::filesystem::path dir) : dir_(std::move(dir)) {}

HttpResponse ReplayHttpClient::send(const HttpRequest& request) {
    const std::string key = fixture_key(request);
    const auto meta_path = dir_ / (key + ".meta.json");
    if (!std::filesystem::exists(meta_path)) {
        throw TransportError("no recorded response for " + request.method + " " + request.url);
    }
    const auto meta = nlohmann::json::parse(read_file(meta_path));
    HttpResponse response;
    response.status = meta.at("status").get<int>();
    response.content_type = meta.value("content_type", "");
    response.body = read_file(dir_ / (key + ".body"));
    return response;
}

}  // namespace sleuth
