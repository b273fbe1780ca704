#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <nlohmann/json.hpp>

#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"
#include "sleuth/common/url.hpp"
#include "sleuth/ingest/captions.hpp"
#include "sleuth/ingest/platform.hpp"

namespace sleuth::ingest {
namespace {

std::string error_reason(const nlohmann::json& body) {
    try {
        const auto& errors = body.at("error").at("errors");
        if (!errors.empty()) return errors[0].value("reason", "");
    } catch (const nlohmann::json::exception&) {
    }
    return {};
}

std::string error_message(const std::string& raw) {
    try {
        return nlohmann::json::parse(raw).at("error").value("message", raw);
    } catch (const nlohmann::json::exception&) {
        return std::string(utf8_prefix(raw, 200));
    }
}

void raise_for_status(const HttpResponse& response, std::string_view what) {
    if (response.status >= 200 && response.status < 300) return;
    nlohmann::json body = nlohmann::json::parse(response.body, nullptr, false);
    const std::string reason = body.is_discarded() ? "" : error_reason(body);
    if (reason == "commentsDisabled") throw CommentsDisabled(fmt::format("comments are disabled ({})", what));
    if (reason == "quotaExceeded" || reason == "rateLimitExceeded" || response.status == 429) {
        throw QuotaExceeded(fmt::format("platform quota exceeded ({})", what));
    }
    if (response.status == 401 || response.status == 403) {
        throw AuthError(fmt::format("platform rejected credentials for {} ({})", what, response.status));
    }
    if (response.status == 404) throw NotFound(fmt::format("{} not found", what));
    if (response.status >= 500) throw TransportError(fmt::format("platform error {} for {}", response.status, what));
    throw TransportError(fmt::format("unexpected status {} for {}: {}", response.status, what,
                                     error_message(response.body)));
}

nlohmann::json parse_body(const HttpResponse& response, std::string_view what) {
    try {
        return nlohmann::json::parse(response.body);
    } catch (const nlohmann::json::parse_error&) {
        throw TransportError(fmt::format("unparseable platform response for {}", what));
    }
}

struct TrackListing {
    std::string lang_code;
    std::string name;
    std::string kind;
    bool is_default = false;
};

std::string attr(std::string_view tag, std::string_view name) {
    const std::string needle = std::string(" ") + std::string(name) + "=\"";
    const auto pos = tag.find(needle);
    if (pos == std::string_view::npos) return {};
    const auto start = pos + needle.size();
    const auto end = tag.find('"', start);
    return end == std::string_view::npos ? std::string{} : decode_entities(tag.substr(start, end - start));
}

std::vector<TrackListing> parse_track_list(std::string_view xml) {
    std::vector<TrackListing> tracks;
    std::size_t pos = 0;
    while ((pos = xml.find("<track", pos)) != std::string_view::npos) {
        const auto end = xml.find('>', pos);
        if (end == std::string_view::npos) break;
        const std::string_view tag = xml.substr(pos, end - pos + 1);
        TrackListing t;
        t.lang_code = attr(tag, "lang_code");
        t.name = attr(tag, "name");
        t.kind = attr(tag, "kind");
        t.is_default = attr(tag, "lang_default") == "true";
        if (!t.lang_code.empty()) tracks.push_back(std::move(t));
        pos = end;
    }
    return tracks;
}

bool language_matches(std::string_view code, std::string_view preferred) {
    const std::string a = ascii_lower(code);
    const std::string b = ascii_lower(preferred);
    if (a == b) return true;
    return a.substr(0, a.find('-')) == b.substr(0, b.find('-'));
}

std::optional<std::string> pick_thumbnail(const nlohmann::json& snippet) {
    const auto thumbs = snippet.find("thumbnails");
    if (thumbs == snippet.end() || !thumbs->is_object()) return std::nullopt;
    for (const char* size : {"high", "medium", "standard", "maxres", "default"}) {
        const auto it = thumbs->find(size);
        if (it != thumbs->end() && it->contains("url")) {
            std::string url = it->at("url").get<std::string>();
            if (is_valid_url(url)) return url;
        }
    }
    return std::nullopt;
}

UserComment comment_from_snippet(const nlohmann::json& comment, std::optional<std::string> reply_to) {
    const auto& snippet = comment.at("snippet");
    UserComment c;
    c.comment_id = comment.at("id").get<std::string>();
    c.author = snippet.value("authorDisplayName", "");
    c.text = snippet.value("textOriginal", snippet.value("textDisplay", ""));
    c.like_count = snippet.value("likeCount", std::int64_t{0});
    c.reply_to = std::move(reply_to);
    return c;
}

}  // namespace

YouTubeClient::YouTubeClient(HttpClient& http, YouTubeCredentials credentials, YouTubeEndpoints endpoints)
    : http_(http), credentials_(std::move(credentials)), endpoints_(std::move(endpoints)) {}

HttpResponse YouTubeClient::get_data_api(const std::string& path_and_query) {
    if (credentials_.api_key.empty()) throw AuthError("no platform API key configured");
    HttpRequest request;
    request.url = endpoints_.data_api + path_and_query;
    request.headers = {{"x-goog-api-key", credentials_.api_key}};
    return http_.send(request);
}

VideoMetadata YouTubeClient::video_metadata(const std::string& video_id) {
    const auto response = get_data_api("/videos?part=snippet&id=" + url_encode(video_id));
    raise_for_status(response, "video " + video_id);
    const auto body = parse_body(response, "video " + video_id);
    const auto& items = body.value("items", nlohmann::json::array());
    if (items.empty()) throw NotFound("video " + video_id + " not found");
    const auto& snippet = items[0].at("snippet");

    VideoMetadata m;
    m.video_id = items[0].value("id", video_id);
    m.title = snippet.value("title", "");
    m.channel_name = snippet.value("channelTitle", "");
    m.channel_id = snippet.value("channelId", "");
    m.thumbnail_url = pick_thumbnail(snippet);
    if (auto ts = parse_iso8601(snippet.value("publishedAt", ""))) m.published_at = *ts;
    return m;
}

CaptionTrack YouTubeClient::caption_track(const std::string& video_id, const std::string& preferred_language) {
    HttpRequest list_request;
    list_request.url = endpoints_.timed_text + "?type=list&v=" + url_encode(video_id);
    const auto listing = http_.send(list_request);
    if (listing.status == 404) throw NoCaptions("video " + video_id + " has no caption tracks");
    raise_for_status(listing, "caption list for " + video_id);

    const auto tracks = parse_track_list(listing.body);
    if (tracks.empty()) throw NoCaptions("video " + video_id + " has no caption tracks");

    // Uploaded captions beat speech recognition within the same language.
    const TrackListing* chosen = nullptr;
    for (const bool want_asr : {false, true}) {
        for (const auto& t : tracks) {
            if ((t.kind == "asr") == want_asr && language_matches(t.lang_code, preferred_language)) {
                chosen = &t;
                break;
            }
        }
        if (chosen) break;
    }
    const bool degraded = chosen == nullptr;
    if (!chosen) {
        for (const auto& t : tracks) {
            if (t.is_default) {
                chosen = &t;
                break;
            }
        }
    }
    if (!chosen) chosen = &tracks.front();
    if (degraded) {
        spdlog::warn("preferred caption language '{}' unavailable for {}; using '{}'", preferred_language, video_id,
                     chosen->lang_code);
    }

    HttpRequest track_request;
    track_request.url = endpoints_.timed_text + "?v=" + url_encode(video_id) + "&lang=" + url_encode(chosen->lang_code);
    if (!chosen->name.empty()) track_request.url += "&name=" + url_encode(chosen->name);
    if (chosen->kind == "asr") track_request.url += "&kind=asr";
    track_request.url += "&fmt=vtt";
    const auto track = http_.send(track_request);
    raise_for_status(track, "caption track for " + video_id);
    if (trim(track.body).empty()) throw NoCaptions("caption track for " + video_id + " is empty");

    CaptionTrack out;
    out.raw = track.body;
    out.format = detect_caption_format(track.body);
    out.language = chosen->lang_code;
    out.degraded_choice = degraded;
    out.auto_generated = chosen->kind == "asr";
    return out;
}

std::vector<UserComment> YouTubeClient::comments(const std::string& video_id, int limit) {
    std::vector<UserComment> out;
    int threads = 0;
    std::string page_token;
    while (threads < limit) {
        const int page_size = std::min(100, limit - threads);
        std::string query = fmt::format("/commentThreads?part=snippet,replies&videoId={}&maxResults={}"
                                        "&order=relevance&textFormat=plainText",
                                        url_encode(video_id), page_size);
        if (!page_token.empty()) query += "&pageToken=" + url_encode(page_token);
        const auto response = get_data_api(query);
        raise_for_status(response, "comments for " + video_id);
        const auto body = parse_body(response, "comments for " + video_id);

        for (const auto& thread : body.value("items", nlohmann::json::array())) {
            if (threads >= limit) break;
            const auto& top = thread.at("snippet").at("topLevelComment");
            UserComment parent = comment_from_snippet(top, std::nullopt);
            const std::string parent_id = parent.comment_id;
            out.push_back(std::move(parent));
            ++threads;
            if (const auto replies = thread.find("replies"); replies != thread.end()) {
                for (const auto& reply : replies->value("comments", nlohmann::json::array())) {
                    UserComment r = comment_from_snippet(reply, parent_id);
                    if (r.comment_id != parent_id) out.push_back(std::move(r));
                }
            }
        }
        page_token = body.value("nextPageToken", "");
        if (page_token.empty()) break;
    }
    return out;
}

std::string YouTubeClient::post_comment(const std::string& video_id, const std::string& text,
                                        const std::optional<std::string>& parent_comment_id) {
    if (credentials_.oauth_token.empty()) throw AuthError("posting requires an OAuth token");
    HttpRequest request;
    request.method = "POST";
    request.content_type = "application/json";
    request.headers = {{"Authorization", "Bearer " + credentials_.oauth_token}};
    if (parent_comment_id) {
        request.url = endpoints_.data_api + "/comments?part=snippet";
        request.body = nlohmann::json{{"snippet", {{"parentId", *parent_comment_id}, {"textOriginal", text}}}}.dump();
    } else {
        request.url = endpoints_.data_api + "/commentThreads?part=snippet";
        request.body =
            nlohmann::json{{"snippet", {{"videoId", video_id}, {"topLevelComment", {{"snippet", {{"textOriginal", text}}}}}}}}
                .dump();
    }
    const auto response = http_.send(request);
    if (response.status == 401) throw AuthError("platform rejected posting credentials");
    if (response.status == 400 || response.status == 403) {
        throw PlatformRejection(response.status, error_message(response.body));
    }
    raise_for_status(response, "comment post on " + video_id);
    return parse_body(response, "comment post").at("id").get<std::string>();
}

VideoMetadata fetch_video_metadata(std::string_view video_id, PlatformClient& client) {
    if (video_id.empty()) throw PreconditionError("video_id must be non-empty");
    VideoMetadata m = client.video_metadata(std::string(video_id));
    if (m.video_id.empty()) m.video_id = std::string(video_id);
    if (m.thumbnail_url && !is_valid_url(*m.thumbnail_url)) m.thumbnail_url.reset();
    return m;
}

CaptionTrack fetch_caption_track(std::string_view video_id, PlatformClient& client,
                                 std::string_view preferred_language) {
    if (video_id.empty()) throw PreconditionError("video_id must be non-empty");
    return client.caption_track(std::string(video_id), std::string(preferred_language));
}

std::vector<UserComment> fetch_comments(std::string_view video_id, PlatformClient& client, int limit) {
    if (limit < 0) throw PreconditionError("comment limit must be >= 0");
    if (video_id.empty()) throw PreconditionError("video_id must be non-empty");
    if (limit == 0) return {};
    return client.comments(std::string(video_id), limit);
}

}  // namespace sleuth::ingest
