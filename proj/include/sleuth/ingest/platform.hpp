#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sleuth/common/http.hpp"
#include "sleuth/ingest/types.hpp"

namespace sleuth::ingest {

inline constexpr int kDefaultCommentLimit = 50;

/// Video platform data source. Implementations must be thread-safe: the
/// pipeline fetches metadata, captions and comments concurrently.
class PlatformClient {
  public:
    virtual ~PlatformClient() = default;

    virtual VideoMetadata video_metadata(const std::string& video_id) = 0;
    virtual CaptionTrack caption_track(const std::string& video_id, const std::string& preferred_language) = 0;
    virtual std::vector<UserComment> comments(const std::string& video_id, int limit) = 0;
    /// Returns the platform's id for the new comment.
    virtual std::string post_comment(const std::string& video_id, const std::string& text,
                                     const std::optional<std::string>& parent_comment_id) = 0;
};

struct YouTubeCredentials {
    std::string api_key;
    /// OAuth bearer token; only needed for posting.
    std::string oauth_token;
};

struct YouTubeEndpoints {
    std::string data_api = "https://www.googleapis.com/youtube/v3";
    std::string timed_text = "https://www.youtube.com/api/timedtext";
};

class YouTubeClient final : public PlatformClient {
  public:
    YouTubeClient(HttpClient& http, YouTubeCredentials credentials, YouTubeEndpoints endpoints = {});

    VideoMetadata video_metadata(const std::string& video_id) override;
    CaptionTrack caption_track(const std::string& video_id, const std::string& preferred_language) override;
    std::vector<UserComment> comments(const std::string& video_id, int limit) override;
    std::string post_comment(const std::string& video_id, const std::string& text,
                             const std::optional<std::string>& parent_comment_id) override;

  private:
    HttpResponse get_data_api(const std::string& path_and_query);

    HttpClient& http_;
    YouTubeCredentials credentials_;
    YouTubeEndpoints endpoints_;
};

/// Precondition-checked entry points used by the pipeline.
VideoMetadata fetch_video_metadata(std::string_view video_id, PlatformClient& client);
CaptionTrack fetch_caption_track(std::string_view video_id, PlatformClient& client,
                                 std::string_view preferred_language = "en");
/// `limit == 0` returns immediately without touching the client.
std::vector<UserComment> fetch_comments(std::string_view video_id, PlatformClient& client,
                                        int limit = kDefaultCommentLimit);

}  // namespace sleuth::ingest
