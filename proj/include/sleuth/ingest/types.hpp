#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sleuth/common/clock.hpp"

namespace sleuth::ingest {

struct VideoMetadata {
    std::string video_id;
    std::string title;
    std::string channel_name;
    std::string channel_id;
    std::optional<std::string> thumbnail_url;
    Timestamp published_at{};

    bool operator==(const VideoMetadata&) const = default;
};

struct CaptionCue {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    std::string text;

    bool operator==(const CaptionCue&) const = default;
};

enum class CaptionFormat { WebVtt, Srt, PlatformXml };

std::string_view to_string(CaptionFormat format) noexcept;
std::optional<CaptionFormat> caption_format_from_string(std::string_view name) noexcept;

struct CaptionTrack {
    std::string raw;
    CaptionFormat format = CaptionFormat::WebVtt;
    std::string language;
    /// Preferred language was unavailable and the default track was used.
    bool degraded_choice = false;
    /// Speech-recognition captions rather than uploaded ones.
    bool auto_generated = false;
};

struct Transcript {
    std::string text;
    std::size_t source_cue_count = 0;
    std::string language = "und";

    bool operator==(const Transcript&) const = default;
};

struct UserComment {
    std::string comment_id;
    std::string author;
    std::string text;
    std::int64_t like_count = 0;
    std::optional<std::string> reply_to;

    bool operator==(const UserComment&) const = default;
};

nlohmann::json to_json(const VideoMetadata& m);
VideoMetadata video_metadata_from_json(const nlohmann::json& j);
nlohmann::json to_json(const UserComment& c);
UserComment user_comment_from_json(const nlohmann::json& j);

}  // namespace sleuth::ingest
