#include "sleuth/ingest/types.hpp"

namespace sleuth::ingest {

std::string_view to_string(CaptionFormat format) noexcept {
    switch (format) {
        case CaptionFormat::WebVtt: return "WEBVTT";
        case CaptionFormat::Srt: return "SRT";
        case CaptionFormat::PlatformXml: return "PLATFORM_XML";
    }
    return "WEBVTT";
}

std::optional<CaptionFormat> caption_format_from_string(std::string_view name) noexcept {
    if (name == "WEBVTT") return CaptionFormat::WebVtt;
    if (name == "SRT") return CaptionFormat::Srt;
    if (name == "PLATFORM_XML") return CaptionFormat::PlatformXml;
    return std::nullopt;
}

nlohmann::json to_json(const VideoMetadata& m) {
    nlohmann::json j = {
        {"video_id", m.video_id},
        {"title", m.title},
        {"channel_name", m.channel_name},
        {"channel_id", m.channel_id},
        {"published_at", format_iso8601(m.published_at)},
    };
    j["thumbnail_url"] = m.thumbnail_url ? nlohmann::json(*m.thumbnail_url) : nlohmann::json(nullptr);
    return j;
}

VideoMetadata video_metadata_from_json(const nlohmann::json& j) {
    VideoMetadata m;
    m.video_id = j.at("video_id").get<std::string>();
    m.title = j.value("title", "");
    m.channel_name = j.value("channel_name", "");
    m.channel_id = j.value("channel_id", "");
    if (j.contains("thumbnail_url") && j["thumbnail_url"].is_string()) {
        m.thumbnail_url = j["thumbnail_url"].get<std::string>();
    }
    if (auto ts = parse_iso8601(j.value("published_at", ""))) m.published_at = *ts;
    return m;
}

nlohmann::json to_json(const UserComment& c) {
    nlohmann::json j = {
        {"comment_id", c.comment_id},
        {"author", c.author},
        {"text", c.text},
        {"like_count", c.like_count},
    };
    j["reply_to"] = c.reply_to ? nlohmann::json(*c.reply_to) : nlohmann::json(nullptr);
    return j;
}

UserComment user_comment_from_json(const nlohmann::json& j) {
    UserComment c;
    c.comment_id = j.at("comment_id").get<std::string>();
    c.author = j.value("author", "");
    c.text = j.value("text", "");
    c.like_count = j.value("like_count", std::int64_t{0});
    if (j.contains("reply_to") && j["reply_to"].is_string()) c.reply_to = j["reply_to"].get<std::string>();
    return c;
}

}  // namespace sleuth::ingest
