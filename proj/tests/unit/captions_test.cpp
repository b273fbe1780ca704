#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "fakes.hpp"
#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"
#include "sleuth/ingest/captions.hpp"

namespace sleuth::ingest {
namespace {

CaptionFormat format_for(const std::filesystem::path& file) {
    const auto ext = file.extension().string();
    if (ext == ".vtt") return CaptionFormat::WebVtt;
    if (ext == ".srt") return CaptionFormat::Srt;
    return CaptionFormat::PlatformXml;
}

std::vector<std::filesystem::path> golden_tracks() {
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(testing::fixture_path("captions"))) {
        if (entry.path().string().ends_with(".expected.json")) continue;
        out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

TEST(CaptionGolden, EveryTrackMatchesItsHandWrittenExpectation) {
    const auto tracks = golden_tracks();
    ASSERT_EQ(tracks.size(), 20u);
    for (const auto& track : tracks) {
        SCOPED_TRACE(track.filename().string());
        const std::string raw = read_file(track);
        auto expected_path = track;
        expected_path.replace_extension(".expected.json");
        const auto expected = nlohmann::json::parse(read_file(expected_path));
        if (expected.contains("error")) {
            try {
                parse_caption_track(raw, format_for(track));
                ADD_FAILURE() << "expected MalformedTrack";
            } catch (const MalformedTrack& e) {
                EXPECT_EQ(e.line(), expected["error"]["line"].get<std::size_t>()) << e.what();
                EXPECT_EQ(e.offset(), expected["error"]["offset"].get<std::size_t>()) << e.what();
            }
            continue;
        }
        const auto cues = parse_caption_track(raw, format_for(track));
        EXPECT_EQ(serialize_cues(cues), expected["cues"].dump());
        EXPECT_EQ(serialize_cues(parse_caption_track(raw, format_for(track))), serialize_cues(cues));
    }
}

TEST(Captions, DetectsFormats) {
    EXPECT_EQ(detect_caption_format("\xEF\xBB\xBFWEBVTT\n\n"), CaptionFormat::WebVtt);
    EXPECT_EQ(detect_caption_format("  <transcript></transcript>"), CaptionFormat::PlatformXml);
    EXPECT_EQ(detect_caption_format("1\n00:00:01,000 --> 00:00:02,000\nx\n"), CaptionFormat::Srt);
}

TEST(Captions, EmptyTrackHasNoCues) {
    EXPECT_TRUE(parse_caption_track("WEBVTT\n", CaptionFormat::WebVtt).empty());
    EXPECT_TRUE(parse_caption_track("", CaptionFormat::Srt).empty());
    EXPECT_TRUE(parse_caption_track("<transcript></transcript>", CaptionFormat::PlatformXml).empty());
}

TEST(Captions, OutputIsSortedWithPositiveDurations) {
    const auto cues = parse_caption_track(
        "WEBVTT\n\n00:00:09.000 --> 00:00:10.000\nc\n\n00:00:01.000 --> 00:00:02.000\na\n\n"
        "00:00:05.000 --> 00:00:06.000\nb\n",
        CaptionFormat::WebVtt);
    ASSERT_EQ(cues.size(), 3u);
    for (std::size_t i = 0; i < cues.size(); ++i) {
        EXPECT_LT(cues[i].start_ms, cues[i].end_ms);
        if (i > 0) EXPECT_LE(cues[i - 1].start_ms, cues[i].start_ms);
    }
    EXPECT_EQ(cues.front().text, "a");
}

TEST(Captions, MarkupAndEntities) {
    EXPECT_EQ(strip_caption_markup("<b>a</b> {\\i1}b &amp; 1 < 2"), "a b & 1 < 2");
    EXPECT_EQ(decode_entities("&#39;&#x263A;&quot;&unknown;&"), "'\xE2\x98\xBA\"&unknown;&");
}

TEST(Captions, CanonicalFormRoundTrips) {
    const std::vector<CaptionCue> cues = {{0, 10, "a \"quoted\" line"}, {10, 25, "ünïcode"}};
    EXPECT_EQ(deserialize_cues(serialize_cues(cues)), cues);
}

}  // namespace
}  // namespace sleuth::ingest
