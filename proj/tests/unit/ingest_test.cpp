#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "fakes.hpp"
#include "sleuth/common/errors.hpp"
#include "sleuth/ingest/platform.hpp"
#include "sleuth/ingest/transcript.hpp"

namespace sleuth::ingest {
namespace {

using testing::FakeHttpClient;
using testing::FakeModel;

const char* kVtt = "WEBVTT\n\n00:00:01.000 --> 00:00:03.000\nsugar causes hyperactivity in kids\n";

YouTubeClient client_for(FakeHttpClient& http) { return YouTubeClient(http, {"api-key", "oauth"}); }

TEST(YouTube, MetadataFromDataApi) {
    FakeHttpClient http;
    testing::FakeVideo video;
    video.vtt = kVtt;
    testing::install_fake_web(http, video);
    auto yt = client_for(http);
    const auto m = fetch_video_metadata(video.video_id, yt);
    EXPECT_EQ(m.title, "Ten food myths");
    EXPECT_EQ(m.channel_name, "Kitchen Truths");
    EXPECT_EQ(m.thumbnail_url, "https://i.ytimg.com/vi/vid00000001/hqdefault.jpg");
    EXPECT_EQ(format_iso8601(m.published_at), "2024-03-01T10:00:00Z");
    EXPECT_EQ(http.requests().at(0).headers.at(0).second, "api-key");
}

TEST(YouTube, UnknownVideoIsNotFoundAndEmptyIdIsRejected) {
    FakeHttpClient http;
    http.route_json("GET", "/videos", 200, R"({"items":[]})");
    auto yt = client_for(http);
    EXPECT_THROW(fetch_video_metadata("nope", yt), NotFound);
    EXPECT_THROW(fetch_video_metadata("", yt), PreconditionError);
}

TEST(YouTube, PrefersUploadedTrackInPreferredLanguage) {
    FakeHttpClient http;
    http.route("GET", "type=list", [](const HttpRequest&) {
        return HttpResponse{200,
                            R"(<transcript_list><track lang_code="en" kind="asr" name=""/>)"
                            R"(<track lang_code="de" lang_default="true" name=""/>)"
                            R"(<track lang_code="en-GB" name="Manual"/></transcript_list>)",
                            "text/xml"};
    });
    http.route("GET", "timedtext?v=", [](const HttpRequest&) { return HttpResponse{200, kVtt, "text/vtt"}; });
    auto yt = client_for(http);
    const auto track = fetch_caption_track("v1", yt, "en");
    EXPECT_EQ(track.language, "en-GB");
    EXPECT_FALSE(track.auto_generated);
    EXPECT_FALSE(track.degraded_choice);
    EXPECT_EQ(track.format, CaptionFormat::WebVtt);
    EXPECT_EQ(http.requests().back().url, "https://www.youtube.com/api/timedtext?v=v1&lang=en-GB&name=Manual&fmt=vtt");
}

TEST(YouTube, FallsBackToDefaultTrackAndFlagsIt) {
    FakeHttpClient http;
    http.route("GET", "type=list", [](const HttpRequest&) {
        return HttpResponse{200, R"(<transcript_list><track lang_code="fr"/><track lang_code="de" lang_default="true"/></transcript_list>)", ""};
    });
    http.route("GET", "timedtext?v=", [](const HttpRequest&) { return HttpResponse{200, kVtt, ""}; });
    auto yt = client_for(http);
    const auto track = fetch_caption_track("v1", yt, "en");
    EXPECT_EQ(track.language, "de");
    EXPECT_TRUE(track.degraded_choice);
}

TEST(YouTube, NoTracksMeansNoCaptions) {
    FakeHttpClient http;
    http.route("GET", "type=list", [](const HttpRequest&) { return HttpResponse{200, "<transcript_list/>", ""}; });
    auto yt = client_for(http);
    EXPECT_THROW(fetch_caption_track("v1", yt), NoCaptions);
}

TEST(YouTube, CommentsPageUntilLimitAndKeepReplies) {
    FakeHttpClient http;
    const auto thread = [](const std::string& id, bool with_reply) {
        nlohmann::json t = {{"snippet",
                             {{"topLevelComment",
                               {{"id", id}, {"snippet", {{"authorDisplayName", "a"}, {"textOriginal", "top " + id}, {"likeCount", 2}}}}}}}};
        if (with_reply) {
            t["replies"]["comments"] = {{{"id", id + ".r"}, {"snippet", {{"authorDisplayName", "b"}, {"textOriginal", "reply"}}}}};
        }
        return t;
    };
    http.route("GET", "pageToken=p2", [&](const HttpRequest&) {
        return HttpResponse{200, nlohmann::json{{"items", {thread("c3", false), thread("c4", false)}}}.dump(), ""};
    });
    http.route("GET", "/commentThreads", [&](const HttpRequest&) {
        return HttpResponse{200, nlohmann::json{{"items", {thread("c1", true), thread("c2", false)}}, {"nextPageToken", "p2"}}.dump(), ""};
    });
    auto yt = client_for(http);
    const auto comments = fetch_comments("v1", yt, 3);
    ASSERT_EQ(comments.size(), 4u);
    EXPECT_EQ(comments[1].comment_id, "c1.r");
    EXPECT_EQ(comments[1].reply_to, "c1");
    EXPECT_EQ(comments[3].comment_id, "c3");
    EXPECT_NE(http.requests()[0].url.find("maxResults=3"), std::string::npos);
    EXPECT_NE(http.requests()[1].url.find("maxResults=1"), std::string::npos);

    EXPECT_TRUE(fetch_comments("v1", yt, 0).empty());
    EXPECT_EQ(http.requests().size(), 2u);
    EXPECT_THROW(fetch_comments("v1", yt, -1), PreconditionError);
}

TEST(YouTube, CommentsDisabledAndQuotaAreDistinct) {
    FakeHttpClient http;
    http.route_json("GET", "videoId=off", 403, R"({"error":{"errors":[{"reason":"commentsDisabled"}]}})");
    http.route_json("GET", "videoId=busy", 403, R"({"error":{"errors":[{"reason":"quotaExceeded"}]}})");
    auto yt = client_for(http);
    EXPECT_THROW(fetch_comments("off", yt), CommentsDisabled);
    EXPECT_THROW(fetch_comments("busy", yt), QuotaExceeded);
}

TEST(YouTube, PostingUsesOAuthAndReplyEndpoint) {
    FakeHttpClient http;
    http.route_json("POST", "/comments?part=snippet", 200, R"({"id":"reply-1"})");
    http.route_json("POST", "/commentThreads?part=snippet", 200, R"({"id":"top-1"})");
    auto yt = client_for(http);
    EXPECT_EQ(yt.post_comment("v1", "hello", std::nullopt), "top-1");
    EXPECT_EQ(yt.post_comment("v1", "hi", std::string("c9")), "reply-1");
    const auto reqs = http.requests();
    EXPECT_EQ(reqs[0].headers.at(0).second, "Bearer oauth");
    EXPECT_EQ(nlohmann::json::parse(reqs[1].body)["snippet"]["parentId"], "c9");

    FakeHttpClient rejecting;
    rejecting.route_json("POST", "commentThreads", 400, R"({"error":{"message":"spam"}})");
    auto yt2 = client_for(rejecting);
    try {
        yt2.post_comment("v1", "x", std::nullopt);
        FAIL();
    } catch (const PlatformRejection& e) {
        EXPECT_EQ(e.status(), 400);
        EXPECT_NE(std::string(e.what()).find("spam"), std::string::npos) << e.what();
    }
    YouTubeClient no_token(http, {"key", ""});
    EXPECT_THROW(no_token.post_comment("v1", "x", std::nullopt), AuthError);
}

TEST(Chunking, ReproducesCueTextWithinBudget) {
    std::vector<CaptionCue> cues;
    for (int i = 0; i < 50; ++i) cues.push_back({i * 1000, i * 1000 + 900, "word" + std::to_string(i) + " and more"});
    cues.push_back({60000, 61000, std::string(130, 'x')});
    const auto chunks = chunk_cues(cues, 60, 15);
    std::string joined;
    for (const auto& c : chunks) {
        EXPECT_LE(c.text.size(), 60u);
        EXPECT_LE(c.context.size(), 15u);
        if (!joined.empty()) joined += ' ';
        joined += c.text;
    }
    std::string expected;
    for (const auto& c : cues) expected += (expected.empty() ? "" : " ") + c.text;
    // The 130-char cue has no spaces, so it is cut hard into three pieces.
    EXPECT_EQ(joined, expected.substr(0, expected.size() - 130) + std::string(60, 'x') + ' ' + std::string(60, 'x') +
                          ' ' + std::string(10, 'x'));
    EXPECT_TRUE(chunks.front().context.empty());
    EXPECT_FALSE(chunks[1].context.empty());
}

TEST(Normalize, NoCuesMeansNoModelCall) {
    FakeModel model([](const std::string&) { return "x"; });
    const auto t = normalize_transcript({}, model);
    EXPECT_TRUE(t.text.empty());
    EXPECT_EQ(model.calls(), 0u);
}

TEST(Normalize, JoinsChunksInOrderAndKeepsContextOutOfText) {
    std::vector<CaptionCue> cues = {{0, 1, "first part of the talk"}, {1, 2, "second part of the talk"}};
    FakeModel model(testing::stub_model_reply);
    NormalizeOptions options;
    options.chunk_chars = 25;
    options.overlap_chars = 10;
    const auto t = normalize_transcript(cues, model, options, "en");
    EXPECT_EQ(t.text, "First part of the talk.\n\nSecond part of the talk.");
    EXPECT_EQ(t.source_cue_count, 2u);
    EXPECT_EQ(t.language, "en");
    const auto prompts = model.prompts();
    ASSERT_EQ(prompts.size(), 2u);
    EXPECT_NE(prompts[1].find("<<<CONTEXT\nthe talk\nCONTEXT>>>"), std::string::npos);
}

TEST(Normalize, EmptyModelOutputFallsBackToCueText) {
    std::vector<CaptionCue> cues = {{0, 1, "a"}, {1, 2, "b"}};
    FakeModel model([](const std::string&) { return "   "; });
    EXPECT_EQ(normalize_transcript(cues, model).text, "a b");
}

}  // namespace
}  // namespace sleuth::ingest
