#include <gtest/gtest.h>

#include "fakes.hpp"
#include "sleuth/common/errors.hpp"
#include "sleuth/common/hash.hpp"
#include "sleuth/common/url.hpp"
#include "sleuth/retrieval/evidence.hpp"
#include "sleuth/service/pipeline.hpp"

namespace sleuth::service {
namespace {

const char* kVtt =
    "WEBVTT\n\n"
    "00:00:01.000 --> 00:00:04.000\nsugar makes children hyperactive within minutes.\n\n"
    "00:00:04.000 --> 00:00:08.000\neggs raise your cholesterol more than anything else.\n\n"
    "00:00:08.000 --> 00:00:12.000\nand fasting burns twice the fat of normal diets.\n";

struct Harness {
    testing::TempDir dir;
    SimulatedClock clock{*parse_iso8601("2024-06-01T08:00:00Z")};
    testing::FakePlatform platform;
    testing::FakeModel model{testing::stub_model_reply};
    testing::FakeRetriever web{retrieval::SourceKind::WebSearch, [](const std::string& q, int) {
                                   return std::vector<retrieval::Evidence>{*retrieval::make_evidence(
                                       "https://news.example.com/" + sha256_hex(q).substr(0, 8), "Coverage of " + q,
                                       retrieval::SourceKind::WebSearch)};
                               }};
    RunStore store{dir.path(), clock};
    bender::PromptTemplates templates = bender::PromptTemplates::load(SLEUTH_PROMPT_DIR);
    Pipeline pipeline{store, {platform, model, {&web}, templates}};

    Harness() {
        platform.metadata = {"vid1", "Food myths", "Chan", "UC1", std::nullopt, clock.now()};
        platform.track = ingest::CaptionTrack{kVtt, ingest::CaptionFormat::WebVtt, "en", false, true};
        platform.comment_list = {{"c1", "@amy", "Is the sugar thing real?", 3, std::nullopt}};
    }

    RunOptions options() const {
        RunOptions o;
        o.theme = "nutrition";
        o.corpus_dir = testing::fixture_path("corpora/nutrition");
        o.prompt = bender::recommended_config(templates);
        return o;
    }
};

TEST(Pipeline, HappyPathProducesReportAndImprovedDraft) {
    Harness h;
    const auto run = h.pipeline.run_pipeline("vid1", h.options());
    ASSERT_EQ(run.status, RunStatus::CommentReady) << run.error.value_or("");
    for (const char* name : {"options.json", "metadata.json", "comments.json", "captions.raw", "cues.json",
                             "transcript.txt", "claims.json", "evidence.json", "report.json", "report.md",
                             "report.txt"}) {
        EXPECT_TRUE(h.store.read_artifact(run.run_id, name).has_value()) << name;
    }
    const auto transcript = *h.store.read_artifact(run.run_id, "transcript.txt");
    EXPECT_EQ(transcript.rfind("Sugar makes children hyperactive", 0), 0u);
    const auto claims = nlohmann::json::parse(*h.store.read_artifact(run.run_id, "claims.json"));
    EXPECT_EQ(claims["claims"].size(), 3u);
    EXPECT_EQ(h.web.calls, 3);

    const auto drafts = h.store.drafts_for(run.run_id);
    ASSERT_EQ(drafts.size(), 1u);
    const auto& d = drafts[0];
    EXPECT_EQ(d.history.size(), 2u);
    EXPECT_EQ(d.evaluations.size(), 1u);
    EXPECT_EQ(d.draft.generation, 1);
    EXPECT_NE(d.draft.text.find("Thanks for reading"), std::string::npos);
    EXPECT_EQ(d.label(), "General comment");
    EXPECT_EQ(verify_event_log(h.store.run_dir(run.run_id) / "events.jsonl"), RunStatus::CommentReady);
    EXPECT_EQ(h.store.get_run(run.run_id).details["caption"]["auto_generated"], true);
}

TEST(Pipeline, NoCaptionsFailsAtIngest) {
    Harness h;
    h.platform.track.reset();
    const auto run = h.pipeline.run_pipeline("vid1", h.options());
    EXPECT_EQ(run.status, RunStatus::Failed);
    EXPECT_EQ(run.failed_stage, "ingest");
    EXPECT_EQ(run.error, "NoCaptions");
    EXPECT_FALSE(h.store.read_artifact(run.run_id, "transcript.txt").has_value());
    EXPECT_EQ(h.model.calls(), 0u);
}

TEST(Pipeline, CommentsDisabledIsNotFatal) {
    Harness h;
    h.platform.comments_disabled = true;
    const auto run = h.pipeline.run_pipeline("vid1", h.options());
    ASSERT_EQ(run.status, RunStatus::CommentReady);
    EXPECT_EQ(run.details["comments_disabled"], true);
    EXPECT_EQ(*h.store.read_artifact(run.run_id, "comments.json"), "[]\n");
}

TEST(Pipeline, RetrieverOutageLeavesClaimsUnsure) {
    Harness h;
    testing::FakeRetriever broken{retrieval::SourceKind::WebSearch, [](const std::string&, int)
                                      -> std::vector<retrieval::Evidence> { throw TransportError("down"); }};
    Pipeline pipeline{h.store, {h.platform, h.model, {&broken}, h.templates}};
    auto options = h.options();
    options.run_bender = false;
    const auto run = pipeline.run_pipeline("vid1", options);
    ASSERT_EQ(run.status, RunStatus::ReportReady);
    const auto report = nlohmann::json::parse(*h.store.read_artifact(run.run_id, "report.json"));
    for (const auto& a : report["assessments"]) EXPECT_EQ(a["verdict"], "UNSURE");
    const auto md = *h.store.read_artifact(run.run_id, "report.md");
    EXPECT_NE(md.find("_No checkable claims could be verified for this video._"), std::string::npos);
}

TEST(Pipeline, RegenerateRepliesToAComment) {
    Harness h;
    auto options = h.options();
    options.run_bender = false;
    const auto run = h.pipeline.run_pipeline("vid1", options);
    ASSERT_EQ(run.status, RunStatus::ReportReady);
    const auto draft = h.pipeline.regenerate(run.run_id, std::string("c1"), h.options());
    EXPECT_EQ(draft.label(), "Reply to user");
    EXPECT_EQ(draft.draft.target_comment_id, "c1");
    EXPECT_EQ(h.store.get_run(run.run_id).status, RunStatus::CommentReady);
    EXPECT_THROW(h.pipeline.regenerate(run.run_id, std::string("nope"), h.options()), NotFound);
    const auto second = h.pipeline.regenerate(run.run_id, std::nullopt, h.options());
    EXPECT_EQ(h.store.drafts_for(run.run_id).size(), 2u);
    EXPECT_EQ(second.label(), "General comment");
}

TEST(Pipeline, RegenerateNeedsAReport) {
    Harness h;
    const auto run = h.pipeline.start("vid1", h.options());
    EXPECT_THROW(h.pipeline.regenerate(run.run_id, std::nullopt, h.options()), IllegalTransition);
    auto options = h.options();
    options.corpus_dir = testing::fixture_path("corpora/absent");
    EXPECT_THROW(h.pipeline.start("vid1", options), PreconditionError);
}

TEST(Pipeline, DraftsCiteOnlyReportAndCorpusUrls) {
    Harness h;
    const auto run = h.pipeline.run_pipeline("vid1", h.options());
    ASSERT_EQ(run.status, RunStatus::CommentReady);
    const auto report = *h.store.read_artifact(run.run_id, "report.txt");
    auto allowed = find_urls(report);
    for (const auto& a : bender::load_corpus(testing::fixture_path("corpora/nutrition"), "").articles) {
        allowed.push_back(a.url);
    }
    for (const auto& d : h.store.drafts_for(run.run_id)) {
        for (const auto& draft : d.history) {
            for (const auto& url : draft.cited_urls) {
                EXPECT_NE(std::find(allowed.begin(), allowed.end(), url), allowed.end()) << url;
            }
        }
    }
}

}  // namespace
}  // namespace sleuth::service
