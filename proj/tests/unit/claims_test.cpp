#include <gtest/gtest.h>

#include "fakes.hpp"
#include "sleuth/claims/claims.hpp"
#include "sleuth/common/errors.hpp"

namespace sleuth::claims {
namespace {

std::string violation_path(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const SchemaViolation& e) {
        return e.path();
    }
    return "<none>";
}

TEST(ClaimSet, CreateEnforcesIntegrity) {
    EXPECT_EQ(violation_path([] { ClaimSet::create("v", {{1, "a", {}}, {1, "b", {}}}, {}); }), "claims[1].id");
    EXPECT_EQ(violation_path([] { ClaimSet::create("v", {{1, " ", {}}}, {}); }), "claims[0].text");
    EXPECT_EQ(violation_path([] { ClaimSet::create("v", {{1, "a", {}}}, {{1, 2, "orphan?"}}); }),
              "questions[0].claim_id");
    EXPECT_EQ(violation_path([] { ClaimSet::create("v", {{1, "a", {}}}, {{1, 1, "no mark"}}); }), "questions[0].text");
    EXPECT_NO_THROW(ClaimSet::create("v", {{1, "a", {}}, {3, "b", {}}}, {{1, 1, "q?"}, {2, 3, "r?"}}));
}

TEST(ClaimDocument, NestedAndTopLevelQuestionsGetClaimOrderIds) {
    const auto set = claim_set_from_json(nlohmann::json::parse(R"({
        "video_id": "v",
        "claims": [
            {"id": 1, "text": "Sugar makes kids hyper", "anchor": "sugar", "questions": ["Does sugar cause hyperactivity?"]},
            {"id": 2, "text": "Eggs raise cholesterol", "questions": [{"text": "Do eggs raise blood cholesterol?"}]}
        ],
        "questions": [{"claim_id": 1, "text": "Is the effect measurable?"}]
    })"));
    ASSERT_EQ(set.questions().size(), 3u);
    EXPECT_EQ(set.questions()[1], (VerifiableQuestion{2, 1, "Is the effect measurable?"}));
    EXPECT_EQ(set.questions()[2], (VerifiableQuestion{3, 2, "Do eggs raise blood cholesterol?"}));
    EXPECT_EQ(set.claims()[0].transcript_anchor, "sugar");
    EXPECT_EQ(claim_set_from_json(to_document(set)), set);
}

TEST(ClaimDocument, ViolationsNameTheFailingPath) {
    EXPECT_EQ(violation_path([] { claim_set_from_json(nlohmann::json::parse(R"({"claims": 3})")); }), "claims");
    EXPECT_EQ(violation_path([] {
                  claim_set_from_json(nlohmann::json::parse(R"({"claims": [{"id": 1, "text": "a", "questions": []}]})"));
              }),
              "claims[0].questions");
    EXPECT_EQ(violation_path([] {
                  claim_set_from_json(nlohmann::json::parse(
                      R"({"claims": [{"id": 1, "text": "a", "questions": ["ok?", "physically stronger"]}]})"));
              }),
              "questions[1].text");
    EXPECT_EQ(violation_path([] {
                  claim_set_from_json(nlohmann::json::parse(
                      R"({"claims": [{"id": 1, "text": "a", "questions": ["ok?"]}], "questions": [{"claim_id": 7, "text": "x?"}]})"));
              }),
              "questions[0].claim_id");
    EXPECT_EQ(violation_path([] { claim_set_from_json(nlohmann::json::parse(R"({"claims": []})"), 1); }), "claims");
}

TEST(ClaimDocument, RepairsFencesAroundTheDocument) {
    const auto set =
        validate_claim_document("Here are the claims:\n```json\n{\"claims\":[{\"id\":1,\"text\":\"x\",\"questions\":[\"y?\"]}]}\n```");
    EXPECT_EQ(set.claims().size(), 1u);
    EXPECT_EQ(violation_path([] { validate_claim_document("nothing here"); }), "$");
}

TEST(ClaimDocument, DedupeMergesCaseAndSpaceVariants) {
    const auto set = ClaimSet::create("v", {{1, "Sugar is  toxic", {}}, {2, "sugar is toxic", {}}, {3, "Salt", {}}},
                                      {{1, 1, "Is sugar toxic?"}, {2, 2, "Is sugar toxic?"}, {3, 2, "At what dose?"}, {4, 3, "q?"}});
    const auto d = dedupe_claims(set);
    ASSERT_EQ(d.claims().size(), 2u);
    ASSERT_EQ(d.questions_for(1).size(), 2u);
    EXPECT_EQ(d.questions_for(1)[1].text, "At what dose?");
}

TEST(Extraction, TruncatesToLimitsAndUsesFactualModel) {
    testing::FakeModel model(testing::scripted({R"({"claims":[
        {"id":1,"text":"a","questions":["q1?","q2?","q3?"]},
        {"id":2,"text":"b","questions":["q4?"]},
        {"id":3,"text":"c","questions":["q5?"]}]})"}));
    ExtractionSettings settings;
    settings.max_claims = 2;
    settings.max_questions_per_claim = 2;
    ingest::VideoMetadata meta;
    meta.video_id = "vid";
    const auto set = extract_claims({"some transcript", 1, "en"}, meta, model, settings);
    EXPECT_EQ(set.video_id(), "vid");
    EXPECT_EQ(set.claims().size(), 2u);
    EXPECT_EQ(set.questions().size(), 3u);
    EXPECT_EQ(set.questions().back(), (VerifiableQuestion{3, 2, "q4?"}));
    EXPECT_DOUBLE_EQ(model.configs().at(0).temperature, llm::factual_config().temperature);
}

TEST(Extraction, RepromptsOnViolationAndRejectsEmptyTranscript) {
    testing::FakeModel model(testing::scripted(
        {R"({"claims":[{"id":1,"text":"a","questions":["not a question"]}]})", R"({"claims":[{"id":1,"text":"a","questions":["ok?"]}]})"}));
    const auto set = extract_claims({"text", 1, "en"}, {}, model);
    EXPECT_EQ(set.questions().at(0).text, "ok?");
    EXPECT_NE(model.prompts().at(1).find("questions[0].text"), std::string::npos);

    EXPECT_THROW(extract_claims({"  ", 0, "en"}, {}, model), EmptyTranscript);
}

}  // namespace
}  // namespace sleuth::claims
