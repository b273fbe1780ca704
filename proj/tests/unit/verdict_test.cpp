#include <gtest/gtest.h>

#include "fakes.hpp"
#include "sleuth/common/errors.hpp"
#include "sleuth/common/url.hpp"
#include "sleuth/verdict/verdict.hpp"

namespace sleuth::verdict {
namespace {

using retrieval::EvidenceBundle;
using retrieval::SourceKind;
using testing::FakeModel;
using testing::scripted;

std::vector<EvidenceBundle> bundles_with(const std::vector<std::string>& urls) {
    EvidenceBundle b{1, "Is it so?", {}, {}};
    for (const auto& u : urls) b.items.push_back(*retrieval::make_evidence(u, "excerpt for " + u, SourceKind::WebSearch));
    return {b};
}

TEST(VerdictNames, ParseIsLenient) {
    EXPECT_EQ(parse_verdict("Partly True"), Verdict::PartlyTrue);
    EXPECT_EQ(parse_verdict("PARTLY_FALSE"), Verdict::PartlyFalse);
    EXPECT_EQ(parse_verdict("partly-false"), Verdict::PartlyFalse);
    EXPECT_EQ(parse_verdict("unsure"), Verdict::Unsure);
    EXPECT_FALSE(parse_verdict("maybe"));
    EXPECT_EQ(to_string(Verdict::PartlyTrue), "PARTLY_TRUE");
    EXPECT_EQ(indicator(Verdict::False), "🔴");
}

TEST(Assess, NoEvidenceIsUnsureWithoutModelCall) {
    FakeModel model([](const std::string&) { return "{}"; });
    const auto a = assess_claim({1, "x", {}}, bundles_with({}), model);
    EXPECT_EQ(a.verdict, Verdict::Unsure);
    EXPECT_EQ(a.reasoning, kInsufficientEvidence);
    EXPECT_EQ(model.calls(), 0u);
}

TEST(Assess, DropsUnknownSourcesAndScrubsReasoning) {
    FakeModel model(scripted({R"({"verdict":"False","reasoning":"Per https://a.com/1 and (https://evil.example.net/x) it is wrong.",
                                  "sources":["https://A.com/1/","https://evil.example.net/x","https://a.com/1"]})"}));
    const auto a = assess_claim({1, "x", {}}, bundles_with({"https://a.com/1", "https://b.com/2"}), model);
    EXPECT_EQ(a.verdict, Verdict::False);
    EXPECT_EQ(a.sources, (std::vector<std::string>{"https://a.com/1"}));
    EXPECT_EQ(a.reasoning, "Per https://a.com/1 and it is wrong.");
}

TEST(Assess, DefiniteVerdictCitingOnlyUnknownUrlsIsRepaired) {
    FakeModel model(scripted({R"({"verdict":"True","reasoning":"r","sources":["https://nowhere.org"]})",
                              R"({"verdict":"True","reasoning":"r","sources":["https://b.com/2"]})"}));
    const auto a = assess_claim({1, "x", {}}, bundles_with({"https://b.com/2"}), model);
    EXPECT_EQ(a.sources, (std::vector<std::string>{"https://b.com/2"}));
    EXPECT_EQ(model.calls(), 2u);
    EXPECT_NE(model.prompts()[1].find("no cited source"), std::string::npos);
}

TEST(Assess, PersistentBadCitationsExhaustTheBudget) {
    FakeModel model(scripted({R"({"verdict":"True","reasoning":"r","sources":[]})"}));
    EXPECT_THROW(assess_claim({1, "x", {}}, bundles_with({"https://b.com/2"}), model), SchemaViolation);
    EXPECT_EQ(model.calls(), 3u);
}

TEST(Assess, PromptShowsRatingsAndUrls) {
    EvidenceBundle b{1, "Q?", {*retrieval::make_evidence("https://fc.org/1", "Claim: x Rating: False", SourceKind::ClaimReview, "FC", "False")}, {}};
    const auto prompt = assessment_prompt({1, "the claim", {}}, std::vector<EvidenceBundle>{b});
    EXPECT_NE(prompt.find("PROFESSIONAL FACT-CHECK RATING: \"False\""), std::string::npos);
    EXPECT_NE(prompt.find("URL: https://fc.org/1"), std::string::npos);
    EXPECT_NE(prompt.find("Claim: the claim"), std::string::npos);
}

FactCheckReport sample_report() {
    ingest::VideoMetadata m;
    m.video_id = "abc";
    m.title = "Myths";
    m.channel_name = "Chan";
    m.thumbnail_url = "https://i.ytimg.com/vi/abc/hq.jpg";
    std::vector<ClaimAssessment> as = {
        {{1, "Claim one", {}}, Verdict::True, "Because.", {"https://a.com"}},
        {{2, "Claim two", {}}, Verdict::Unsure, "insufficient evidence", {}},
        {{3, "Claim three", {}}, Verdict::PartlyFalse, "Mixed.", {"https://b.com", "https://c.com"}},
    };
    return build_report(std::move(as), m, *parse_iso8601("2024-06-01T08:00:00Z"));
}

TEST(Report, MarkdownGolden) {
    EXPECT_EQ(render_markdown(sample_report()), testing::fixture("reports/sample.md"));
}

TEST(Report, MarkdownOmitsUnsureTextKeepsIt) {
    const auto r = sample_report();
    const auto md = render_markdown(r);
    EXPECT_EQ(md.find("Claim two"), std::string::npos);
    EXPECT_NE(md.find("## 2. Claim three"), std::string::npos);
    const auto txt = render_text(r);
    EXPECT_NE(txt.find("Claim 2: Claim two\nVerdict: Unsure"), std::string::npos);
    EXPECT_NE(txt.find("Sources: none"), std::string::npos);
}

TEST(Report, AllUnsureRendersPlaceholder) {
    auto r = sample_report();
    for (auto& a : r.assessments) a.verdict = Verdict::Unsure;
    EXPECT_NE(render_markdown(r).find("_No checkable claims could be verified for this video._"), std::string::npos);
}

TEST(Report, JsonRoundTripAndUrls) {
    const auto r = sample_report();
    EXPECT_EQ(report_from_json(to_json(r)), r);
    EXPECT_EQ(report_urls(r), (std::vector<std::string>{"https://a.com", "https://b.com", "https://c.com"}));
    auto bad = to_json(r);
    bad["schema_version"] = 9;
    EXPECT_THROW(report_from_json(bad), SchemaViolation);
}

TEST(Report, BuildRequiresClaimOrder) {
    std::vector<ClaimAssessment> as = {{{2, "b", {}}, Verdict::True, "r", {}}, {{1, "a", {}}, Verdict::True, "r", {}}};
    EXPECT_THROW(build_report(as, {}, {}), PreconditionError);
}

}  // namespace
}  // namespace sleuth::verdict
