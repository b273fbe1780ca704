#include <gtest/gtest.h>

#include "fakes.hpp"
#include "sleuth/bender/bender.hpp"
#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"

namespace sleuth::bender {
namespace {

using testing::FakeModel;
using testing::scripted;

const std::string kReport =
    "FACT-CHECK REPORT\nClaim 1: Sugar makes kids hyper\nVerdict: False\nSources:\n- https://trials.example.org/sugar\n";

PromptTemplates templates() { return PromptTemplates::load(SLEUTH_PROMPT_DIR); }

BenderInputs inputs() {
    BenderInputs in;
    in.report_text = kReport;
    in.corpus = load_corpus(testing::fixture_path("corpora/nutrition"), "nutrition");
    in.metadata.video_id = "v1";
    in.metadata.title = "Sugar myths";
    in.metadata.channel_name = "Chan";
    in.comments = {{"c1", "@amy", "My kids go wild after cake!", 4, std::nullopt}, {"c2", "@bo", "Nonsense video", 0, std::nullopt}};
    return in;
}

std::string evaluation_json(const std::array<int, kCriterionCount>& scores) {
    nlohmann::json j;
    for (std::size_t i = 0; i < kCriterionCount; ++i) {
        j[std::string(key(kAllCriteria[i]))] = {{"score", scores[i]}, {"feedback", "note " + std::to_string(i)}};
    }
    return j.dump();
}

TEST(Corpus, LoadsInFilenameOrderSkippingHiddenAndEmpty) {
    const auto c = load_corpus(testing::fixture_path("corpora/nutrition"), "nutrition");
    ASSERT_EQ(c.articles.size(), 3u);
    EXPECT_EQ(c.articles[0].title, "Sugar and hyperactivity in children");
    EXPECT_EQ(c.articles[1].url, "https://health-facts.example.org/eggs");
    EXPECT_EQ(c.articles[2].title, "03_untitled");
    std::size_t total = 0;
    for (const auto& a : c.articles) total += a.body.size();
    EXPECT_EQ(c.total_chars, total);
}

TEST(Corpus, MissingUrlAndMissingDirectoryFail) {
    try {
        load_corpus(testing::fixture_path("corpora/no_url"), "x");
        FAIL();
    } catch (const MissingFrontMatter& e) {
        EXPECT_NE(e.file().find("01.md"), std::string::npos);
    }
    EXPECT_THROW(load_corpus(testing::fixture_path("corpora/absent"), "x"), PreconditionError);
    testing::TempDir dir;
    write_file_atomic(dir / "a.md", "no front matter\n");
    EXPECT_THROW(load_corpus(dir.path(), "x"), MissingFrontMatter);
    write_file_atomic(dir / "a.md", "---\nurl: https://a.org\nnever closed\n");
    EXPECT_THROW(load_corpus(dir.path(), "x"), MissingFrontMatter);
}

TEST(Corpus, BlockRespectsBudgetAndCutsLastArticle) {
    const auto c = load_corpus(testing::fixture_path("corpora/nutrition"), "nutrition");
    const auto full = corpus_block(c, 100000);
    EXPECT_NE(full.find("### Eggs and blood cholesterol\nSource: https://health-facts.example.org/eggs\n"), std::string::npos);
    const auto small = corpus_block(c, 120);
    EXPECT_LE(small.size(), 120u);
    EXPECT_EQ(small.rfind("### Sugar and hyperactivity in children\n", 0), 0u);
    EXPECT_TRUE(corpus_block(c, 10).empty());
}

TEST(Rubric, ParsesAllCriteriaLeniently) {
    auto j = nlohmann::json::parse(evaluation_json({2, 1, 0, 2, 2, 1, 2}));
    j["Cites-Evidence"] = j["cites_evidence"];
    j.erase("cites_evidence");
    const auto e = rubric_from_json(j);
    EXPECT_EQ(e.score(RubricCriterion::CitesEvidence), 2);
    EXPECT_EQ(e.total(), 10);
    EXPECT_FALSE(e.perfect());
    EXPECT_DOUBLE_EQ(overall_score(e), 71.4);
    EXPECT_EQ(rubric_from_json(to_json(e)), e);
}

TEST(Rubric, RejectsMissingOutOfRangeAndEmptyFeedback) {
    const auto path_of = [](nlohmann::json j) {
        try {
            rubric_from_json(j);
        } catch (const SchemaViolation& e) {
            return e.path();
        }
        return std::string("<none>");
    };
    auto base = nlohmann::json::parse(evaluation_json({2, 2, 2, 2, 2, 2, 2}));
    auto missing = base;
    missing.erase("specific");
    EXPECT_EQ(path_of(missing), "specific");
    auto high = base;
    high["shows_empathy"]["score"] = 3;
    EXPECT_EQ(path_of(high), "shows_empathy.score");
    auto fractional = base;
    fractional["right_stand"]["score"] = 1.5;
    EXPECT_EQ(path_of(fractional), "right_stand.score");
    auto blank = base;
    blank["avoids_truisms"]["feedback"] = "  ";
    EXPECT_EQ(path_of(blank), "avoids_truisms.feedback");
}

TEST(Citations, AllowedSetIsReportPlusCorpus) {
    const auto in = inputs();
    const auto allowed = allowed_citations(in.report_text, in.corpus);
    EXPECT_EQ(allowed.size(), 4u);
    EXPECT_EQ(allowed[0], "https://trials.example.org/sugar");
}

TEST(Citations, FilterStripsOutsidersAndMatchesLoosely) {
    const std::vector<std::string> allowed = {"https://www.nutrition-review.org/sugar-hyperactivity"};
    const auto [text, cited] = filter_citations(
        "See nutrition-review.org/sugar-hyperactivity/ and (https://made-up.com/x) or bit.ly/abc.", allowed);
    EXPECT_EQ(text, "See nutrition-review.org/sugar-hyperactivity/ and or.");
    EXPECT_EQ(cited, allowed);
}

TEST(Truncate, CutsAtSentenceOrSpace) {
    EXPECT_EQ(truncate_at_sentence("One. Two three. Four", 17), "One. Two three.");
    EXPECT_EQ(truncate_at_sentence("no sentence ends here at all", 15), "no sentence");
    EXPECT_EQ(truncate_at_sentence("short", 50), "short");
    EXPECT_EQ(truncate_at_sentence("v1.2 is out", 6), "v1.2");
}

TEST(GenerationPrompt, IncludesSelectedMaterialOnly) {
    const auto t = templates();
    auto in = inputs();
    PromptConfig config = recommended_config(t);
    auto prompt = generation_prompt(in, config, t);
    EXPECT_NE(prompt.find("<<<REPORT"), std::string::npos);
    EXPECT_NE(prompt.find("<<<ARTICLES"), std::string::npos);
    EXPECT_NE(prompt.find("<<<EXAMPLE"), std::string::npos);
    EXPECT_NE(prompt.find("@amy: My kids go wild after cake!"), std::string::npos);
    EXPECT_EQ(prompt.find("<<<TARGET"), std::string::npos);

    config.use_corpus = false;
    config.one_shot_example.reset();
    config.instruction_level = InstructionLevel::HighLevel;
    prompt = generation_prompt(in, config, t);
    EXPECT_EQ(prompt.find("<<<ARTICLES"), std::string::npos);
    EXPECT_EQ(prompt.find("<<<EXAMPLE"), std::string::npos);
    EXPECT_NE(prompt.find("gently brings in verified facts"), std::string::npos);

    in.report_text.clear();
    EXPECT_THROW(generation_prompt(in, config, t), PreconditionError);
    config.use_report = false;
    EXPECT_NO_THROW(generation_prompt(in, config, t));
}

TEST(GenerationPrompt, TargetIsAppendedEvenIfTemplateDropsIt) {
    auto t = templates();
    t.comment_detailed = "Write a comment for {title}.";
    auto in = inputs();
    in.target = in.comments[0];
    const auto prompt = generation_prompt(in, recommended_config(t), t);
    EXPECT_NE(prompt.find("<<<TARGET\nMy kids go wild after cake!\nTARGET>>>"), std::string::npos);
}

TEST(Generate, StripsForeignUrlsCapsLengthAndRecordsTarget) {
    auto in = inputs();
    in.target = in.comments[0];
    const std::string reply = "\"Great question! Studies (https://trials.example.org/sugar) and https://fake.news/x say no. " +
                              std::string(2000, 'a') + "\"";
    FakeModel model(scripted({reply}));
    const auto draft = generate_comment(in, recommended_config(templates()), templates(), model);
    EXPECT_EQ(draft.text, "Great question! Studies (https://trials.example.org/sugar) and say no.");
    EXPECT_EQ(draft.cited_urls, (std::vector<std::string>{"https://trials.example.org/sugar"}));
    EXPECT_EQ(draft.target_comment_id, "c1");
    EXPECT_EQ(draft.generation, 0);
    EXPECT_DOUBLE_EQ(model.configs()[0].temperature, llm::stylistic_config().temperature);
}

TEST(Generate, EmptyReplyIsAnError) {
    FakeModel model(scripted({"   https://fake.news/x  "}));
    EXPECT_THROW(generate_comment(inputs(), recommended_config(templates()), templates(), model), LlmError);
}

TEST(SelfEvaluate, SeesReportAndCorpusEvenWhenGenerationDidNot) {
    FakeModel model(scripted({evaluation_json({2, 2, 2, 2, 2, 2, 2})}));
    const CommentDraft draft{"A draft.", {}, std::nullopt, 0};
    const auto e = self_evaluate(draft, inputs(), templates(), model);
    EXPECT_TRUE(e.perfect());
    const auto prompt = model.prompts().at(0);
    EXPECT_NE(prompt.find("<<<REPORT"), std::string::npos);
    EXPECT_NE(prompt.find("<<<ARTICLES"), std::string::npos);
    EXPECT_NE(prompt.find("<<<COMMENT\nA draft.\nCOMMENT>>>"), std::string::npos);
    EXPECT_DOUBLE_EQ(model.configs()[0].temperature, llm::factual_config().temperature);
}

TEST(Improve, PromptCarriesFeedbackAndGenerationAdvances) {
    FakeModel model(scripted({"Better draft."}));
    RubricEvaluation e = rubric_from_json(nlohmann::json::parse(evaluation_json({2, 2, 1, 2, 0, 2, 2})));
    const CommentDraft draft{"First draft.", {}, std::string("c2"), 0};
    auto in = inputs();
    in.target = in.comments[1];
    const auto improved = improve_comment(draft, e, in, recommended_config(templates()), templates(), model);
    EXPECT_EQ(improved.generation, 1);
    EXPECT_EQ(improved.target_comment_id, "c2");
    const auto prompt = model.prompts().at(0);
    EXPECT_NE(prompt.find("- Cites evidence (cites_evidence): 0/2. note 4"), std::string::npos);
    EXPECT_NE(prompt.find("First draft."), std::string::npos);
    EXPECT_NE(prompt.find("<<<TARGET"), std::string::npos);
}

TEST(Loop, StopsEarlyOnPerfectScore) {
    FakeModel model(scripted({"Draft zero.", evaluation_json({2, 2, 2, 2, 2, 2, 2})}));
    auto config = recommended_config(templates());
    config.max_improvement_passes = 3;
    const auto r = run_bender_loop(inputs(), config, templates(), model);
    EXPECT_EQ(r.drafts.size(), 1u);
    EXPECT_EQ(r.evaluations.size(), 1u);
    EXPECT_EQ(r.final_draft.text, "Draft zero.");
}

TEST(Loop, ImprovesUpToTheCap) {
    FakeModel model(scripted({"Draft zero.", evaluation_json({2, 2, 2, 2, 2, 2, 1}), "Draft one.",
                              evaluation_json({2, 2, 2, 2, 2, 2, 1}), "Draft two."}));
    auto config = recommended_config(templates());
    config.max_improvement_passes = 2;
    const auto r = run_bender_loop(inputs(), config, templates(), model);
    ASSERT_EQ(r.drafts.size(), 3u);
    EXPECT_EQ(r.evaluations.size(), 2u);
    EXPECT_EQ(r.final_draft.text, "Draft two.");
    EXPECT_EQ(r.final_draft.generation, 2);
}

TEST(Loop, SelfEvalOffMeansSingleDraftAndZeroPassesIsInvalid) {
    FakeModel model(scripted({"Only draft."}));
    auto config = recommended_config(templates());
    config.self_eval_enabled = false;
    const auto r = run_bender_loop(inputs(), config, templates(), model);
    EXPECT_EQ(r.drafts.size(), 1u);
    EXPECT_EQ(model.calls(), 1u);
    config.self_eval_enabled = true;
    config.max_improvement_passes = 0;
    EXPECT_THROW(run_bender_loop(inputs(), config, templates(), model), PreconditionError);
}

TEST(Templates, MissingFileIsAnIoError) {
    testing::TempDir dir;
    EXPECT_THROW(PromptTemplates::load(dir.path()), IoError);
}

}  // namespace
}  // namespace sleuth::bender
