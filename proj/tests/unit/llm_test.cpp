#include <gtest/gtest.h>

#include "fakes.hpp"
#include "sleuth/common/errors.hpp"
#include "sleuth/llm/client.hpp"

namespace sleuth::llm {
namespace {

using namespace std::chrono_literals;
using sleuth::testing::FakeModel;
using sleuth::testing::scripted;

class ThrowingBackend final : public ModelBackend {
  public:
    explicit ThrowingBackend(int failures) : failures_(failures) {}
    BackendReply generate(const std::string&, const ModelConfig&) override {
        if (calls++ < failures_) throw TransportError("503");
        return {"ok", {10, 2}};
    }
    int calls = 0;

  private:
    int failures_;
};

const DocumentSchema kNeedsAnswer{"answer", [](const nlohmann::json& j) {
                                      if (!j.contains("answer")) throw SchemaViolation("answer", "missing");
                                  }};

TEST(ExtractJson, StripsFencesAndProse) {
    EXPECT_EQ(extract_json_document("```json\n{\"a\": 1}\n```"), "{\"a\": 1}");
    EXPECT_EQ(extract_json_document("Sure! Here you go: {\"a\": \"}\"} hope it helps"), "{\"a\": \"}\"}");
    EXPECT_EQ(extract_json_document("[1, [2]] trailing"), "[1, [2]]");
    EXPECT_FALSE(extract_json_document("no json here"));
    EXPECT_FALSE(extract_json_document("{\"unterminated\": 1"));
}

TEST(Structured, RepairsFencedOutputWithoutReprompt) {
    FakeModel model(scripted({"```\n{\"answer\": 42}\n```"}));
    const auto doc = model.complete_structured("q", kNeedsAnswer, {});
    EXPECT_EQ(doc.at("answer"), 42);
    EXPECT_EQ(model.calls(), 1u);
}

TEST(Structured, RepromptsWithValidatorErrorThenSucceeds) {
    FakeModel model(scripted({"{\"wrong\": 1}", "not json", "{\"answer\": 1}"}));
    const auto doc = model.complete_structured("base prompt", kNeedsAnswer, {}, 3);
    EXPECT_EQ(doc.at("answer"), 1);
    const auto prompts = model.prompts();
    ASSERT_EQ(prompts.size(), 3u);
    EXPECT_EQ(prompts[0], "base prompt");
    EXPECT_NE(prompts[1].find("answer: missing"), std::string::npos);
    EXPECT_EQ(prompts[1].rfind("base prompt", 0), 0u);
}

TEST(Structured, GivesUpAfterBudget) {
    FakeModel model(scripted({"{}"}));
    try {
        model.complete_structured("p", kNeedsAnswer, {}, 2);
        FAIL();
    } catch (const SchemaViolation& e) {
        EXPECT_EQ(e.path(), "answer");
    }
    EXPECT_EQ(model.calls(), 2u);
    EXPECT_THROW(model.complete_structured("p", kNeedsAnswer, {}, 0), PreconditionError);
}

TEST(ModelConfigs, FactualIsCoolerThanStylistic) {
    EXPECT_LT(factual_config().temperature, stylistic_config().temperature);
    ModelConfig bad;
    bad.temperature = 3;
    EXPECT_THROW(bad.validate(), PreconditionError);
}

TEST(ModelClient, RetriesTransientFailuresWithBackoff) {
    ThrowingBackend backend(2);
    std::vector<std::chrono::milliseconds> sleeps;
    ClientOptions options;
    options.retry = {3, 100ms, 2.0, 250ms};
    ModelClient client(backend, options, [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
    EXPECT_EQ(client.complete("hi", {}), "ok");
    EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{100ms, 200ms}));
    EXPECT_EQ(client.usage().calls, 1);
    EXPECT_EQ(client.usage().attempts, 3);
    EXPECT_EQ(client.usage().tokens.prompt, 10);
}

TEST(ModelClient, ExhaustedRetriesBecomeLlmError) {
    ThrowingBackend backend(100);
    ClientOptions options;
    options.retry.retry_budget = 2;
    ModelClient client(backend, options, [](std::chrono::milliseconds) {});
    EXPECT_THROW(client.complete("hi", {}), LlmError);
    EXPECT_EQ(backend.calls, 3);
}

TEST(ModelClient, SizingAndEmptyPromptFailFast) {
    ThrowingBackend backend(0);
    ModelClient client(backend, {}, [](std::chrono::milliseconds) {});
    ModelConfig small;
    small.context_budget_chars = 4;
    EXPECT_THROW(client.complete("too long", small), SizingError);
    EXPECT_THROW(client.complete("", {}), PreconditionError);
    EXPECT_EQ(backend.calls, 0);
}

TEST(ModelClient, RecordedCompletionsReplayExactly) {
    sleuth::testing::TempDir dir;
    sleuth::testing::FakeBackend live([](const std::string& p) { return "echo:" + p; });
    ClientOptions options;
    options.record_dir = dir.path();
    ModelClient recorder(live, options);
    EXPECT_EQ(recorder.complete("alpha", {}), "echo:alpha");

    ReplayBackend replay(dir.path());
    ModelClient client(replay, {}, [](std::chrono::milliseconds) {});
    EXPECT_EQ(client.complete("alpha", {}), "echo:alpha");
    EXPECT_THROW(client.complete("beta", {}), LlmError);
}

TEST(GeminiBackend, SendsKeyInHeaderAndParsesCandidates) {
    sleuth::testing::FakeHttpClient http;
    http.route_json("POST", ":generateContent", 200,
                    R"({"candidates":[{"content":{"parts":[{"text":"Hel"},{"text":"lo"}]}}],)"
                    R"("usageMetadata":{"promptTokenCount":7,"candidatesTokenCount":2}})");
    GeminiBackend backend(http, "k-123", "https://models.example.com/v1");
    const auto reply = backend.generate("prompt", {});
    EXPECT_EQ(reply.text, "Hello");
    EXPECT_EQ(reply.tokens.prompt, 7);
    const auto req = http.requests().at(0);
    EXPECT_EQ(req.url, "https://models.example.com/v1/models/gemini-1.5-flash:generateContent");
    EXPECT_EQ(req.url.find("k-123"), std::string::npos);
    EXPECT_EQ(req.headers.at(0).second, "k-123");
}

TEST(GeminiBackend, MapsStatusesToErrorKinds) {
    for (const auto& [status, kind] : std::vector<std::pair<int, ErrorKind>>{
             {401, ErrorKind::Auth}, {429, ErrorKind::Transport}, {503, ErrorKind::Transport}, {400, ErrorKind::Llm}}) {
        sleuth::testing::FakeHttpClient http;
        http.route_json("POST", "generateContent", status, "{}");
        GeminiBackend backend(http, "k");
        try {
            backend.generate("p", {});
            FAIL() << status;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), kind) << status;
        }
    }
    sleuth::testing::FakeHttpClient http;
    GeminiBackend keyless(http, "");
    EXPECT_THROW(keyless.generate("p", {}), AuthError);
}

}  // namespace
}  // namespace sleuth::llm
