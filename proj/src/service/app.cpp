#include "sleuth/service/app.hpp"

#include <cstdlib>

#include <spdlog/spdlog.h>

#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"

#ifndef SLEUTH_PROMPT_DIR
#define SLEUTH_PROMPT_DIR "prompts"
#endif

namespace sleuth::service {
namespace {

std::string env_or_empty(const std::string& name) {
    if (name.empty()) return {};
    const char* value = std::getenv(name.c_str());
    return value ? std::string(value) : std::string();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

struct Session {
    Timestamp started_at;
    std::vector<std::string> retrievers;
    std::string search_engine_id;
};

Session read_session(const std::filesystem::path& dir) {
    const auto file = dir / "session.json";
    if (!std::filesystem::exists(file)) throw PreconditionError("no session.json in replay directory " + dir.string());
    const auto j = nlohmann::json::parse(read_file(file));
    const auto started = parse_iso8601(j.at("started_at").get<std::string>());
    if (!started) throw ParseError("session.json: bad started_at", 0);
    return {*started, j.value("retrievers", std::vector<std::string>{}), j.value("search_engine_id", "")};
}

void write_session(const std::filesystem::path& dir, const Session& s) {
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "session.json", nlohmann::json{{"started_at", format_iso8601(s.started_at)},
                                                           {"retrievers", s.retrievers},
                                                           {"search_engine_id", s.search_engine_id}}
                                                    .dump(2) +
                                                "\n");
}

}  // namespace

AppConfig default_config() {
    AppConfig c;
    c.prompt_dir = SLEUTH_PROMPT_DIR;
    return c;
}

AppConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
    static const std::vector<std::string> known = {"data_dir", "prompt_dir", "corpora",      "model",
                                                   "platform", "search",     "factcheck",    "encyclopedia",
                                                   "retrieval", "policy",    "server"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) spdlog::warn("config: unknown key '{}'", key);
    }
    AppConfig c = default_config();
    if (j.contains("data_dir")) c.data_dir = resolve(base, j.at("data_dir").get<std::string>());
    if (j.contains("prompt_dir")) c.prompt_dir = resolve(base, j.at("prompt_dir").get<std::string>());
    const auto corpora = j.value("corpora", nlohmann::json::object());
    for (const auto& [theme, path] : corpora.items()) {
        c.corpora[theme] = resolve(base, path.get<std::string>());
    }
    if (const auto m = j.value("model", nlohmann::json::object()); !m.empty()) {
        c.model.provider = m.value("provider", c.model.provider);
        c.model.model_name = m.value("model_name", c.model.model_name);
        c.model.max_output_tokens = m.value("max_output_tokens", c.model.max_output_tokens);
        c.model.request_timeout = std::chrono::milliseconds(m.value("request_timeout_ms", c.model.request_timeout.count()));
        c.model.context_budget_chars = m.value("context_budget_chars", c.model.context_budget_chars);
        c.model_endpoint = m.value("endpoint", c.model_endpoint);
        c.model_key_env = m.value("api_key_env", c.model_key_env);
        c.llm.retry.retry_budget = m.value("retry_budget", c.llm.retry.retry_budget);
        c.llm.max_concurrent_requests = m.value("max_concurrent_requests", c.llm.max_concurrent_requests);
    }
    c.model.validate();
    if (c.model.provider != "gemini") throw PreconditionError("unsupported model provider: " + c.model.provider);
    if (const auto p = j.value("platform", nlohmann::json::object()); !p.empty()) {
        c.platform_key_env = p.value("api_key_env", c.platform_key_env);
        c.platform_oauth_env = p.value("oauth_token_env", c.platform_oauth_env);
        c.comment_limit = p.value("comment_limit", c.comment_limit);
        c.caption_language = p.value("caption_language", c.caption_language);
    }
    if (const auto s = j.value("search", nlohmann::json::object()); !s.empty()) {
        c.search_key_env = s.value("api_key_env", c.search_key_env);
        c.search_engine_env = s.value("engine_id_env", c.search_engine_env);
    }
    if (const auto f = j.value("factcheck", nlohmann::json::object()); !f.empty()) {
        c.factcheck_key_env = f.value("api_key_env", c.factcheck_key_env);
    }
    c.encyclopedia_enabled = j.value("encyclopedia", nlohmann::json::object()).value("enabled", c.encyclopedia_enabled);
    if (const auto r = j.value("retrieval", nlohmann::json::object()); !r.empty()) {
        c.per_source_k = r.value("per_source_k", c.per_source_k);
        if (r.contains("cache_dir") && !r.at("cache_dir").is_null()) {
            c.cache_dir = resolve(base, r.at("cache_dir").get<std::string>());
        }
        c.cache_ttl = std::chrono::hours(r.value("cache_ttl_hours", c.cache_ttl.count()));
    }
    if (c.per_source_k < 1) throw PreconditionError("retrieval.per_source_k must be >= 1");
    if (j.contains("policy")) c.policy = posting_policy_from_json(j.at("policy"), c.policy);
    if (const auto s = j.value("server", nlohmann::json::object()); !s.empty()) {
        c.host = s.value("host", c.host);
        c.port = s.value("port", c.port);
    }
    return c;
}

AppConfig load_config(const std::filesystem::path& file) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(file));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(file.string() + ": " + e.what(), 0);
    }
    return config_from_json(j, std::filesystem::absolute(file).parent_path());
}

Application::Application(AppConfig config, ModeSettings mode) : config_(std::move(config)), mode_(std::move(mode)) {
    if (mode_.mode != ExecutionMode::Live && !mode_.dir) throw PreconditionError("record/replay needs a directory");

    Session session;
    llm::ClientOptions llm_options = config_.llm;
    llm::ModelClient::Sleeper sleeper;
    // Replays send no credentials anywhere, but the clients refuse to run
    // without them, so stand-ins are used.
    const auto credential = [&](const std::string& env) {
        auto value = env_or_empty(env);
        if (value.empty() && mode_.mode == ExecutionMode::Replay) value = "replay";
        return value;
    };
    std::string engine_id = env_or_empty(config_.search_engine_env);
    HttpClient* transport = mode_.transport;

    switch (mode_.mode) {
        case ExecutionMode::Live:
            clock_ = std::make_unique<SystemClock>();
            if (!transport) {
                live_http_ = std::make_unique<LiveHttpClient>();
                transport = live_http_.get();
            }
            break;
        case ExecutionMode::Record: {
            // Recording runs stamp everything with the session start so the
            // prompts they record are exactly the ones a replay will send.
            session.started_at = mode_.started_at.value_or(
                std::chrono::time_point_cast<std::chrono::seconds>(SystemClock().now()));
            clock_ = std::make_unique<SimulatedClock>(session.started_at);
            if (!transport) {
                live_http_ = std::make_unique<LiveHttpClient>();
                transport = live_http_.get();
            }
            http_ = std::make_unique<RecordingHttpClient>(*transport, *mode_.dir / "http");
            transport = http_.get();
            llm_options.record_dir = *mode_.dir / "llm";
            session.search_engine_id = engine_id;
            break;
        }
        case ExecutionMode::Replay: {
            session = read_session(*mode_.dir);
            clock_ = std::make_unique<SimulatedClock>(session.started_at);
            http_ = std::make_unique<ReplayHttpClient>(*mode_.dir / "http");
            transport = http_.get();
            engine_id = session.search_engine_id;
            sleeper = [](std::chrono::milliseconds) {};
            break;
        }
    }

    llm::ModelBackend* backend = nullptr;
    if (mode_.mode == ExecutionMode::Replay) {
        backend_ = std::make_unique<llm::ReplayBackend>(*mode_.dir / "llm");
        backend = backend_.get();
    } else if (mode_.backend) {
        backend = mode_.backend;
    } else {
        backend_ = std::make_unique<llm::GeminiBackend>(*transport, env_or_empty(config_.model_key_env),
                                                        config_.model_endpoint);
        backend = backend_.get();
    }
    model_ = std::make_unique<llm::ModelClient>(*backend, llm_options, sleeper, clock_.get());
    platform_ = std::make_unique<ingest::YouTubeClient>(
        *transport,
        ingest::YouTubeCredentials{credential(config_.platform_key_env), credential(config_.platform_oauth_env)});

    const auto wanted = [&](std::string_view kind, bool live_condition) {
        if (mode_.mode == ExecutionMode::Replay) {
            return std::find(session.retrievers.begin(), session.retrievers.end(), kind) != session.retrievers.end();
        }
        return live_condition;
    };
    const std::string search_key = credential(config_.search_key_env);
    const std::string factcheck_key = credential(config_.factcheck_key_env);
    if (wanted("WEB_SEARCH", !search_key.empty() && !engine_id.empty())) {
        owned_retrievers_.push_back(
            std::make_unique<retrieval::WebSearchRetriever>(*transport, retrieval::WebSearchConfig{search_key, engine_id}));
    }
    if (wanted("ENCYCLOPEDIA", config_.encyclopedia_enabled)) {
        owned_retrievers_.push_back(
            std::make_unique<retrieval::EncyclopediaRetriever>(*transport, retrieval::EncyclopediaConfig{}));
    }
    if (wanted("CLAIM_REVIEW", !factcheck_key.empty())) {
        owned_retrievers_.push_back(
            std::make_unique<retrieval::ClaimReviewRetriever>(*transport, retrieval::ClaimReviewConfig{factcheck_key}));
    }
    for (const auto& r : owned_retrievers_) session.retrievers.emplace_back(retrieval::to_string(r->kind()));
    if (owned_retrievers_.empty()) spdlog::warn("no evidence sources configured; every claim will be UNSURE");

    const std::size_t base_count = owned_retrievers_.size();
    if (mode_.mode == ExecutionMode::Live && config_.cache_dir) {
        cache_ = std::make_unique<retrieval::EvidenceCache>(
            *config_.cache_dir, std::chrono::duration_cast<std::chrono::milliseconds>(config_.cache_ttl), *clock_);
        for (std::size_t i = 0; i < base_count; ++i) {
            owned_retrievers_.push_back(std::make_unique<retrieval::CachedRetriever>(*owned_retrievers_[i], *cache_));
            retrievers_.push_back(owned_retrievers_.back().get());
        }
    } else {
        for (const auto& r : owned_retrievers_) retrievers_.push_back(r.get());
    }

    if (mode_.mode == ExecutionMode::Record) write_session(*mode_.dir, session);

    templates_ = bender::PromptTemplates::load(config_.prompt_dir);
    store_ = std::make_unique<RunStore>(config_.data_dir, *clock_);
    pipeline_ = std::make_unique<Pipeline>(*store_, PipelineServices{*platform_, *model_, retrievers_, templates_});
    scheduler_ = std::make_unique<PostingScheduler>(*platform_, *clock_, store_->posts_ledger());
}

Application::~Application() = default;

RunOptions Application::run_options(const std::string& theme, bool run_bender) const {
    RunOptions o;
    o.theme = theme;
    if (!theme.empty()) {
        const auto it = config_.corpora.find(theme);
        if (it == config_.corpora.end()) {
            throw PreconditionError("no corpus configured for theme '" + theme + "'");
        }
        o.corpus_dir = it->second;
    }
    o.run_bender = run_bender;
    o.prompt = bender::recommended_config(templates_);
    if (!o.corpus_dir) o.prompt.use_corpus = false;
    o.per_source_k = config_.per_source_k;
    o.comment_limit = config_.comment_limit;
    o.caption_language = config_.caption_language;
    o.normalize.model = llm::factual_config(config_.model);
    o.extraction.model = llm::factual_config(config_.model);
    o.assessment.model = llm::factual_config(config_.model);
    o.bender.generation_model = llm::stylistic_config(config_.model);
    o.bender.evaluation_model = llm::factual_config(config_.model);
    return o;
}

benchmark::ClaimAssessor Application::assessor() {
    verdict::AssessmentSettings settings;
    settings.model = llm::factual_config(config_.model);
    return benchmark::make_pipeline_assessor(*model_, retrievers_, config_.per_source_k, settings);
}

}  // namespace sleuth::service
