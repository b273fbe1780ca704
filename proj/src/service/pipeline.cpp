#include "sleuth/service/pipeline.hpp"

#include <atomic>
#include <exception>
#include <future>

#include <spdlog/spdlog.h>

#include "sleuth/common/errors.hpp"
#include "sleuth/ingest/captions.hpp"
#include "sleuth/retrieval/gather.hpp"

namespace sleuth::service {
namespace {

/// Runs fn(i) for i in [0, n) on at most `width` threads; results keep index
/// order and the lowest-index exception is rethrown.
template <typename Result, typename Fn>
std::vector<Result> bounded_map(std::size_t n, std::size_t width, Fn fn) {
    std::vector<std::optional<Result>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::future<void>> pool;
    for (std::size_t t = 0; t < std::min(std::max<std::size_t>(width, 1), n); ++t) {
        pool.push_back(std::async(std::launch::async, worker));
    }
    for (auto& f : pool) f.get();
    std::vector<Result> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        out.push_back(std::move(*slots[i]));
    }
    return out;
}

std::string pretty(const nlohmann::json& j) {
    return j.dump(2) + "\n";
}

}  // namespace

nlohmann::json to_json(const RunOptions& o) {
    return {{"theme", o.theme},
            {"corpus_dir", o.corpus_dir ? nlohmann::json(o.corpus_dir->string()) : nlohmann::json()},
            {"run_bender", o.run_bender},
            {"instruction_level", o.prompt.instruction_level == bender::InstructionLevel::Detailed ? "DETAILED"
                                                                                                    : "HIGH_LEVEL"},
            {"one_shot", o.prompt.one_shot_example.has_value()},
            {"use_report", o.prompt.use_report},
            {"use_corpus", o.prompt.use_corpus},
            {"self_eval_enabled", o.prompt.self_eval_enabled},
            {"max_improvement_passes", o.prompt.max_improvement_passes},
            {"per_source_k", o.per_source_k},
            {"comment_limit", o.comment_limit},
            {"caption_language", o.caption_language},
            {"max_claims", o.extraction.max_claims},
            {"max_questions_per_claim", o.extraction.max_questions_per_claim},
            {"model", o.assessment.model.model_name}};
}

Pipeline::Pipeline(RunStore& store, PipelineServices services) : store_(store), services_(std::move(services)) {}

RunRecord Pipeline::start(const std::string& video_id, const RunOptions& options) {
    options.prompt.validate();
    if (video_id.empty()) throw PreconditionError("video id must not be empty");
    if (options.corpus_dir && !std::filesystem::is_directory(*options.corpus_dir)) {
        throw PreconditionError("corpus directory for theme '" + options.theme + "' does not exist: " +
                                options.corpus_dir->string());
    }
    RunRecord run = store_.create_run(video_id, options.theme);
    store_.write_artifact(run.run_id, "options.json", pretty(to_json(options)));
    return store_.get_run(run.run_id);
}

RunRecord Pipeline::run_pipeline(const std::string& video_id, const RunOptions& options) {
    return execute(start(video_id, options).run_id, options);
}

RunRecord Pipeline::execute(const std::string& run_id, const RunOptions& options) {
    const RunRecord run = store_.transition(run_id, RunStatus::Running);
    const std::string& video_id = run.video_id;
    std::string stage;
    const auto enter = [&](const char* name) {
        stage = name;
        store_.set_detail(run_id, "stage", stage);
        spdlog::info("run {}: {}", run_id, stage);
    };
    auto& platform = services_.platform;
    auto& model = services_.model;

    try {
        enter("ingest");
        auto metadata_f = std::async(std::launch::async, [&] { return ingest::fetch_video_metadata(video_id, platform); });
        auto track_f = std::async(std::launch::async, [&] {
            return ingest::fetch_caption_track(video_id, platform, options.caption_language);
        });
        auto comments_f = std::async(std::launch::async, [&] {
            return ingest::fetch_comments(video_id, platform, options.comment_limit);
        });
        const ingest::VideoMetadata metadata = metadata_f.get();
        const ingest::CaptionTrack track = track_f.get();
        std::vector<ingest::UserComment> comments;
        try {
            comments = comments_f.get();
        } catch (const CommentsDisabled&) {
            spdlog::info("run {}: comments are disabled; continuing without them", run_id);
            store_.set_detail(run_id, "comments_disabled", true);
        }
        store_.write_artifact(run_id, "metadata.json", pretty(ingest::to_json(metadata)));
        nlohmann::json comments_json = nlohmann::json::array();
        for (const auto& c : comments) comments_json.push_back(ingest::to_json(c));
        store_.write_artifact(run_id, "comments.json", pretty(comments_json));
        store_.write_artifact(run_id, "captions.raw", track.raw);
        store_.set_detail(run_id, "caption",
                          {{"language", track.language},
                           {"format", ingest::to_string(track.format)},
                           {"auto_generated", track.auto_generated},
                           {"degraded_choice", track.degraded_choice}});

        const auto cues = ingest::parse_caption_track(track.raw, track.format);
        store_.write_artifact(run_id, "cues.json", ingest::serialize_cues(cues));
        const auto transcript = ingest::normalize_transcript(cues, model, options.normalize, track.language);
        store_.write_artifact(run_id, "transcript.txt", transcript.text + "\n");

        enter("claims");
        const auto claim_set = claims::extract_claims(transcript, metadata, model, options.extraction);
        store_.write_artifact(run_id, "claims.json", pretty(claims::to_document(claim_set)));

        enter("retrieval");
        const auto& claim_list = claim_set.claims();
        const auto bundles = bounded_map<std::vector<retrieval::EvidenceBundle>>(
            claim_list.size(), options.max_parallel_claims, [&](std::size_t i) {
                std::vector<retrieval::EvidenceBundle> out;
                for (const auto& question : claim_set.questions_for(claim_list[i].id)) {
                    if (services_.retrievers.empty()) {
                        out.push_back({question.id, question.text, {}, {}});
                        continue;
                    }
                    try {
                        out.push_back(retrieval::gather_evidence(question, services_.retrievers, options.per_source_k));
                    } catch (const AllRetrieversFailed& e) {
                        spdlog::warn("run {}: question {}: {}", run_id, question.id, e.what());
                        out.push_back({question.id, question.text, {}, {}});
                    }
                }
                return out;
            });
        nlohmann::json evidence_json = nlohmann::json::array();
        for (std::size_t i = 0; i < claim_list.size(); ++i) {
            nlohmann::json per_claim = nlohmann::json::array();
            for (const auto& b : bundles[i]) per_claim.push_back(retrieval::to_json(b));
            evidence_json.push_back({{"claim_id", claim_list[i].id}, {"bundles", per_claim}});
        }
        store_.write_artifact(run_id, "evidence.json", pretty(evidence_json));

        enter("verdict");
        auto assessments = bounded_map<verdict::ClaimAssessment>(
            claim_list.size(), options.max_parallel_claims, [&](std::size_t i) {
                try {
                    return verdict::assess_claim(claim_list[i], bundles[i], model, options.assessment);
                } catch (const SchemaViolation& e) {
                    spdlog::warn("run {}: claim {} could not be assessed, marking UNSURE: {}", run_id,
                                 claim_list[i].id, e.what());
                    return verdict::ClaimAssessment{claim_list[i], verdict::Verdict::Unsure,
                                                    std::string(verdict::kInsufficientEvidence), {}};
                }
            });

        enter("report");
        const auto report = verdict::build_report(std::move(assessments), metadata, store_.clock().now());
        store_.write_artifact(run_id, "report.json", pretty(verdict::to_json(report)));
        store_.write_artifact(run_id, "report.md", verdict::render_markdown(report));
        store_.write_artifact(run_id, "report.txt", verdict::render_text(report));
        store_.transition(run_id, RunStatus::ReportReady);

        if (!options.run_bender) return store_.get_run(run_id);

        enter("bender");
        const auto inputs = bender_inputs(store_.get_run(run_id), options, std::nullopt);
        auto result = bender::run_bender_loop(inputs, options.prompt, services_.templates, model, options.bender);
        store_.add_draft(run_id, std::move(result));
        return store_.transition(run_id, RunStatus::CommentReady);
    } catch (const Error& e) {
        spdlog::error("run {} failed at {}: {}", run_id, stage, e.what());
        store_.set_detail(run_id, "error_message", e.what());
        return store_.transition(run_id, RunStatus::Failed, std::string(to_string(e.kind())), stage);
    } catch (const std::exception& e) {
        spdlog::error("run {} failed at {}: {}", run_id, stage, e.what());
        store_.set_detail(run_id, "error_message", e.what());
        return store_.transition(run_id, RunStatus::Failed, "InternalError", stage);
    }
}

bender::BenderInputs Pipeline::bender_inputs(const RunRecord& run, const RunOptions& options,
                                             const std::optional<std::string>& target_comment_id) const {
    const auto read = [&](const char* name) {
        auto text = store_.read_artifact(run.run_id, name);
        if (!text) throw NotFound(std::string("run ") + run.run_id + " has no " + name);
        return *text;
    };
    bender::BenderInputs inputs;
    inputs.report_text = read("report.txt");
    inputs.metadata = ingest::video_metadata_from_json(nlohmann::json::parse(read("metadata.json")));
    for (const auto& c : nlohmann::json::parse(read("comments.json"))) {
        inputs.comments.push_back(ingest::user_comment_from_json(c));
    }
    inputs.corpus = options.corpus_dir ? bender::load_corpus(*options.corpus_dir, options.theme)
                                       : bender::Corpus{options.theme, {}, 0};
    if (target_comment_id) {
        for (const auto& c : inputs.comments) {
            if (c.comment_id == *target_comment_id) inputs.target = c;
        }
        if (!inputs.target) throw NotFound("run " + run.run_id + " has no comment " + *target_comment_id);
    }
    return inputs;
}

DraftRecord Pipeline::regenerate(const std::string& run_id, const std::optional<std::string>& target_comment_id,
                                 const RunOptions& options) {
    const RunRecord run = store_.get_run(run_id);
    if (run.status != RunStatus::ReportReady && run.status != RunStatus::CommentReady) {
        throw IllegalTransition("run " + run_id + " is " + std::string(to_string(run.status)) +
                                "; drafts can only be generated once the report is ready");
    }
    const auto inputs = bender_inputs(run, options, target_comment_id);
    auto result = bender::run_bender_loop(inputs, options.prompt, services_.templates, services_.model, options.bender);
    DraftRecord draft = store_.add_draft(run_id, std::move(result));
    if (run.status == RunStatus::ReportReady) {
        try {
            store_.transition(run_id, RunStatus::CommentReady);
        } catch (const IllegalTransition&) {
            // A concurrent regeneration got there first.
        }
    }
    return draft;
}

}  // namespace sleuth::service
