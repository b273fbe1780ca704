#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sleuth/bender/bender.hpp"
#include "sleuth/claims/claims.hpp"
#include "sleuth/ingest/platform.hpp"
#include "sleuth/ingest/transcript.hpp"
#include "sleuth/llm/model.hpp"
#include "sleuth/retrieval/sources.hpp"
#include "sleuth/service/run_store.hpp"
#include "sleuth/verdict/verdict.hpp"

namespace sleuth::service {

struct RunOptions {
    std::string theme;
    /// Corpus for the theme; empty means the run goes without corpus grounding.
    std::optional<std::filesystem::path> corpus_dir;
    bool run_bender = true;
    bender::PromptConfig prompt;
    int per_source_k = 3;
    int comment_limit = ingest::kDefaultCommentLimit;
    std::string caption_language = "en";
    std::size_t max_parallel_claims = 4;
    ingest::NormalizeOptions normalize;
    claims::ExtractionSettings extraction;
    verdict::AssessmentSettings assessment;
    bender::BenderSettings bender;
};

nlohmann::json to_json(const RunOptions& options);

struct PipelineServices {
    ingest::PlatformClient& platform;
    llm::LanguageModel& model;
    std::vector<retrieval::Retriever*> retrievers;
    bender::PromptTemplates templates;
};

/// Drives ingest -> claims -> retrieval -> verdict -> report -> bender for
/// one run, persisting each stage's artifacts in the run directory. Stage
/// failures end the run FAILED with the stage and error kind recorded; they
/// are never thrown past the run.
class Pipeline {
  public:
    Pipeline(RunStore& store, PipelineServices services);

    /// Creates the run (PENDING) without executing it.
    RunRecord start(const std::string& video_id, const RunOptions& options);
    /// Executes a PENDING run to completion or failure.
    RunRecord execute(const std::string& run_id, const RunOptions& options);
    /// start + execute.
    RunRecord run_pipeline(const std::string& video_id, const RunOptions& options);

    /// New draft for a run whose report is ready, optionally replying to one
    /// of the fetched comments. Throws NotFound, IllegalTransition.
    DraftRecord regenerate(const std::string& run_id, const std::optional<std::string>& target_comment_id,
                           const RunOptions& options);

    [[nodiscard]] RunStore& store() { return store_; }

  private:
    bender::BenderInputs bender_inputs(const RunRecord& run, const RunOptions& options,
                                       const std::optional<std::string>& target_comment_id) const;

    RunStore& store_;
    PipelineServices services_;
};

}  // namespace sleuth::service
