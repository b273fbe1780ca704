#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sleuth/bender/bender.hpp"
#include "sleuth/common/clock.hpp"
#include "sleuth/service/posting.hpp"

namespace sleuth::service {

enum class RunStatus { Pending, Running, ReportReady, CommentReady, Posted, Failed };

std::string_view to_string(RunStatus s) noexcept;
std::optional<RunStatus> run_status_from_string(std::string_view s) noexcept;
bool is_terminal(RunStatus s) noexcept;
/// PENDING -> RUNNING -> REPORT_READY -> COMMENT_READY -> POSTED, and FAILED
/// from any non-terminal state.
bool transition_allowed(RunStatus from, RunStatus to) noexcept;

struct StatusChange {
    RunStatus status = RunStatus::Pending;
    Timestamp at;
};

struct RunRecord {
    std::string run_id;
    std::string video_id;
    std::string theme;
    RunStatus status = RunStatus::Pending;
    std::optional<std::string> error;
    std::optional<std::string> failed_stage;
    std::vector<StatusChange> transitions;
    std::vector<std::string> draft_ids;
    /// Free-form facts about the run (caption language, degraded track, ...).
    nlohmann::json details = nlohmann::json::object();

    [[nodiscard]] bool reached(RunStatus s) const;
};

nlohmann::json to_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::json& j);

struct DraftRecord {
    std::string draft_id;
    std::string run_id;
    bender::CommentDraft draft;
    /// Every draft of the generate/improve loop, generation 0 first.
    std::vector<bender::CommentDraft> history;
    std::vector<bender::RubricEvaluation> evaluations;
    bool approved = false;
    bool edited = false;
    std::optional<PostOutcome> post;
    Timestamp created_at;

    /// "Reply to user" in reply mode, "General comment" otherwise.
    [[nodiscard]] std::string label() const;
};

nlohmann::json to_json(const DraftRecord& record);
DraftRecord draft_record_from_json(const nlohmann::json& j);

/// Replays an events.jsonl file and checks every status change is legal.
/// Returns the final status; throws IllegalTransition or ParseError.
RunStatus verify_event_log(const std::filesystem::path& events_file);

/// File-backed run state: `<data>/runs/<run_id>/` holds an append-only
/// events.jsonl, the materialized state.json, artifacts and drafts/.
/// Thread-safe; mutations are serialized.
class RunStore {
  public:
    /// Loads existing runs. Runs left PENDING or RUNNING by a previous process
    /// are marked FAILED ("interrupted").
    RunStore(std::filesystem::path data_dir, Clock& clock);

    RunRecord create_run(const std::string& video_id, const std::string& theme);
    [[nodiscard]] std::optional<RunRecord> find_run(const std::string& run_id) const;
    /// Throws NotFound.
    [[nodiscard]] RunRecord get_run(const std::string& run_id) const;
    /// Oldest first.
    [[nodiscard]] std::vector<RunRecord> list_runs() const;

    /// Throws IllegalTransition.
    RunRecord transition(const std::string& run_id, RunStatus to, std::optional<std::string> error = std::nullopt,
                         std::optional<std::string> stage = std::nullopt);
    RunRecord set_detail(const std::string& run_id, const std::string& key, nlohmann::json value);

    void write_artifact(const std::string& run_id, const std::string& name, std::string_view contents);
    [[nodiscard]] std::optional<std::string> read_artifact(const std::string& run_id, const std::string& name) const;

    DraftRecord add_draft(const std::string& run_id, bender::BenderResult result);
    [[nodiscard]] std::optional<DraftRecord> find_draft(const std::string& draft_id) const;
    /// Throws NotFound.
    [[nodiscard]] DraftRecord get_draft(const std::string& draft_id) const;
    [[nodiscard]] std::vector<DraftRecord> drafts_for(const std::string& run_id) const;
    /// Throws IllegalTransition once the run is POSTED or FAILED.
    DraftRecord approve_draft(const std::string& draft_id);
    /// Operator edit; clears approval.
    DraftRecord edit_draft(const std::string& draft_id, const std::string& text);
    /// Attaches an outcome; a successful real post moves the run to POSTED.
    DraftRecord record_post(const std::string& draft_id, const PostOutcome& outcome);

    /// Stored response for an idempotency key, if the request was seen before.
    [[nodiscard]] std::optional<nlohmann::json> idempotent_response(const std::string& key) const;
    void remember_response(const std::string& key, const nlohmann::json& response);

    [[nodiscard]] const std::filesystem::path& data_dir() const { return data_dir_; }
    [[nodiscard]] std::filesystem::path run_dir(const std::string& run_id) const;
    [[nodiscard]] std::filesystem::path posts_ledger() const { return data_dir_ / "posts.jsonl"; }
    [[nodiscard]] Clock& clock() const { return clock_; }

  private:
    RunRecord& run_locked(const std::string& run_id);
    DraftRecord& draft_locked(const std::string& draft_id);
    void append_event_locked(const std::string& run_id, nlohmann::json event);
    void persist_run_locked(const RunRecord& record);
    void persist_draft_locked(const DraftRecord& record);
    RunRecord& transition_locked(const std::string& run_id, RunStatus to, std::optional<std::string> error,
                                 std::optional<std::string> stage);

    std::filesystem::path data_dir_;
    Clock& clock_;
    mutable std::mutex mutex_;
    std::map<std::string, RunRecord> runs_;
    std::map<std::string, DraftRecord> drafts_;
    std::map<std::string, nlohmann::json> idempotency_;
    std::vector<std::string> order_;
    std::map<std::string, std::size_t> event_seq_;
};

}  // namespace sleuth::service
