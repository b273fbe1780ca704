#include <gtest/gtest.h>

#include "fakes.hpp"
#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"
#include "sleuth/service/run_store.hpp"

namespace sleuth::service {
namespace {

using namespace std::chrono_literals;

Timestamp t0() { return *parse_iso8601("2024-06-01T08:00:00Z"); }

bender::BenderResult result(const std::string& text, std::optional<std::string> target = std::nullopt) {
    bender::BenderResult r;
    r.final_draft = {text, {}, std::move(target), 0};
    r.drafts = {r.final_draft};
    return r;
}

RunRecord to_comment_ready(RunStore& store, const std::string& video = "vid1") {
    const auto run = store.create_run(video, "nutrition");
    store.transition(run.run_id, RunStatus::Running);
    store.transition(run.run_id, RunStatus::ReportReady);
    return store.transition(run.run_id, RunStatus::CommentReady);
}

TEST(Status, TransitionTable) {
    const std::vector<RunStatus> all = {RunStatus::Pending,      RunStatus::Running, RunStatus::ReportReady,
                                        RunStatus::CommentReady, RunStatus::Posted,  RunStatus::Failed};
    for (auto from : all) {
        for (auto to : all) {
            const bool expected = !is_terminal(from) && (to == RunStatus::Failed || static_cast<int>(to) ==
                                                                                        static_cast<int>(from) + 1);
            EXPECT_EQ(transition_allowed(from, to), expected) << to_string(from) << "->" << to_string(to);
        }
        EXPECT_EQ(run_status_from_string(to_string(from)), from);
    }
    EXPECT_FALSE(run_status_from_string("DONE").has_value());
}

TEST(RunStore, LifecycleIsPersistedAndLogged) {
    testing::TempDir dir;
    SimulatedClock clock(t0());
    RunStore store(dir.path(), clock);
    const auto run = store.create_run("vid1", "nutrition");
    EXPECT_EQ(run.run_id, "vid1_20240601T080000Z");
    EXPECT_EQ(run.status, RunStatus::Pending);
    EXPECT_THROW(store.transition(run.run_id, RunStatus::ReportReady), IllegalTransition);
    store.transition(run.run_id, RunStatus::Running);
    store.write_artifact(run.run_id, "report.md", "# hi\n");
    const auto failed = store.transition(run.run_id, RunStatus::Failed, "boom", "claims");
    EXPECT_EQ(failed.error, "boom");
    EXPECT_EQ(failed.failed_stage, "claims");
    EXPECT_THROW(store.transition(run.run_id, RunStatus::Running), IllegalTransition);
    EXPECT_EQ(verify_event_log(store.run_dir(run.run_id) / "events.jsonl"), RunStatus::Failed);
    EXPECT_EQ(store.read_artifact(run.run_id, "report.md"), "# hi\n");
    EXPECT_FALSE(store.read_artifact(run.run_id, "missing.md").has_value());
    EXPECT_FALSE(store.read_artifact(run.run_id, "../state.json").has_value());
    EXPECT_THROW(store.get_run("nope"), NotFound);
}

TEST(RunStore, SameSecondRunsGetDistinctIds) {
    testing::TempDir dir;
    SimulatedClock clock(t0());
    RunStore store(dir.path(), clock);
    const auto a = store.create_run("vid1", "");
    const auto b = store.create_run("vid1", "");
    EXPECT_NE(a.run_id, b.run_id);
    EXPECT_EQ(store.list_runs().size(), 2u);
    EXPECT_THROW(store.create_run("../etc", ""), PreconditionError);
}

TEST(RunStore, RestartMarksUnfinishedRunsFailed) {
    testing::TempDir dir;
    SimulatedClock clock(t0());
    std::string pending, running, done;
    {
        RunStore store(dir.path(), clock);
        pending = store.create_run("a", "").run_id;
        clock.advance(1s);
        running = store.create_run("b", "").run_id;
        store.transition(running, RunStatus::Running);
        store.set_detail(running, "stage", "retrieval");
        clock.advance(1s);
        done = to_comment_ready(store, "c").run_id;
    }
    RunStore reloaded(dir.path(), clock);
    const auto runs = reloaded.list_runs();
    ASSERT_EQ(runs.size(), 3u);
    EXPECT_EQ(runs[0].run_id, pending);
    EXPECT_EQ(reloaded.get_run(pending).failed_stage, "queue");
    EXPECT_EQ(reloaded.get_run(running).status, RunStatus::Failed);
    EXPECT_EQ(reloaded.get_run(running).failed_stage, "retrieval");
    EXPECT_EQ(reloaded.get_run(running).error, "interrupted");
    EXPECT_EQ(reloaded.get_run(done).status, RunStatus::CommentReady);
    for (const auto& r : runs) EXPECT_NO_THROW(verify_event_log(reloaded.run_dir(r.run_id) / "events.jsonl"));
}

TEST(RunStore, DraftsApproveEditAndPost) {
    testing::TempDir dir;
    SimulatedClock clock(t0());
    RunStore store(dir.path(), clock);
    const auto run = store.create_run("vid1", "");
    const auto early = store.add_draft(run.run_id, result("Too early"));
    EXPECT_THROW(store.approve_draft(early.draft_id), IllegalTransition);
    store.transition(run.run_id, RunStatus::Running);
    store.transition(run.run_id, RunStatus::ReportReady);
    store.transition(run.run_id, RunStatus::CommentReady);

    const auto reply = store.add_draft(run.run_id, result("Reply text", "c9"));
    EXPECT_EQ(reply.draft_id, run.run_id + "-d2");
    EXPECT_EQ(reply.label(), "Reply to user");
    EXPECT_EQ(early.label(), "General comment");

    EXPECT_TRUE(store.approve_draft(reply.draft_id).approved);
    const auto edited = store.edit_draft(reply.draft_id, "  Edited text ");
    EXPECT_EQ(edited.draft.text, "Edited text");
    EXPECT_TRUE(edited.edited);
    EXPECT_FALSE(edited.approved);
    EXPECT_THROW(store.edit_draft(reply.draft_id, " "), PreconditionError);
    store.approve_draft(reply.draft_id);

    PostOutcome dry;
    dry.idempotency_key = "k0";
    dry.draft_id = reply.draft_id;
    dry.dry_run = true;
    dry.posted_at = clock.now();
    store.record_post(reply.draft_id, dry);
    EXPECT_EQ(store.get_run(run.run_id).status, RunStatus::CommentReady);

    PostOutcome real = dry;
    real.idempotency_key = "k1";
    real.dry_run = false;
    real.platform_comment_id = "p1";
    store.record_post(reply.draft_id, real);
    EXPECT_EQ(store.get_run(run.run_id).status, RunStatus::Posted);
    EXPECT_THROW(store.approve_draft(early.draft_id), IllegalTransition);

    RunStore reloaded(dir.path(), clock);
    const auto drafts = reloaded.drafts_for(run.run_id);
    ASSERT_EQ(drafts.size(), 2u);
    EXPECT_EQ(drafts[1].post->platform_comment_id, "p1");
    EXPECT_EQ(drafts[1].draft.text, "Edited text");
    EXPECT_EQ(verify_event_log(reloaded.run_dir(run.run_id) / "events.jsonl"), RunStatus::Posted);
}

TEST(RunStore, IdempotentResponsesPersist) {
    testing::TempDir dir;
    SimulatedClock clock(t0());
    {
        RunStore store(dir.path(), clock);
        store.remember_response("key-1", {{"run_id", "r1"}});
        store.remember_response("key-1", {{"run_id", "r2"}});
    }
    RunStore reloaded(dir.path(), clock);
    EXPECT_EQ(reloaded.idempotent_response("key-1"), nlohmann::json({{"run_id", "r1"}}));
    EXPECT_FALSE(reloaded.idempotent_response("key-2").has_value());
}

TEST(EventLog, RejectsIllegalSequences) {
    testing::TempDir dir;
    const auto file = dir / "events.jsonl";
    write_file_atomic(file, "{\"type\":\"status\",\"to\":\"PENDING\"}\n{\"type\":\"status\",\"to\":\"POSTED\"}\n");
    EXPECT_THROW(verify_event_log(file), IllegalTransition);
    write_file_atomic(file, "{\"type\":\"status\",\"to\":\"RUNNING\"}\n");
    EXPECT_THROW(verify_event_log(file), IllegalTransition);
    write_file_atomic(file, "{\"type\":\"status\",\"to\":\"PENDING\"}\nnot json\n");
    EXPECT_THROW(verify_event_log(file), ParseError);
}

}  // namespace
}  // namespace sleuth::service
