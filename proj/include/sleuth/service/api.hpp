#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sleuth/service/pipeline.hpp"
#include "sleuth/service/posting.hpp"
#include "sleuth/service/run_store.hpp"

namespace httplib {
class Server;
}

namespace sleuth::service {

struct ApiDependencies {
    RunStore& store;
    Pipeline& pipeline;
    PostingScheduler& scheduler;
    PostingPolicy policy;
    /// Builds run options for a theme; throws PreconditionError for an unknown one.
    std::function<RunOptions(const std::string& theme, bool run_bender)> options_for;
};

/// Queue entry as shown by GET /queue.
struct QueuedPost {
    std::string draft_id;
    std::string run_id;
    std::string idempotency_key;
    bool dry_run = false;
    std::string state;  // queued, dispatching, posted, failed
    Timestamp enqueued_at;
    std::optional<std::string> error;
};

/// JSON-over-HTTP API for the operator console:
///   POST /runs, GET /runs, GET /runs/{id}, GET /runs/{id}/report?format=md|txt|json,
///   GET /runs/{id}/drafts, PUT /drafts/{id}, POST /drafts/{id}/regenerate,
///   POST /drafts/{id}/approve, POST /drafts/{id}/post, GET /queue.
/// Mutations honour an `Idempotency-Key` header. Runs execute on background
/// threads; posts go through one dispatcher thread.
class ApiServer {
  public:
    explicit ApiServer(ApiDependencies deps);
    ~ApiServer();

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds and serves on a background thread; returns the bound port
    /// (pass 0 for an ephemeral one). Throws IoError when binding fails.
    int start(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void listen(const std::string& host, int port);
    void stop();

    /// Blocks until background runs and queued posts have finished.
    void drain();

  private:
    void install_routes();
    void dispatcher_loop();
    nlohmann::json queue_json() const;
    nlohmann::json draft_json(const DraftRecord& draft) const;

    ApiDependencies deps_;
    std::unique_ptr<httplib::Server> server_;
    std::thread server_thread_;

    std::mutex runs_mutex_;
    std::condition_variable runs_cv_;
    std::vector<std::thread> run_threads_;
    int active_runs_ = 0;

    mutable std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::deque<QueuedPost> queue_;
    std::vector<QueuedPost> finished_;
    bool dispatching_ = false;
    bool stopping_ = false;
    std::thread dispatcher_;
};

}  // namespace sleuth::service
