#include "sleuth/service/api.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"

namespace sleuth::service {
namespace {

int status_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Precondition:
        case ErrorKind::SchemaViolation:
        case ErrorKind::Parse:
        case ErrorKind::MissingFrontMatter: return 400;
        case ErrorKind::NotFound: return 404;
        case ErrorKind::IllegalTransition:
        case ErrorKind::PolicyViolation: return 409;
        case ErrorKind::Transport:
        case ErrorKind::Auth:
        case ErrorKind::Llm:
        case ErrorKind::QuotaExceeded:
        case ErrorKind::PlatformRejection: return 502;
        default: return 500;
    }
}

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, std::string_view message) {
    send_json(res, status, {{"error", kind}, {"message", message}});
}

nlohmann::json parse_body(const httplib::Request& req) {
    if (trim(req.body).empty()) return nlohmann::json::object();
    try {
        auto j = nlohmann::json::parse(req.body);
        if (!j.is_object()) throw PreconditionError("request body must be a JSON object");
        return j;
    } catch (const nlohmann::json::parse_error& e) {
        throw PreconditionError(std::string("request body is not valid JSON: ") + e.what());
    }
}

struct Reply {
    int status = 200;
    nlohmann::json body;
};

/// Wraps a handler with error mapping and, for mutations, idempotency keys.
template <typename Fn>
httplib::Server::Handler guarded(RunStore& store, bool mutation, Fn fn) {
    return [&store, mutation, fn](const httplib::Request& req, httplib::Response& res) {
        const std::string key = mutation ? req.get_header_value("Idempotency-Key") : std::string();
        const std::string scoped = key.empty() ? key : req.method + " " + req.path + " " + key;
        try {
            if (!scoped.empty()) {
                if (auto seen = store.idempotent_response(scoped)) {
                    send_json(res, seen->at("status").get<int>(), seen->at("body"));
                    res.set_header("Idempotent-Replay", "true");
                    return;
                }
            }
            Reply reply = fn(req, res);
            if (reply.body.is_null()) return;  // handler wrote a non-JSON body itself
            send_json(res, reply.status, reply.body);
            if (!scoped.empty() && reply.status < 300) {
                store.remember_response(scoped, {{"status", reply.status}, {"body", reply.body}});
            }
        } catch (const Error& e) {
            send_error(res, status_for(e.kind()), to_string(e.kind()), e.what());
        } catch (const nlohmann::json::exception& e) {
            send_error(res, 400, "PreconditionViolation", e.what());
        } catch (const std::exception& e) {
            spdlog::error("{} {}: {}", req.method, req.path, e.what());
            send_error(res, 500, "InternalError", e.what());
        }
    };
}

nlohmann::json run_summary(const RunRecord& r) {
    nlohmann::json j = to_json(r);
    j["created_at"] = r.transitions.empty() ? nlohmann::json() : nlohmann::json(format_iso8601(r.transitions.front().at));
    j["report_available"] = r.reached(RunStatus::ReportReady);
    return j;
}

std::string queue_state_label(const QueuedPost& p) {
    return p.state;
}

}  // namespace

ApiServer::ApiServer(ApiDependencies deps) : deps_(std::move(deps)), server_(std::make_unique<httplib::Server>()) {
    deps_.policy.validate();
    install_routes();
    dispatcher_ = std::thread([this] { dispatcher_loop(); });
}

ApiServer::~ApiServer() {
    stop();
    drain();
    {
        std::lock_guard lock(queue_mutex_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    if (dispatcher_.joinable()) dispatcher_.join();
    std::lock_guard lock(runs_mutex_);
    for (auto& t : run_threads_) {
        if (t.joinable()) t.join();
    }
}

int ApiServer::start(const std::string& host, int port) {
    const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    server_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void ApiServer::listen(const std::string& host, int port) {
    if (!server_->listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
}

void ApiServer::stop() {
    if (server_->is_running()) server_->stop();
    if (server_thread_.joinable()) server_thread_.join();
}

void ApiServer::drain() {
    {
        std::unique_lock lock(runs_mutex_);
        runs_cv_.wait(lock, [&] { return active_runs_ == 0; });
    }
    std::unique_lock lock(queue_mutex_);
    queue_cv_.wait(lock, [&] { return queue_.empty() && !dispatching_; });
}

nlohmann::json ApiServer::draft_json(const DraftRecord& draft) const {
    nlohmann::json j = to_json(draft);
    const auto history = deps_.scheduler.history();
    const RunRecord run = deps_.store.get_run(draft.run_id);
    const bool first_on_video = std::none_of(history.begin(), history.end(), [&](const PostOutcome& o) {
        return o.succeeded() && o.video_id == run.video_id;
    });
    j["post_preview"] = prepare_post_text(draft.draft.text, deps_.policy, first_on_video);
    return j;
}

nlohmann::json ApiServer::queue_json() const {
    const auto history = deps_.scheduler.history();
    const Timestamp now = deps_.store.clock().now();
    const auto window_start = now - std::chrono::hours(24);
    const auto in_window = std::count_if(history.begin(), history.end(), [&](const PostOutcome& o) {
        return o.succeeded() && o.posted_at > window_start;
    });
    const auto item = [](const QueuedPost& p) {
        return nlohmann::json{{"draft_id", p.draft_id},
                              {"run_id", p.run_id},
                              {"dry_run", p.dry_run},
                              {"state", queue_state_label(p)},
                              {"enqueued_at", format_iso8601(p.enqueued_at)},
                              {"error", p.error ? nlohmann::json(*p.error) : nlohmann::json()}};
    };
    nlohmann::json pending = nlohmann::json::array();
    nlohmann::json done = nlohmann::json::array();
    {
        std::lock_guard lock(queue_mutex_);
        for (const auto& p : queue_) pending.push_back(item(p));
        for (const auto& p : finished_) done.push_back(item(p));
    }
    nlohmann::json outcomes = nlohmann::json::array();
    for (const auto& o : history) outcomes.push_back(to_json(o));
    return {{"now", format_iso8601(now)},
            {"next_eligible_at", format_iso8601(deps_.scheduler.next_eligible(deps_.policy))},
            {"posts_in_last_24h", in_window},
            {"daily_cap", deps_.policy.max_posts_per_day},
            {"cap_reached", in_window >= deps_.policy.max_posts_per_day},
            {"policy", to_json(deps_.policy)},
            {"pending", pending},
            {"finished", done},
            {"outcomes", outcomes}};
}

void ApiServer::dispatcher_loop() {
    while (true) {
        QueuedPost item;
        {
            std::unique_lock lock(queue_mutex_);
            queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (queue_.empty()) return;
            queue_.front().state = "dispatching";
            item = queue_.front();
            dispatching_ = true;
        }
        try {
            const DraftRecord draft = deps_.store.get_draft(item.draft_id);
            const RunRecord run = deps_.store.get_run(draft.run_id);
            PostingPolicy policy = deps_.policy;
            policy.dry_run = policy.dry_run || item.dry_run;
            const PostOutcome outcome = deps_.scheduler.schedule_post(
                {item.idempotency_key, run.video_id, draft.draft_id, draft.draft, draft.approved}, policy);
            deps_.store.record_post(draft.draft_id, outcome);
            item.state = "posted";
        } catch (const std::exception& e) {
            spdlog::error("posting {} failed: {}", item.draft_id, e.what());
            item.state = "failed";
            item.error = e.what();
        }
        {
            std::lock_guard lock(queue_mutex_);
            queue_.pop_front();
            finished_.push_back(item);
            dispatching_ = false;
        }
        queue_cv_.notify_all();
    }
}

void ApiServer::install_routes() {
    auto& s = *server_;
    auto& store = deps_.store;

    s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type, Idempotency-Key"},
                           {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"}});
    s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    s.Post("/runs", guarded(store, true, [this](const httplib::Request& req, httplib::Response&) {
               const auto body = parse_body(req);
               const std::string video_id = trim(body.value("video_id", ""));
               if (video_id.empty()) throw PreconditionError("video_id is required");
               const RunOptions options = deps_.options_for(body.value("theme", ""), body.value("run_bender", true));
               const RunRecord run = deps_.pipeline.start(video_id, options);
               {
                   std::lock_guard lock(runs_mutex_);
                   ++active_runs_;
                   run_threads_.emplace_back([this, id = run.run_id, options] {
                       deps_.pipeline.execute(id, options);
                       {
                           std::lock_guard inner(runs_mutex_);
                           --active_runs_;
                       }
                       runs_cv_.notify_all();
                   });
               }
               return Reply{202, {{"run_id", run.run_id}, {"status", to_string(run.status)}}};
           }));

    s.Get("/runs", guarded(store, false, [this](const httplib::Request&, httplib::Response&) {
              nlohmann::json runs = nlohmann::json::array();
              for (const auto& r : deps_.store.list_runs()) runs.push_back(run_summary(r));
              return Reply{200, {{"runs", runs}}};
          }));

    s.Get(R"(/runs/([^/]+))", guarded(store, false, [this](const httplib::Request& req, httplib::Response&) {
              const RunRecord run = deps_.store.get_run(req.matches[1]);
              nlohmann::json j = run_summary(run);
              const auto comments = deps_.store.read_artifact(run.run_id, "comments.json");
              j["comments"] = comments ? nlohmann::json::parse(*comments) : nlohmann::json::array();
              const auto metadata = deps_.store.read_artifact(run.run_id, "metadata.json");
              j["metadata"] = metadata ? nlohmann::json::parse(*metadata) : nlohmann::json();
              return Reply{200, j};
          }));

    s.Get(R"(/runs/([^/]+)/report)", guarded(store, false, [this](const httplib::Request& req, httplib::Response& res) {
              const std::string format = req.has_param("format") ? req.get_param_value("format") : "md";
              const char* name = nullptr;
              const char* type = nullptr;
              if (format == "md") {
                  name = "report.md";
                  type = "text/markdown; charset=utf-8";
              } else if (format == "txt") {
                  name = "report.txt";
                  type = "text/plain; charset=utf-8";
              } else if (format == "json") {
                  name = "report.json";
                  type = "application/json";
              } else {
                  throw PreconditionError("format must be md, txt or json");
              }
              const auto body = deps_.store.read_artifact(req.matches[1], name);
              if (!body) throw NotFound("run " + std::string(req.matches[1]) + " has no report yet");
              res.status = 200;
              res.set_content(*body, type);
              return Reply{200, nullptr};
          }));

    s.Get(R"(/runs/([^/]+)/drafts)", guarded(store, false, [this](const httplib::Request& req, httplib::Response&) {
              nlohmann::json drafts = nlohmann::json::array();
              for (const auto& d : deps_.store.drafts_for(req.matches[1])) drafts.push_back(draft_json(d));
              return Reply{200, {{"drafts", drafts}}};
          }));

    s.Put(R"(/drafts/([^/]+))", guarded(store, true, [this](const httplib::Request& req, httplib::Response&) {
              const auto body = parse_body(req);
              if (!body.contains("text") || !body.at("text").is_string()) throw PreconditionError("text is required");
              return Reply{200, draft_json(deps_.store.edit_draft(req.matches[1], body.at("text").get<std::string>()))};
          }));

    s.Post(R"(/drafts/([^/]+)/regenerate)",
           guarded(store, true, [this](const httplib::Request& req, httplib::Response&) {
               const auto body = parse_body(req);
               const DraftRecord source = deps_.store.get_draft(req.matches[1]);
               const RunRecord run = deps_.store.get_run(source.run_id);
               std::optional<std::string> target;
               if (body.contains("target_comment_id") && !body.at("target_comment_id").is_null()) {
                   target = body.at("target_comment_id").get<std::string>();
               }
               const RunOptions options = deps_.options_for(run.theme, true);
               return Reply{201, draft_json(deps_.pipeline.regenerate(run.run_id, target, options))};
           }));

    s.Post(R"(/drafts/([^/]+)/approve)", guarded(store, true, [this](const httplib::Request& req, httplib::Response&) {
               return Reply{200, draft_json(deps_.store.approve_draft(req.matches[1]))};
           }));

    s.Post(R"(/drafts/([^/]+)/post)", guarded(store, true, [this](const httplib::Request& req, httplib::Response&) {
               const auto body = parse_body(req);
               const DraftRecord draft = deps_.store.get_draft(req.matches[1]);
               const RunRecord run = deps_.store.get_run(draft.run_id);
               if (run.status != RunStatus::CommentReady) {
                   throw IllegalTransition("run " + run.run_id + " is " + std::string(to_string(run.status)));
               }
               if (!draft.approved) throw IllegalTransition("draft " + draft.draft_id + " is not approved");
               QueuedPost item;
               item.draft_id = draft.draft_id;
               item.run_id = run.run_id;
               const std::string key = req.get_header_value("Idempotency-Key");
               item.idempotency_key = key.empty() ? "post:" + draft.draft_id : key;
               item.dry_run = body.value("dry_run", false);
               item.state = "queued";
               item.enqueued_at = deps_.store.clock().now();
               std::size_t ahead = 0;
               {
                   std::lock_guard lock(queue_mutex_);
                   for (const auto& q : queue_) {
                       if (q.draft_id == item.draft_id) throw IllegalTransition("draft is already queued");
                   }
                   ahead = queue_.size();
                   queue_.push_back(item);
               }
               queue_cv_.notify_all();
               const auto interval = std::chrono::duration_cast<std::chrono::milliseconds>(deps_.policy.min_interval);
               const bool dry = deps_.policy.dry_run || item.dry_run;
               const Timestamp eta = dry ? item.enqueued_at
                                         : deps_.scheduler.next_eligible(deps_.policy) +
                                               interval * static_cast<std::int64_t>(ahead);
               return Reply{202,
                            {{"draft_id", item.draft_id},
                             {"queued", true},
                             {"dry_run", dry},
                             {"position", ahead},
                             {"eta", format_iso8601(eta)},
                             {"post_preview", draft_json(draft).at("post_preview")}}};
           }));

    s.Get("/queue", guarded(store, false, [this](const httplib::Request&, httplib::Response&) {
              return Reply{200, queue_json()};
          }));
}

}  // namespace sleuth::service
