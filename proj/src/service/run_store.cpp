#include "sleuth/service/run_store.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"

namespace sleuth::service {
namespace {

Timestamp parse_time(const nlohmann::json& j) {
    const auto t = parse_iso8601(j.get<std::string>());
    if (!t) throw ParseError("bad timestamp: " + j.get<std::string>(), 0);
    return *t;
}

RunStatus parse_status(const nlohmann::json& j) {
    const auto s = run_status_from_string(j.get<std::string>());
    if (!s) throw ParseError("unknown run status: " + j.get<std::string>(), 0);
    return *s;
}

nlohmann::json optional_json(const std::optional<std::string>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json();
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
}

bool safe_name(std::string_view name) {
    return !name.empty() && name.find("..") == std::string_view::npos &&
           std::all_of(name.begin(), name.end(), [](char c) {
               return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
           });
}

}  // namespace

std::string_view to_string(RunStatus s) noexcept {
    switch (s) {
        case RunStatus::Pending: return "PENDING";
        case RunStatus::Running: return "RUNNING";
        case RunStatus::ReportReady: return "REPORT_READY";
        case RunStatus::CommentReady: return "COMMENT_READY";
        case RunStatus::Posted: return "POSTED";
        case RunStatus::Failed: return "FAILED";
    }
    return "FAILED";
}

std::optional<RunStatus> run_status_from_string(std::string_view s) noexcept {
    for (auto status : {RunStatus::Pending, RunStatus::Running, RunStatus::ReportReady, RunStatus::CommentReady,
                        RunStatus::Posted, RunStatus::Failed}) {
        if (to_string(status) == s) return status;
    }
    return std::nullopt;
}

bool is_terminal(RunStatus s) noexcept {
    return s == RunStatus::Posted || s == RunStatus::Failed;
}

bool transition_allowed(RunStatus from, RunStatus to) noexcept {
    if (is_terminal(from)) return false;
    if (to == RunStatus::Failed) return true;
    return static_cast<int>(to) == static_cast<int>(from) + 1;
}

bool RunRecord::reached(RunStatus s) const {
    return std::any_of(transitions.begin(), transitions.end(), [&](const StatusChange& c) { return c.status == s; });
}

nlohmann::json to_json(const RunRecord& r) {
    nlohmann::json transitions = nlohmann::json::array();
    for (const auto& t : r.transitions) {
        transitions.push_back({{"status", to_string(t.status)}, {"at", format_iso8601(t.at)}});
    }
    return {{"run_id", r.run_id},
            {"video_id", r.video_id},
            {"theme", r.theme},
            {"status", to_string(r.status)},
            {"error", optional_json(r.error)},
            {"failed_stage", optional_json(r.failed_stage)},
            {"transitions", transitions},
            {"draft_ids", r.draft_ids},
            {"details", r.details}};
}

RunRecord run_record_from_json(const nlohmann::json& j) {
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.video_id = j.at("video_id").get<std::string>();
    r.theme = j.value("theme", "");
    r.status = parse_status(j.at("status"));
    r.error = optional_string(j, "error");
    r.failed_stage = optional_string(j, "failed_stage");
    for (const auto& t : j.at("transitions")) r.transitions.push_back({parse_status(t.at("status")), parse_time(t.at("at"))});
    r.draft_ids = j.value("draft_ids", std::vector<std::string>{});
    r.details = j.value("details", nlohmann::json::object());
    return r;
}

std::string DraftRecord::label() const {
    return draft.target_comment_id ? "Reply to user" : "General comment";
}

nlohmann::json to_json(const DraftRecord& d) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& h : d.history) history.push_back(bender::to_json(h));
    nlohmann::json evaluations = nlohmann::json::array();
    for (const auto& e : d.evaluations) {
        evaluations.push_back({{"scores", bender::to_json(e)}, {"overall_score", bender::overall_score(e)}});
    }
    return {{"draft_id", d.draft_id},
            {"run_id", d.run_id},
            {"label", d.label()},
            {"draft", bender::to_json(d.draft)},
            {"history", history},
            {"evaluations", evaluations},
            {"approved", d.approved},
            {"edited", d.edited},
            {"post", d.post ? to_json(*d.post) : nlohmann::json()},
            {"created_at", format_iso8601(d.created_at)}};
}

DraftRecord draft_record_from_json(const nlohmann::json& j) {
    DraftRecord d;
    d.draft_id = j.at("draft_id").get<std::string>();
    d.run_id = j.at("run_id").get<std::string>();
    d.draft = bender::comment_draft_from_json(j.at("draft"));
    for (const auto& h : j.at("history")) d.history.push_back(bender::comment_draft_from_json(h));
    for (const auto& e : j.at("evaluations")) d.evaluations.push_back(bender::rubric_from_json(e.at("scores")));
    d.approved = j.value("approved", false);
    d.edited = j.value("edited", false);
    if (j.contains("post") && !j.at("post").is_null()) d.post = post_outcome_from_json(j.at("post"));
    d.created_at = parse_time(j.at("created_at"));
    return d;
}

RunStatus verify_event_log(const std::filesystem::path& events_file) {
    std::ifstream in(events_file);
    if (!in) throw IoError("cannot open " + events_file.string());
    std::optional<RunStatus> current;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json event;
        try {
            event = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(events_file.string() + ": " + e.what(), line_no);
        }
        if (event.value("type", "") != "status") continue;
        const auto to = run_status_from_string(event.at("to").get<std::string>());
        if (!to) throw ParseError("unknown status in event log", line_no);
        if (!current) {
            if (*to != RunStatus::Pending) throw IllegalTransition("event log does not start at PENDING");
        } else if (!transition_allowed(*current, *to)) {
            throw IllegalTransition(fmt::format("{} -> {} at line {}", to_string(*current), to_string(*to), line_no));
        }
        current = *to;
    }
    if (!current) throw ParseError("event log has no status events", line_no);
    return *current;
}

RunStore::RunStore(std::filesystem::path data_dir, Clock& clock) : data_dir_(std::move(data_dir)), clock_(clock) {
    std::filesystem::create_directories(data_dir_ / "runs");
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(data_dir_ / "runs")) {
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "state.json")) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
        RunRecord record = run_record_from_json(nlohmann::json::parse(read_file(dir / "state.json")));
        std::size_t events = 0;
        if (std::ifstream in(dir / "events.jsonl"); in) {
            for (std::string line; std::getline(in, line);) events += trim(line).empty() ? 0 : 1;
        }
        event_seq_[record.run_id] = events;
        for (const auto& draft_id : record.draft_ids) {
            const auto file = dir / "drafts" / (draft_id + ".json");
            if (std::filesystem::exists(file)) {
                drafts_.emplace(draft_id, draft_record_from_json(nlohmann::json::parse(read_file(file))));
            }
        }
        order_.push_back(record.run_id);
        runs_.emplace(record.run_id, std::move(record));
    }
    std::sort(order_.begin(), order_.end(), [&](const std::string& a, const std::string& b) {
        const auto& ta = runs_.at(a).transitions;
        const auto& tb = runs_.at(b).transitions;
        const auto ca = ta.empty() ? Timestamp{} : ta.front().at;
        const auto cb = tb.empty() ? Timestamp{} : tb.front().at;
        return ca != cb ? ca < cb : a < b;
    });
    if (const auto file = data_dir_ / "idempotency.jsonl"; std::filesystem::exists(file)) {
        std::ifstream in(file);
        for (std::string line; std::getline(in, line);) {
            if (trim(line).empty()) continue;
            const auto j = nlohmann::json::parse(line);
            idempotency_[j.at("key").get<std::string>()] = j.at("response");
        }
    }
    std::lock_guard lock(mutex_);
    for (auto& [id, record] : runs_) {
        if (record.status == RunStatus::Pending || record.status == RunStatus::Running) {
            spdlog::warn("run {} was left {} by a previous process; marking it FAILED", id, to_string(record.status));
            const std::string stage =
                record.status == RunStatus::Pending ? "queue" : record.details.value("stage", "unknown");
            transition_locked(id, RunStatus::Failed, "interrupted", stage);
        }
    }
}

std::filesystem::path RunStore::run_dir(const std::string& run_id) const {
    if (!safe_name(run_id)) throw NotFound("invalid run id: " + run_id);
    return data_dir_ / "runs" / run_id;
}

RunRecord& RunStore::run_locked(const std::string& run_id) {
    const auto it = runs_.find(run_id);
    if (it == runs_.end()) throw NotFound("unknown run " + run_id);
    return it->second;
}

DraftRecord& RunStore::draft_locked(const std::string& draft_id) {
    const auto it = drafts_.find(draft_id);
    if (it == drafts_.end()) throw NotFound("unknown draft " + draft_id);
    return it->second;
}

void RunStore::append_event_locked(const std::string& run_id, nlohmann::json event) {
    event["seq"] = ++event_seq_[run_id];
    event["at"] = format_iso8601(clock_.now());
    append_line(run_dir(run_id) / "events.jsonl", event.dump());
}

void RunStore::persist_run_locked(const RunRecord& record) {
    write_file_atomic(run_dir(record.run_id) / "state.json", to_json(record).dump(2) + "\n");
}

void RunStore::persist_draft_locked(const DraftRecord& record) {
    const auto dir = run_dir(record.run_id) / "drafts";
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / (record.draft_id + ".json"), to_json(record).dump(2) + "\n");
}

RunRecord RunStore::create_run(const std::string& video_id, const std::string& theme) {
    if (!safe_name(video_id)) throw PreconditionError("invalid video id: " + video_id);
    std::lock_guard lock(mutex_);
    const Timestamp now = clock_.now();
    std::string run_id = video_id + "_" + format_compact(now);
    for (int n = 2; runs_.contains(run_id) || std::filesystem::exists(data_dir_ / "runs" / run_id); ++n) {
        run_id = fmt::format("{}_{}-{}", video_id, format_compact(now), n);
    }
    RunRecord record;
    record.run_id = run_id;
    record.video_id = video_id;
    record.theme = theme;
    record.status = RunStatus::Pending;
    record.transitions.push_back({RunStatus::Pending, now});
    std::filesystem::create_directories(run_dir(run_id));
    append_event_locked(run_id, {{"type", "status"}, {"to", "PENDING"}, {"video_id", video_id}, {"theme", theme}});
    persist_run_locked(record);
    order_.push_back(run_id);
    return runs_.emplace(run_id, std::move(record)).first->second;
}

std::optional<RunRecord> RunStore::find_run(const std::string& run_id) const {
    std::lock_guard lock(mutex_);
    const auto it = runs_.find(run_id);
    if (it == runs_.end()) return std::nullopt;
    return it->second;
}

RunRecord RunStore::get_run(const std::string& run_id) const {
    auto r = find_run(run_id);
    if (!r) throw NotFound("unknown run " + run_id);
    return *r;
}

std::vector<RunRecord> RunStore::list_runs() const {
    std::lock_guard lock(mutex_);
    std::vector<RunRecord> out;
    for (const auto& id : order_) out.push_back(runs_.at(id));
    return out;
}

RunRecord& RunStore::transition_locked(const std::string& run_id, RunStatus to, std::optional<std::string> error,
                                       std::optional<std::string> stage) {
    RunRecord& record = run_locked(run_id);
    if (!transition_allowed(record.status, to)) {
        throw IllegalTransition(fmt::format("run {}: {} -> {} is not allowed", run_id, to_string(record.status),
                                            to_string(to)));
    }
    nlohmann::json event{{"type", "status"}, {"from", to_string(record.status)}, {"to", to_string(to)}};
    if (error) event["error"] = *error;
    if (stage) event["stage"] = *stage;
    append_event_locked(run_id, std::move(event));
    record.status = to;
    record.transitions.push_back({to, clock_.now()});
    if (to == RunStatus::Failed) {
        record.error = error;
        record.failed_stage = stage;
    }
    persist_run_locked(record);
    return record;
}

RunRecord RunStore::transition(const std::string& run_id, RunStatus to, std::optional<std::string> error,
                               std::optional<std::string> stage) {
    std::lock_guard lock(mutex_);
    return transition_locked(run_id, to, std::move(error), std::move(stage));
}

RunRecord RunStore::set_detail(const std::string& run_id, const std::string& key, nlohmann::json value) {
    std::lock_guard lock(mutex_);
    RunRecord& record = run_locked(run_id);
    record.details[key] = std::move(value);
    persist_run_locked(record);
    return record;
}

void RunStore::write_artifact(const std::string& run_id, const std::string& name, std::string_view contents) {
    if (!safe_name(name)) throw PreconditionError("invalid artifact name: " + name);
    std::lock_guard lock(mutex_);
    (void)run_locked(run_id);
    write_file_atomic(run_dir(run_id) / name, contents);
    append_event_locked(run_id, {{"type", "artifact"}, {"name", name}, {"bytes", contents.size()}});
}

std::optional<std::string> RunStore::read_artifact(const std::string& run_id, const std::string& name) const {
    if (!safe_name(name)) return std::nullopt;
    {
        std::lock_guard lock(mutex_);
        if (!runs_.contains(run_id)) throw NotFound("unknown run " + run_id);
    }
    const auto path = run_dir(run_id) / name;
    if (!std::filesystem::exists(path)) return std::nullopt;
    return read_file(path);
}

DraftRecord RunStore::add_draft(const std::string& run_id, bender::BenderResult result) {
    std::lock_guard lock(mutex_);
    RunRecord& run = run_locked(run_id);
    DraftRecord d;
    d.draft_id = fmt::format("{}-d{}", run_id, run.draft_ids.size() + 1);
    d.run_id = run_id;
    d.draft = std::move(result.final_draft);
    d.history = std::move(result.drafts);
    d.evaluations = std::move(result.evaluations);
    d.created_at = clock_.now();
    persist_draft_locked(d);
    run.draft_ids.push_back(d.draft_id);
    persist_run_locked(run);
    append_event_locked(run_id, {{"type", "draft_added"},
                                 {"draft_id", d.draft_id},
                                 {"generation", d.draft.generation},
                                 {"label", d.label()}});
    return drafts_.emplace(d.draft_id, d).first->second;
}

std::optional<DraftRecord> RunStore::find_draft(const std::string& draft_id) const {
    std::lock_guard lock(mutex_);
    const auto it = drafts_.find(draft_id);
    if (it == drafts_.end()) return std::nullopt;
    return it->second;
}

DraftRecord RunStore::get_draft(const std::string& draft_id) const {
    auto d = find_draft(draft_id);
    if (!d) throw NotFound("unknown draft " + draft_id);
    return *d;
}

std::vector<DraftRecord> RunStore::drafts_for(const std::string& run_id) const {
    std::lock_guard lock(mutex_);
    const auto it = runs_.find(run_id);
    if (it == runs_.end()) throw NotFound("unknown run " + run_id);
    std::vector<DraftRecord> out;
    for (const auto& id : it->second.draft_ids) {
        if (const auto d = drafts_.find(id); d != drafts_.end()) out.push_back(d->second);
    }
    return out;
}

DraftRecord RunStore::approve_draft(const std::string& draft_id) {
    std::lock_guard lock(mutex_);
    DraftRecord& d = draft_locked(draft_id);
    const RunRecord& run = run_locked(d.run_id);
    if (run.status != RunStatus::CommentReady) {
        throw IllegalTransition(fmt::format("cannot approve a draft while run {} is {}", run.run_id,
                                            to_string(run.status)));
    }
    if (!d.approved) {
        d.approved = true;
        persist_draft_locked(d);
        append_event_locked(d.run_id, {{"type", "draft_approved"}, {"draft_id", draft_id}});
    }
    return d;
}

DraftRecord RunStore::edit_draft(const std::string& draft_id, const std::string& text) {
    if (trim(text).empty()) throw PreconditionError("draft text must not be empty");
    std::lock_guard lock(mutex_);
    DraftRecord& d = draft_locked(draft_id);
    const RunRecord& run = run_locked(d.run_id);
    if (run.status != RunStatus::CommentReady) {
        throw IllegalTransition(fmt::format("cannot edit a draft while run {} is {}", run.run_id,
                                            to_string(run.status)));
    }
    d.draft.text = trim(text);
    d.edited = true;
    d.approved = false;
    persist_draft_locked(d);
    append_event_locked(d.run_id, {{"type", "draft_edited"}, {"draft_id", draft_id}});
    return d;
}

DraftRecord RunStore::record_post(const std::string& draft_id, const PostOutcome& outcome) {
    std::lock_guard lock(mutex_);
    DraftRecord& d = draft_locked(draft_id);
    d.post = outcome;
    persist_draft_locked(d);
    append_event_locked(d.run_id, {{"type", "post"}, {"draft_id", draft_id}, {"outcome", to_json(outcome)}});
    if (outcome.succeeded()) transition_locked(d.run_id, RunStatus::Posted, std::nullopt, std::nullopt);
    return d;
}

std::optional<nlohmann::json> RunStore::idempotent_response(const std::string& key) const {
    std::lock_guard lock(mutex_);
    const auto it = idempotency_.find(key);
    if (it == idempotency_.end()) return std::nullopt;
    return std::optional<nlohmann::json>(std::in_place, it->second);
}

void RunStore::remember_response(const std::string& key, const nlohmann::json& response) {
    std::lock_guard lock(mutex_);
    if (idempotency_.contains(key)) return;
    idempotency_[key] = response;
    append_line(data_dir_ / "idempotency.jsonl", nlohmann::json{{"key", key}, {"response", response}}.dump());
}

}  // namespace sleuth::service
