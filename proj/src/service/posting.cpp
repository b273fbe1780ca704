#include "sleuth/service/posting.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"
#include "sleuth/common/url.hpp"

namespace sleuth::service {
namespace {

constexpr std::chrono::hours kCapWindow{24};

nlohmann::json optional_json(const std::optional<std::string>& value) {
    return value ? nlohmann::json(*value) : nlohmann::json();
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
}

}  // namespace

std::string strip_urls(std::string_view text) {
    std::string current(text);
    bool placed = false;
    for (auto spans = find_url_spans(current); !spans.empty(); spans = find_url_spans(current)) {
        std::string out;
        std::size_t pos = 0;
        for (auto span : spans) {
            // "(https://x)" goes as a whole so no empty brackets are left behind.
            if (span.position > 0 && current[span.position - 1] == '(' &&
                span.position + span.length < current.size() && current[span.position + span.length] == ')') {
                --span.position;
                span.length += 2;
            }
            if (span.position < pos) continue;
            out.append(current, pos, span.position - pos);
            if (!placed) {
                if (!out.empty() && out.back() != ' ' && out.back() != '\n') out += ' ';
                out += kSourcePlaceholder;
                placed = true;
            }
            pos = span.position + span.length;
        }
        out.append(current, pos);
        // Tidying can join a bare word to a ".com" left behind, so rescan after it.
        current = tidy_after_removal(std::move(out));
    }
    return current;
}

void PostingPolicy::validate() const {
    if (min_interval <= std::chrono::minutes::zero()) throw PreconditionError("min_interval must be positive");
    if (max_posts_per_day < 1) throw PreconditionError("max_posts_per_day must be at least 1");
}

nlohmann::json to_json(const PostingPolicy& policy) {
    return {{"strip_urls", policy.strip_urls},
            {"min_interval_minutes", policy.min_interval.count()},
            {"max_posts_per_day", policy.max_posts_per_day},
            {"dry_run", policy.dry_run},
            {"ai_disclosure", policy.ai_disclosure},
            {"disclosure_text", policy.disclosure_text}};
}

PostingPolicy posting_policy_from_json(const nlohmann::json& j, PostingPolicy defaults) {
    PostingPolicy p = std::move(defaults);
    p.strip_urls = j.value("strip_urls", p.strip_urls);
    p.min_interval = std::chrono::minutes(j.value("min_interval_minutes", p.min_interval.count()));
    p.max_posts_per_day = j.value("max_posts_per_day", p.max_posts_per_day);
    p.dry_run = j.value("dry_run", p.dry_run);
    p.ai_disclosure = j.value("ai_disclosure", p.ai_disclosure);
    p.disclosure_text = j.value("disclosure_text", p.disclosure_text);
    p.validate();
    return p;
}

nlohmann::json to_json(const PostOutcome& outcome) {
    return {{"idempotency_key", outcome.idempotency_key},
            {"video_id", outcome.video_id},
            {"draft_id", outcome.draft_id},
            {"posted_text", outcome.posted_text},
            {"posted_at", format_iso8601(outcome.posted_at)},
            {"platform_comment_id", optional_json(outcome.platform_comment_id)},
            {"rejection_reason", optional_json(outcome.rejection_reason)},
            {"dry_run", outcome.dry_run},
            {"policy", to_json(outcome.policy)}};
}

PostOutcome post_outcome_from_json(const nlohmann::json& j) {
    PostOutcome o;
    o.idempotency_key = j.at("idempotency_key").get<std::string>();
    o.video_id = j.at("video_id").get<std::string>();
    o.draft_id = j.at("draft_id").get<std::string>();
    o.posted_text = j.at("posted_text").get<std::string>();
    const auto at = parse_iso8601(j.at("posted_at").get<std::string>());
    if (!at) throw ParseError("bad posted_at timestamp", 0);
    o.posted_at = *at;
    o.platform_comment_id = optional_string(j, "platform_comment_id");
    o.rejection_reason = optional_string(j, "rejection_reason");
    o.dry_run = j.value("dry_run", false);
    o.policy = posting_policy_from_json(j.at("policy"));
    return o;
}

std::string prepare_post_text(std::string_view draft_text, const PostingPolicy& policy, bool first_post_on_video) {
    std::string text = trim(draft_text);
    if (policy.ai_disclosure && first_post_on_video && !trim(policy.disclosure_text).empty()) {
        text += "\n\n" + trim(policy.disclosure_text);
    }
    return policy.strip_urls ? strip_urls(text) : text;
}

PostingScheduler::PostingScheduler(ingest::PlatformClient& platform, Clock& clock,
                                   std::optional<std::filesystem::path> ledger_path)
    : platform_(platform), clock_(clock), ledger_path_(std::move(ledger_path)) {
    if (!ledger_path_ || !std::filesystem::exists(*ledger_path_)) return;
    std::ifstream in(*ledger_path_);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            history_.push_back(post_outcome_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw ParseError(fmt::format("{}: {}", ledger_path_->string(), e.what()), line_no);
        }
    }
}

Timestamp PostingScheduler::next_eligible_locked(const PostingPolicy& policy) const {
    Timestamp earliest = clock_.now();
    for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
        if (!it->succeeded()) continue;
        earliest = std::max(earliest, it->posted_at + std::chrono::duration_cast<std::chrono::milliseconds>(
                                                          policy.min_interval));
        break;
    }
    return earliest;
}

Timestamp PostingScheduler::next_eligible(const PostingPolicy& policy) const {
    std::lock_guard lock(mutex_);
    return next_eligible_locked(policy);
}

std::vector<PostOutcome> PostingScheduler::history() const {
    std::lock_guard lock(mutex_);
    return history_;
}

std::optional<PostOutcome> PostingScheduler::find(const std::string& idempotency_key) const {
    std::lock_guard lock(mutex_);
    for (const auto& o : history_) {
        if (o.idempotency_key == idempotency_key) return o;
    }
    return std::nullopt;
}

void PostingScheduler::record_locked(const PostOutcome& outcome) {
    history_.push_back(outcome);
    if (ledger_path_) append_line(*ledger_path_, to_json(outcome).dump());
}

PostOutcome PostingScheduler::schedule_post(const PostRequest& request, const PostingPolicy& policy) {
    policy.validate();
    if (!request.approved) throw PreconditionError("draft " + request.draft_id + " has not been approved");
    if (request.idempotency_key.empty()) throw PreconditionError("post requests need an idempotency key");
    if (trim(request.draft.text).empty()) throw PreconditionError("cannot post an empty draft");

    std::lock_guard lock(mutex_);
    for (const auto& o : history_) {
        if (o.idempotency_key != request.idempotency_key) continue;
        if (o.succeeded() || (o.dry_run && policy.dry_run)) return o;
    }

    const bool first_on_video = std::none_of(history_.begin(), history_.end(), [&](const PostOutcome& o) {
        return o.succeeded() && o.video_id == request.video_id;
    });
    PostOutcome outcome;
    outcome.idempotency_key = request.idempotency_key;
    outcome.video_id = request.video_id;
    outcome.draft_id = request.draft_id;
    outcome.posted_text = prepare_post_text(request.draft.text, policy, first_on_video);
    outcome.policy = policy;
    outcome.dry_run = policy.dry_run;

    if (policy.dry_run) {
        outcome.posted_at = clock_.now();
        spdlog::info("dry run: would post {} chars on {}", outcome.posted_text.size(), request.video_id);
        record_locked(outcome);
        return outcome;
    }

    const Timestamp dispatch_at = next_eligible_locked(policy);
    const auto in_window = std::count_if(history_.begin(), history_.end(), [&](const PostOutcome& o) {
        return o.succeeded() && o.posted_at > dispatch_at - kCapWindow && o.posted_at <= dispatch_at;
    });
    if (in_window >= policy.max_posts_per_day) {
        throw PolicyViolation(fmt::format("posting at {} would exceed {} posts in 24 hours",
                                          format_iso8601(dispatch_at), policy.max_posts_per_day));
    }

    clock_.sleep_until(dispatch_at);
    outcome.posted_at = clock_.now();
    try {
        outcome.platform_comment_id =
            platform_.post_comment(request.video_id, outcome.posted_text, request.draft.target_comment_id);
    } catch (const PlatformRejection& rejection) {
        outcome.rejection_reason = rejection.what();
        record_locked(outcome);
        throw;
    }
    record_locked(outcome);
    spdlog::info("posted comment {} on {}", *outcome.platform_comment_id, request.video_id);
    return outcome;
}

}  // namespace sleuth::service
