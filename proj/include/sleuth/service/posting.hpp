#pragma once

#include <chrono>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sleuth/bender/bender.hpp"
#include "sleuth/common/clock.hpp"
#include "sleuth/ingest/platform.hpp"

namespace sleuth::service {

inline constexpr std::string_view kSourcePlaceholder = "[source on request]";

/// Removes every URL. The first removal site gets `[source on request]`, the
/// rest are dropped, and the surrounding whitespace and punctuation tidied.
/// Text without URLs is returned unchanged.
std::string strip_urls(std::string_view text);

struct PostingPolicy {
    bool strip_urls = true;
    std::chrono::minutes min_interval{4 * 60};
    int max_posts_per_day = 4;
    bool dry_run = false;
    /// Appended to the first post on each video.
    bool ai_disclosure = true;
    std::string disclosure_text = "(Drafted with the help of an AI assistant and reviewed by a person.)";

    /// Throws PreconditionError unless min_interval > 0 and max_posts_per_day >= 1.
    void validate() const;
};

nlohmann::json to_json(const PostingPolicy& policy);
PostingPolicy posting_policy_from_json(const nlohmann::json& j, PostingPolicy defaults = {});

struct PostOutcome {
    std::string idempotency_key;
    std::string video_id;
    std::string draft_id;
    std::string posted_text;
    Timestamp posted_at;
    std::optional<std::string> platform_comment_id;
    std::optional<std::string> rejection_reason;
    bool dry_run = false;
    PostingPolicy policy;

    [[nodiscard]] bool succeeded() const { return platform_comment_id.has_value() && !dry_run; }
};

nlohmann::json to_json(const PostOutcome& outcome);
PostOutcome post_outcome_from_json(const nlohmann::json& j);

struct PostRequest {
    /// Retrying with the same key never posts twice.
    std::string idempotency_key;
    std::string video_id;
    std::string draft_id;
    bender::CommentDraft draft;
    bool approved = false;
};

/// Text as it would go out under `policy`: URLs stripped when configured,
/// disclosure appended on a video's first post.
std::string prepare_post_text(std::string_view draft_text, const PostingPolicy& policy, bool first_post_on_video);

/// Serialized posting dispatcher. Waits (through the clock) until
/// `min_interval` has passed since the last successful post and refuses a
/// post that would put more than `max_posts_per_day` successful posts in the
/// 24 hours ending at its dispatch time. Dry runs skip pacing and the network.
class PostingScheduler {
  public:
    /// With a ledger path, outcomes are appended there as JSON lines and
    /// reloaded on construction.
    PostingScheduler(ingest::PlatformClient& platform, Clock& clock,
                     std::optional<std::filesystem::path> ledger_path = std::nullopt);

    /// Throws PreconditionError (not approved), PolicyViolation (daily cap)
    /// or PlatformRejection (after recording it).
    PostOutcome schedule_post(const PostRequest& request, const PostingPolicy& policy);

    /// Earliest time the next real post could go out.
    [[nodiscard]] Timestamp next_eligible(const PostingPolicy& policy) const;
    [[nodiscard]] std::vector<PostOutcome> history() const;
    [[nodiscard]] std::optional<PostOutcome> find(const std::string& idempotency_key) const;

  private:
    Timestamp next_eligible_locked(const PostingPolicy& policy) const;
    void record_locked(const PostOutcome& outcome);

    ingest::PlatformClient& platform_;
    Clock& clock_;
    std::optional<std::filesystem::path> ledger_path_;
    mutable std::mutex mutex_;
    std::vector<PostOutcome> history_;
};

}  // namespace sleuth::service
