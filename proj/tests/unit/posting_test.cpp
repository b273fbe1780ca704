#include <gtest/gtest.h>

#include "fakes.hpp"
#include "sleuth/common/errors.hpp"
#include "sleuth/common/url.hpp"
#include "sleuth/service/posting.hpp"

namespace sleuth::service {
namespace {

using namespace std::chrono_literals;

Timestamp t0() { return *parse_iso8601("2024-06-01T08:00:00Z"); }

PostRequest request(const std::string& key, const std::string& text, const std::string& video = "vid1") {
    PostRequest r;
    r.idempotency_key = key;
    r.video_id = video;
    r.draft_id = "d-" + key;
    r.draft.text = text;
    r.approved = true;
    return r;
}

PostingPolicy quiet_policy() {
    PostingPolicy p;
    p.ai_disclosure = false;
    return p;
}

TEST(StripUrls, FirstSiteGetsPlaceholder) {
    EXPECT_EQ(strip_urls("See https://a.org/x and www.b.com/y for more."), "See [source on request] and for more.");
    EXPECT_EQ(strip_urls("Trials (https://a.org/x) say no."), "Trials [source on request] say no.");
    EXPECT_EQ(strip_urls("No links here."), "No links here.");
    EXPECT_TRUE(find_urls(strip_urls("a http://x.io b https://y.io/z?q=1 c")).empty());
}

TEST(PreparePostText, DisclosureOnlyOnFirstPost) {
    PostingPolicy p;
    const auto first = prepare_post_text("Hello https://a.org", p, true);
    EXPECT_EQ(first, "Hello [source on request]\n\n" + p.disclosure_text);
    EXPECT_EQ(prepare_post_text("Hello", p, false), "Hello");
    p.strip_urls = false;
    EXPECT_EQ(prepare_post_text(" Hello https://a.org ", p, false), "Hello https://a.org");
}

TEST(Policy, ValidatesAndRoundTrips) {
    PostingPolicy p;
    p.min_interval = 90min;
    p.max_posts_per_day = 2;
    p.dry_run = true;
    const auto back = posting_policy_from_json(to_json(p));
    EXPECT_EQ(back.min_interval, 90min);
    EXPECT_EQ(back.max_posts_per_day, 2);
    EXPECT_TRUE(back.dry_run);
    EXPECT_THROW(posting_policy_from_json({{"min_interval_minutes", 0}}), PreconditionError);
    EXPECT_THROW(posting_policy_from_json({{"max_posts_per_day", 0}}), PreconditionError);
}

TEST(Scheduler, PacesPostsThroughTheClock) {
    testing::FakePlatform platform;
    SimulatedClock clock(t0());
    PostingScheduler scheduler(platform, clock);
    const auto policy = quiet_policy();
    const auto a = scheduler.schedule_post(request("k1", "First."), policy);
    const auto b = scheduler.schedule_post(request("k2", "Second."), policy);
    EXPECT_EQ(a.posted_at, t0());
    EXPECT_EQ(b.posted_at, t0() + 4h);
    EXPECT_EQ(clock.now(), t0() + 4h);
    EXPECT_EQ(scheduler.next_eligible(policy), t0() + 8h);
    ASSERT_EQ(platform.posted().size(), 2u);
}

TEST(Scheduler, DailyCapRefusesWithoutPosting) {
    testing::FakePlatform platform;
    SimulatedClock clock(t0());
    PostingScheduler scheduler(platform, clock);
    auto policy = quiet_policy();
    policy.min_interval = 1h;
    policy.max_posts_per_day = 2;
    scheduler.schedule_post(request("k1", "One."), policy);
    scheduler.schedule_post(request("k2", "Two."), policy);
    EXPECT_THROW(scheduler.schedule_post(request("k3", "Three."), policy), PolicyViolation);
    EXPECT_EQ(platform.posted().size(), 2u);
    clock.advance(24h);
    EXPECT_NO_THROW(scheduler.schedule_post(request("k3", "Three."), policy));
}

TEST(Scheduler, SameKeyNeverPostsTwice) {
    testing::FakePlatform platform;
    SimulatedClock clock(t0());
    PostingScheduler scheduler(platform, clock);
    const auto a = scheduler.schedule_post(request("k1", "Once."), quiet_policy());
    const auto b = scheduler.schedule_post(request("k1", "Once."), quiet_policy());
    EXPECT_EQ(a.platform_comment_id, b.platform_comment_id);
    EXPECT_EQ(platform.posted().size(), 1u);
}

TEST(Scheduler, DryRunSkipsNetworkAndPacing) {
    testing::FakePlatform platform;
    SimulatedClock clock(t0());
    PostingScheduler scheduler(platform, clock);
    auto policy = quiet_policy();
    policy.dry_run = true;
    for (int i = 0; i < 10; ++i) {
        const auto o = scheduler.schedule_post(request("k" + std::to_string(i), "Hi https://a.org"), policy);
        EXPECT_FALSE(o.succeeded());
        EXPECT_EQ(o.posted_text, "Hi [source on request]");
    }
    EXPECT_TRUE(platform.posted().empty());
    EXPECT_EQ(clock.now(), t0());
}

TEST(Scheduler, RejectionIsRecordedAndDoesNotBlockPacing) {
    testing::FakePlatform platform;
    platform.reject_containing = "spam";
    SimulatedClock clock(t0());
    PostingScheduler scheduler(platform, clock);
    EXPECT_THROW(scheduler.schedule_post(request("k1", "spam spam"), quiet_policy()), PlatformRejection);
    ASSERT_EQ(scheduler.history().size(), 1u);
    EXPECT_TRUE(scheduler.history()[0].rejection_reason.has_value());
    const auto ok = scheduler.schedule_post(request("k2", "Fine."), quiet_policy());
    EXPECT_EQ(ok.posted_at, t0());
}

TEST(Scheduler, RequiresApprovalAndKey) {
    testing::FakePlatform platform;
    SimulatedClock clock(t0());
    PostingScheduler scheduler(platform, clock);
    auto r = request("k1", "Text.");
    r.approved = false;
    EXPECT_THROW(scheduler.schedule_post(r, quiet_policy()), PreconditionError);
    r = request("", "Text.");
    EXPECT_THROW(scheduler.schedule_post(r, quiet_policy()), PreconditionError);
}

TEST(Scheduler, DisclosureOncePerVideo) {
    testing::FakePlatform platform;
    SimulatedClock clock(t0());
    PostingScheduler scheduler(platform, clock);
    const PostingPolicy policy;
    const auto a = scheduler.schedule_post(request("k1", "A.", "v1"), policy);
    const auto b = scheduler.schedule_post(request("k2", "B.", "v1"), policy);
    const auto c = scheduler.schedule_post(request("k3", "C.", "v2"), policy);
    EXPECT_NE(a.posted_text.find(policy.disclosure_text), std::string::npos);
    EXPECT_EQ(b.posted_text, "B.");
    EXPECT_NE(c.posted_text.find(policy.disclosure_text), std::string::npos);
}

TEST(Scheduler, LedgerSurvivesRestart) {
    testing::TempDir dir;
    testing::FakePlatform platform;
    SimulatedClock clock(t0());
    {
        PostingScheduler scheduler(platform, clock, dir / "posts.jsonl");
        scheduler.schedule_post(request("k1", "A."), quiet_policy());
    }
    PostingScheduler reloaded(platform, clock, dir / "posts.jsonl");
    ASSERT_EQ(reloaded.history().size(), 1u);
    EXPECT_TRUE(reloaded.find("k1").has_value());
    EXPECT_EQ(reloaded.next_eligible(quiet_policy()), t0() + 4h);
    reloaded.schedule_post(request("k1", "A."), quiet_policy());
    EXPECT_EQ(platform.posted().size(), 1u);
}

}  // namespace
}  // namespace sleuth::service
