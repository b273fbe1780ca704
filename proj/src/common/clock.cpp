#include "sleuth/common/clock.hpp"

#include <fmt/format.h>

#include <charconv>
#include <ctime>
#include <thread>

namespace sleuth {
namespace {

std::tm to_tm(Timestamp t) {
    const std::time_t secs = std::chrono::system_clock::to_time_t(
        std::chrono::time_point_cast<std::chrono::seconds>(t));
    std::tm tm{};
    gmtime_r(&secs, &tm);
    return tm;
}

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    const auto* first = s.data() + pos;
    const auto [ptr, ec] = std::from_chars(first, first + len, out);
    return ec == std::errc{} && ptr == first + len;
}

}  // namespace

Timestamp SystemClock::now() const {
    return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

void SystemClock::sleep_until(Timestamp deadline) { std::this_thread::sleep_until(deadline); }

Timestamp SimulatedClock::now() const {
    std::lock_guard lock(mutex_);
    return now_;
}

void SimulatedClock::sleep_until(Timestamp deadline) {
    std::lock_guard lock(mutex_);
    if (deadline > now_) now_ = deadline;
}

void SimulatedClock::advance(std::chrono::milliseconds delta) {
    std::lock_guard lock(mutex_);
    now_ += delta;
}

void SimulatedClock::set(Timestamp t) {
    std::lock_guard lock(mutex_);
    now_ = t;
}

std::string format_iso8601(Timestamp t) {
    const std::tm tm = to_tm(t);
    const auto ms = (t.time_since_epoch() % std::chrono::seconds(1)).count();
    const auto ms_pos = ms < 0 ? ms + 1000 : ms;
    if (ms_pos == 0) {
        return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", tm.tm_year + 1900, tm.tm_mon + 1,
                           tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    }
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", tm.tm_year + 1900, tm.tm_mon + 1,
                       tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, ms_pos);
}

std::string format_compact(Timestamp t) {
    const std::tm tm = to_tm(t);
    return fmt::format("{:04}{:02}{:02}T{:02}{:02}{:02}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                       tm.tm_hour, tm.tm_min, tm.tm_sec);
}

std::optional<Timestamp> parse_iso8601(std::string_view s) {
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' ||
        s[16] != ':') {
        return std::nullopt;
    }
    if (!read_int(s, 0, 4, year) || !read_int(s, 5, 2, month) || !read_int(s, 8, 2, day) ||
        !read_int(s, 11, 2, hour) || !read_int(s, 14, 2, minute) || !read_int(s, 17, 2, second)) {
        return std::nullopt;
    }
    std::size_t pos = 19;
    int millis = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            if (digits < 3) millis = millis * 10 + (s[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) return std::nullopt;
        for (int d = digits; d < 3; ++d) millis *= 10;
    }
    int offset_minutes = 0;
    if (pos < s.size()) {
        if (s[pos] == 'Z' && pos + 1 == s.size()) {
            // UTC
        } else if ((s[pos] == '+' || s[pos] == '-') && s.size() == pos + 6 && s[pos + 3] == ':') {
            int oh = 0, om = 0;
            if (!read_int(s, pos + 1, 2, oh) || !read_int(s, pos + 4, 2, om)) return std::nullopt;
            offset_minutes = (oh * 60 + om) * (s[pos] == '-' ? -1 : 1);
        } else {
            return std::nullopt;
        }
    }
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                             std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) return std::nullopt;
    const auto tp = sys_days{ymd} + hours{hour} + minutes{minute} + seconds{second} + milliseconds{millis} -
                    minutes{offset_minutes};
    return time_point_cast<milliseconds>(tp);
}

}  // namespace sleuth
