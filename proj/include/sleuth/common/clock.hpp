#pragma once

#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace sleuth {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

/// Time source for everything that paces, caches or stamps. Injected so the
/// posting dispatcher and replay runs can use simulated time.
class Clock {
  public:
    virtual ~Clock() = default;
    [[nodiscard]] virtual Timestamp now() const = 0;
    virtual void sleep_until(Timestamp deadline) = 0;
};

class SystemClock final : public Clock {
  public:
    [[nodiscard]] Timestamp now() const override;
    void sleep_until(Timestamp deadline) override;
};

/// Manually driven clock. `sleep_until` jumps forward instead of blocking.
class SimulatedClock final : public Clock {
  public:
    explicit SimulatedClock(Timestamp start) : now_(start) {}

    [[nodiscard]] Timestamp now() const override;
    void sleep_until(Timestamp deadline) override;
    void advance(std::chrono::milliseconds delta);
    void set(Timestamp t);

  private:
    mutable std::mutex mutex_;
    Timestamp now_;
};

/// "2024-05-01T12:34:56Z"; milliseconds are appended only when non-zero.
std::string format_iso8601(Timestamp t);

/// Accepts `YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM|-HH:MM]`.
std::optional<Timestamp> parse_iso8601(std::string_view text);

/// "20240501T123456Z", used in run identifiers and directory names.
std::string format_compact(Timestamp t);

}  // namespace sleuth
