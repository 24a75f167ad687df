#pragma once

#include "adhere/calendar.hpp"

#include <absl/time/clock.h>

#include <atomic>

namespace adhere {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Instant now() const = 0;
};

class SystemClock final : public Clock {
 public:
  Instant now() const override { return absl::Now(); }
};

/// Test clock; starts at the given instant and moves only when told to.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Instant start) : nanos_(absl::ToUnixNanos(start)) {}

  Instant now() const override { return absl::FromUnixNanos(nanos_.load()); }
  void set(Instant t) { nanos_.store(absl::ToUnixNanos(t)); }
  void advance(absl::Duration d) { nanos_.fetch_add(absl::ToInt64Nanoseconds(d)); }

 private:
  std::atomic<int64_t> nanos_;
};

}  // namespace adhere
