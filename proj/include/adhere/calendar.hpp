#pragma once

#include <absl/time/civil_time.h>
#include <absl/time/time.h>

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace adhere {

/// A calendar date with no zone attached.
using Date = absl::CivilDay;
/// An absolute point on the UTC timeline.
using Instant = absl::Time;

/// Minutes after local midnight, 0..1439.
struct TimeOfDay {
  int minutes = 0;

  static TimeOfDay from_hm(int hour, int minute) { return {hour * 60 + minute}; }
  bool valid() const { return minutes >= 0 && minutes < 24 * 60; }
  auto operator<=>(const TimeOfDay&) const = default;
};

/// A resolved IANA zone. Construction fails on unknown names.
class Zone {
 public:
  static Zone load(const std::string& name);
  static Zone utc();

  const std::string& name() const { return name_; }
  const absl::TimeZone& tz() const { return tz_; }

 private:
  Zone(std::string name, absl::TimeZone tz) : name_(std::move(name)), tz_(tz) {}

  std::string name_;
  absl::TimeZone tz_;
};

/// Inclusive range of calendar dates.
struct DateRange {
  Date from;
  Date to;

  bool contains(Date d) const { return from <= d && d <= to; }
  bool operator==(const DateRange&) const = default;
};

/// Calendar date of `t` as seen on a wall clock in `zone`.
Date local_day(Instant t, const Zone& zone);

/// Start of the local day (first instant whose local_day is `day`).
Instant start_of_day(Date day, const Zone& zone);

/// The instant at `time` on `day` in `zone`. Nonexistent local times in a
/// DST gap resolve forward by the gap length.
Instant at_local(Date day, TimeOfDay time, const Zone& zone);

/// Days retroactive logging stays open after a local day ends.
inline constexpr absl::Duration kLateEntryGrace = absl::Hours(6);

/// The instant after which a day's records are frozen.
Instant freeze_instant(Date day, const Zone& zone);

// Parsing and formatting. Parsers throw Error(validation) on malformed input.
Instant parse_instant(std::string_view rfc3339);
std::string format_instant(Instant t);
Date parse_date(std::string_view iso);
std::string format_date(Date d);
TimeOfDay parse_time_of_day(std::string_view hhmm);
std::string format_time_of_day(TimeOfDay t);
/// "FROM..TO" with ISO dates on both sides.
DateRange parse_date_range(std::string_view text);
std::string format_date_range(const DateRange& r);

}  // namespace adhere
