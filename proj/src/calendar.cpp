#include "adhere/calendar.hpp"

#include "adhere/error.hpp"

#include <cctype>
#include <cstdio>

namespace adhere {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::config: return "config";
    case ErrorCode::validation: return "validation";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::day_closed: return "day_closed";
    case ErrorCode::replay: return "replay";
    case ErrorCode::idempotency: return "idempotency";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::degenerate_data: return "degenerate_data";
    case ErrorCode::separation: return "separation";
    case ErrorCode::undefined_correlation: return "undefined_correlation";
    case ErrorCode::domain: return "domain";
    case ErrorCode::data: return "data";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

Zone Zone::load(const std::string& name) {
  absl::TimeZone tz;
  if (name.empty() || !absl::LoadTimeZone(name, &tz)) {
    throw Error(ErrorCode::config, "unknown timezone: " + name);
  }
  return Zone(name, tz);
}

Zone Zone::utc() { return Zone("UTC", absl::UTCTimeZone()); }

Date local_day(Instant t, const Zone& zone) { return absl::ToCivilDay(t, zone.tz()); }

Instant start_of_day(Date day, const Zone& zone) {
  // Midnight may fall in a DST gap; `trans` points at the first valid instant.
  const auto info = zone.tz().At(absl::CivilSecond(day));
  return info.kind == absl::TimeZone::TimeInfo::SKIPPED ? info.trans : info.pre;
}

Instant at_local(Date day, TimeOfDay time, const Zone& zone) {
  const absl::CivilMinute local(day.year(), day.month(), day.day(), time.minutes / 60,
                                time.minutes % 60);
  // The pre-transition offset moves a time in a gap forward by the gap
  // length and picks the first of two repeated times.
  return zone.tz().At(local).pre;
}

Instant freeze_instant(Date day, const Zone& zone) {
  return start_of_day(day + 1, zone) + kLateEntryGrace;
}

Instant parse_instant(std::string_view rfc3339) {
  Instant t;
  std::string err;
  if (!absl::ParseTime(absl::RFC3339_full, std::string(rfc3339), &t, &err)) {
    throw Error(ErrorCode::validation, "malformed timestamp '" + std::string(rfc3339) + "': " + err);
  }
  return t;
}

std::string format_instant(Instant t) {
  return absl::FormatTime("%Y-%m-%dT%H:%M:%SZ", t, absl::UTCTimeZone());
}

Date parse_date(std::string_view iso) {
  Date d;
  // ParseCivilTime accepts out-of-range fields by normalizing; reject those.
  if (iso.size() != 10 || !absl::ParseCivilTime(std::string(iso), &d) || format_date(d) != iso) {
    throw Error(ErrorCode::validation, "malformed date '" + std::string(iso) + "'");
  }
  return d;
}

std::string format_date(Date d) { return absl::FormatCivilTime(d); }

TimeOfDay parse_time_of_day(std::string_view hhmm) {
  auto digit = [&](std::size_t i) { return std::isdigit(static_cast<unsigned char>(hhmm[i])) != 0; };
  if (hhmm.size() != 5 || hhmm[2] != ':' || !digit(0) || !digit(1) || !digit(3) || !digit(4)) {
    throw Error(ErrorCode::validation, "malformed time of day '" + std::string(hhmm) + "'");
  }
  const int hour = (hhmm[0] - '0') * 10 + (hhmm[1] - '0');
  const int minute = (hhmm[3] - '0') * 10 + (hhmm[4] - '0');
  if (hour > 23 || minute > 59) {
    throw Error(ErrorCode::validation, "time of day out of range '" + std::string(hhmm) + "'");
  }
  return TimeOfDay::from_hm(hour, minute);
}

std::string format_time_of_day(TimeOfDay t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", t.minutes / 60, t.minutes % 60);
  return buf;
}

DateRange parse_date_range(std::string_view text) {
  const auto sep = text.find("..");
  if (sep == std::string_view::npos) {
    throw Error(ErrorCode::validation, "window must be FROM..TO, got '" + std::string(text) + "'");
  }
  DateRange r{parse_date(text.substr(0, sep)), parse_date(text.substr(sep + 2))};
  if (r.to < r.from) {
    throw Error(ErrorCode::validation, "window end precedes start: " + std::string(text));
  }
  return r;
}

std::string format_date_range(const DateRange& r) {
  return format_date(r.from) + ".." + format_date(r.to);
}

}  // namespace adhere
