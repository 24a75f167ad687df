#pragma once

#include "adhere/calendar.hpp"
#include "adhere/domain.hpp"
#include "adhere/scheduler.hpp"

#include <span>
#include <string>
#include <vector>

namespace adhere {

struct DayOutcome {
  std::string patient_id;
  Date day;
  int scheduled = 0;
  int taken = 0;
  int skipped = 0;
  int missed = 0;
  int pending = 0;
  bool closed = false;  // no slot is pending
  bool adherent = false;
  std::vector<std::string> warnings;

  bool operator==(const DayOutcome&) const = default;
};

/// Folds classify_slot over every due slot of `day`. `events` may span any
/// number of days; only those belonging to `day` are considered.
DayOutcome day_outcome(const DoseSchedule& schedule, std::span<const IntakeEvent> events,
                       Date day, Instant now, const Zone& zone);

/// Final outcomes for every day in [from, through] that has a schedule in
/// force, each evaluated at its freeze instant. Equivalent to calling
/// day_outcome per day, but buckets events by day first.
std::vector<DayOutcome> final_outcomes(const ScheduleHistory& schedules,
                                       std::span<const IntakeEvent> events, Date from,
                                       Date through, const Zone& zone);

/// Builds a closed outcome from counts alone. adherent follows the
/// all-slots-taken rule.
DayOutcome closed_outcome(std::string patient_id, Date day, int scheduled, int taken,
                          int skipped, int missed);

struct StreakStats {
  int current = 0;
  int longest = 0;
  std::vector<int> runs;  // maximal adherent runs, oldest first

  bool operator==(const StreakStats&) const = default;
};

/// Requires outcomes sorted by day; throws Error(data) on a duplicate or
/// out-of-order day. A missing calendar day breaks a run.
StreakStats streaks(std::span<const DayOutcome> outcomes);

/// (missed + skipped) / scheduled over closed days inside `period`; 0 when
/// nothing was scheduled.
double missed_dose_rate(std::span<const DayOutcome> outcomes, const DateRange& period);

struct AdherenceSummary {
  DateRange period;
  int total_scheduled = 0;
  int total_missed = 0;  // missed + skipped
  double missed_dose_rate = 0.0;
  int current_streak_days = 0;
  int longest_streak_days = 0;

  bool operator==(const AdherenceSummary&) const = default;
};

/// Summary over closed days inside `period`.
AdherenceSummary summarize(std::span<const DayOutcome> outcomes, const DateRange& period);

}  // namespace adhere
