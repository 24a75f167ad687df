#pragma once

#include "adhere/calendar.hpp"
#include "adhere/domain.hpp"

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace adhere {

/// One slot occurrence on a concrete local day.
struct DueSlot {
  std::string slot_id;
  std::string med_name;
  bool is_immunosuppressant = false;
  Date day;
  Instant nominal;
  Instant window_start;
  Instant window_end;
  Instant day_end;  // first instant of the following local day
};

/// Expands every slot of `schedule` on `day`. Empty before effective_from.
std::vector<DueSlot> due_slots(const DoseSchedule& schedule, Date day, const Zone& zone);

/// The local day whose occurrence of `slot` an intake at `t` belongs to: the
/// occurrence whose dose window contains `t` (nearest nominal time on ties),
/// otherwise the local day of `t`.
Date occurrence_day(const DoseSlot& slot, Instant t, const Zone& zone);

/// Intake events that belong to a slot occurrence of `schedule` on `day`.
std::vector<IntakeEvent> events_on_day(const DoseSchedule& schedule,
                                       std::span<const IntakeEvent> events, Date day,
                                       const Zone& zone);

inline constexpr int kDefaultRepeatIntervalMinutes = 60;
inline constexpr int kDefaultMaxRepeats = 2;

struct NotificationPrefs {
  std::string patient_id;
  std::map<std::string, TimeOfDay> overrides;  // slot_id -> first reminder time
  int gentle_repeat_interval = kDefaultRepeatIntervalMinutes;  // minutes
  int max_repeats_per_slot = kDefaultMaxRepeats;
};

/// Throws Error(validation) on a negative repeat count, non-positive interval
/// or an invalid override time.
void validate_prefs(const NotificationPrefs& prefs);

struct ReminderEntry {
  std::string slot_id;
  std::vector<Instant> fire_instants;
  // Reminders never escalate; the tone is constant.
  static constexpr std::string_view tone = "gentle";
};

struct ReminderPlan {
  Date day;
  std::vector<ReminderEntry> entries;
};

ReminderPlan reminder_plan(const DoseSchedule& schedule, const NotificationPrefs& prefs,
                           Date day, const std::set<std::string>& taken_so_far,
                           const Zone& zone);

enum class SlotStatus { pending, taken_on_time, taken_late, skipped, missed };

std::string_view to_string(SlotStatus status);

struct SlotClassification {
  SlotStatus status = SlotStatus::pending;
  // Set when the event list is contradictory (both taken and skipped).
  std::optional<std::string> warning;
};

/// Status of one slot occurrence given the events recorded for it, as of
/// `now`. Events stamped after `now` are not yet visible.
SlotClassification classify_slot(const DueSlot& slot, std::span<const IntakeEvent> events,
                                 Instant now);

}  // namespace adhere
