#include "adhere/scheduler.hpp"

#include "adhere/error.hpp"

#include <algorithm>

namespace adhere {

namespace {

DueSlot expand(const MedicationLine& med, const DoseSlot& slot, Date day, const Zone& zone) {
  const Instant nominal = at_local(day, slot.nominal_time, zone);
  return DueSlot{
      .slot_id = slot.slot_id,
      .med_name = med.med_name,
      .is_immunosuppressant = med.is_immunosuppressant,
      .day = day,
      .nominal = nominal,
      .window_start = nominal - absl::Minutes(slot.window_before),
      .window_end = nominal + absl::Minutes(slot.window_after),
      .day_end = start_of_day(day + 1, zone),
  };
}

}  // namespace

std::vector<DueSlot> due_slots(const DoseSchedule& schedule, Date day, const Zone& zone) {
  std::vector<DueSlot> out;
  if (day < schedule.effective_from) return out;
  for (const auto& med : schedule.medications) {
    for (const auto& slot : med.slots) out.push_back(expand(med, slot, day, zone));
  }
  return out;
}

Date occurrence_day(const DoseSlot& slot, Instant t, const Zone& zone) {
  const Date local = local_day(t, zone);
  std::optional<Date> best;
  absl::Duration best_distance = absl::InfiniteDuration();
  for (Date candidate : {local - 1, local, local + 1}) {
    const Instant nominal = at_local(candidate, slot.nominal_time, zone);
    if (t < nominal - absl::Minutes(slot.window_before) || t > nominal + absl::Minutes(slot.window_after)) {
      continue;
    }
    const absl::Duration distance = absl::AbsDuration(t - nominal);
    if (distance < best_distance) {
      best = candidate;
      best_distance = distance;
    }
  }
  return best.value_or(local);
}

std::vector<IntakeEvent> events_on_day(const DoseSchedule& schedule,
                                       std::span<const IntakeEvent> events, Date day,
                                       const Zone& zone) {
  std::vector<IntakeEvent> out;
  for (const auto& e : events) {
    const DoseSlot* slot = schedule.find_slot(e.slot_id);
    if (slot != nullptr && occurrence_day(*slot, e.timestamp, zone) == day) out.push_back(e);
  }
  return out;
}

void validate_prefs(const NotificationPrefs& prefs) {
  if (prefs.max_repeats_per_slot < 0) {
    throw Error(ErrorCode::validation, "max_repeats_per_slot negative");
  }
  if (prefs.gentle_repeat_interval <= 0) {
    throw Error(ErrorCode::validation, "gentle_repeat_interval must be positive");
  }
  for (const auto& [slot_id, time] : prefs.overrides) {
    if (!time.valid()) throw Error(ErrorCode::validation, "override time invalid for " + slot_id);
  }
}

ReminderPlan reminder_plan(const DoseSchedule& schedule, const NotificationPrefs& prefs,
                           Date day, const std::set<std::string>& taken_so_far,
                           const Zone& zone) {
  ReminderPlan plan{.day = day, .entries = {}};
  for (const auto& due : due_slots(schedule, day, zone)) {
    if (taken_so_far.contains(due.slot_id)) continue;
    Instant first = due.nominal;
    if (auto it = prefs.overrides.find(due.slot_id); it != prefs.overrides.end()) {
      first = at_local(day, it->second, zone);
    }
    ReminderEntry entry{.slot_id = due.slot_id, .fire_instants = {first}};
    for (int k = 1; k <= std::max(prefs.max_repeats_per_slot, 0); ++k) {
      entry.fire_instants.push_back(first + absl::Minutes(static_cast<int64_t>(k) * prefs.gentle_repeat_interval));
    }
    plan.entries.push_back(std::move(entry));
  }
  std::stable_sort(plan.entries.begin(), plan.entries.end(), [](const auto& a, const auto& b) {
    return a.fire_instants.front() < b.fire_instants.front();
  });
  return plan;
}

std::string_view to_string(SlotStatus status) {
  switch (status) {
    case SlotStatus::pending: return "pending";
    case SlotStatus::taken_on_time: return "taken_on_time";
    case SlotStatus::taken_late: return "taken_late";
    case SlotStatus::skipped: return "skipped";
    case SlotStatus::missed: return "missed";
  }
  return "unknown";
}

SlotClassification classify_slot(const DueSlot& slot, std::span<const IntakeEvent> events,
                                  Instant now) {
  const Instant closes = std::max(slot.day_end, slot.window_end);
  std::optional<Instant> first_taken;
  std::optional<Instant> first_skipped;
  for (const auto& e : events) {
    if (e.timestamp > now) continue;
    auto& first = e.kind == IntakeKind::taken ? first_taken : first_skipped;
    if (!first || e.timestamp < *first) first = e.timestamp;
  }

  SlotClassification out;
  if (first_taken && first_skipped) {
    out.warning = "slot " + slot.slot_id + " on " + format_date(slot.day) +
                  " has both taken and skipped records; taken is kept";
  }
  // A late take supersedes an earlier skip, and a skip after a take cannot undo it.
  if (first_taken && *first_taken < closes) {
    out.status = *first_taken <= slot.window_end ? SlotStatus::taken_on_time : SlotStatus::taken_late;
  } else if (first_skipped) {
    out.status = SlotStatus::skipped;
  } else if (now >= closes) {
    out.status = SlotStatus::missed;
  }
  return out;
}

}  // namespace adhere
