#include "adhere/streaks.hpp"

#include "adhere/error.hpp"

#include <algorithm>
#include <map>

namespace adhere {

DayOutcome day_outcome(const DoseSchedule& schedule, std::span<const IntakeEvent> events,
                       Date day, Instant now, const Zone& zone) {
  DayOutcome out{.patient_id = schedule.patient_id, .day = day};
  const auto todays = events_on_day(schedule, events, day, zone);
  std::vector<IntakeEvent> for_slot;
  for (const auto& due : due_slots(schedule, day, zone)) {
    for_slot.clear();
    std::copy_if(todays.begin(), todays.end(), std::back_inserter(for_slot),
                 [&](const IntakeEvent& e) { return e.slot_id == due.slot_id; });
    const auto c = classify_slot(due, for_slot, now);
    if (c.warning) out.warnings.push_back(*c.warning);
    ++out.scheduled;
    switch (c.status) {
      case SlotStatus::taken_on_time:
      case SlotStatus::taken_late: ++out.taken; break;
      case SlotStatus::skipped: ++out.skipped; break;
      case SlotStatus::missed: ++out.missed; break;
      case SlotStatus::pending: ++out.pending; break;
    }
  }
  out.closed = out.pending == 0;
  out.adherent = out.closed && out.scheduled > 0 && out.missed == 0 && out.skipped == 0;
  return out;
}

std::vector<DayOutcome> final_outcomes(const ScheduleHistory& schedules,
                                       std::span<const IntakeEvent> events, Date from,
                                       Date through, const Zone& zone) {
  // An event can only belong to an occurrence on its local day or a neighbour.
  std::map<Date, std::vector<IntakeEvent>> by_local_day;
  for (const auto& e : events) by_local_day[local_day(e.timestamp, zone)].push_back(e);

  std::vector<DayOutcome> out;
  std::vector<IntakeEvent> nearby;
  for (Date day = from; day <= through; ++day) {
    const DoseSchedule* schedule = schedules.in_force(day);
    if (schedule == nullptr) continue;
    nearby.clear();
    for (Date d : {day - 1, day, day + 1}) {
      if (auto it = by_local_day.find(d); it != by_local_day.end()) {
        nearby.insert(nearby.end(), it->second.begin(), it->second.end());
      }
    }
    out.push_back(day_outcome(*schedule, nearby, day, freeze_instant(day, zone), zone));
  }
  return out;
}

DayOutcome closed_outcome(std::string patient_id, Date day, int scheduled, int taken,
                          int skipped, int missed) {
  return DayOutcome{
      .patient_id = std::move(patient_id),
      .day = day,
      .scheduled = scheduled,
      .taken = taken,
      .skipped = skipped,
      .missed = missed,
      .pending = 0,
      .closed = true,
      .adherent = scheduled > 0 && missed == 0 && skipped == 0,
  };
}

StreakStats streaks(std::span<const DayOutcome> outcomes) {
  StreakStats s;
  int run = 0;
  const DayOutcome* prev = nullptr;
  const DayOutcome* last_closed = nullptr;
  for (const auto& o : outcomes) {
    if (prev != nullptr && o.day <= prev->day) {
      throw Error(ErrorCode::data, "day outcomes not strictly increasing at " + format_date(o.day));
    }
    const bool contiguous = prev != nullptr && prev->day + 1 == o.day;
    if (!contiguous && run > 0) {
      s.runs.push_back(run);
      run = 0;
    }
    if (o.closed && o.adherent) {
      ++run;
    } else if (run > 0) {
      s.runs.push_back(run);
      run = 0;
    }
    if (o.closed) last_closed = &o;
    prev = &o;
  }
  if (run > 0) s.runs.push_back(run);
  if (!s.runs.empty()) s.longest = *std::max_element(s.runs.begin(), s.runs.end());

  // Walk back over the contiguous adherent days ending at the latest closed day.
  if (last_closed != nullptr && last_closed->adherent) {
    const auto end = outcomes.begin() + (last_closed - outcomes.data());
    Date expect = last_closed->day;
    for (auto it = std::make_reverse_iterator(end + 1); it != outcomes.rend(); ++it) {
      if (it->day != expect || !it->closed || !it->adherent) break;
      ++s.current;
      expect = expect - 1;
    }
  }
  return s;
}

double missed_dose_rate(std::span<const DayOutcome> outcomes, const DateRange& period) {
  long scheduled = 0;
  long missed = 0;
  for (const auto& o : outcomes) {
    if (!o.closed || !period.contains(o.day)) continue;
    scheduled += o.scheduled;
    missed += o.missed + o.skipped;
  }
  return scheduled == 0 ? 0.0 : static_cast<double>(missed) / static_cast<double>(scheduled);
}

AdherenceSummary summarize(std::span<const DayOutcome> outcomes, const DateRange& period) {
  std::vector<DayOutcome> in_period;
  for (const auto& o : outcomes) {
    if (o.closed && period.contains(o.day)) in_period.push_back(o);
  }
  AdherenceSummary s{.period = period};
  for (const auto& o : in_period) {
    s.total_scheduled += o.scheduled;
    s.total_missed += o.missed + o.skipped;
  }
  s.missed_dose_rate = missed_dose_rate(in_period, period);
  const auto st = streaks(in_period);
  s.current_streak_days = st.current;
  s.longest_streak_days = st.longest;
  return s;
}

}  // namespace adhere
