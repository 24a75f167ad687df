#include "adhere/domain.hpp"

#include "adhere/error.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <utility>

namespace adhere {

namespace {

constexpr std::array<std::pair<Organ, std::string_view>, 6> kOrgans{{
    {Organ::liver, "liver"},
    {Organ::kidney, "kidney"},
    {Organ::heart, "heart"},
    {Organ::lung, "lung"},
    {Organ::intestine, "intestine"},
    {Organ::pancreas, "pancreas"},
}};

}  // namespace

std::string_view to_string(Organ organ) {
  for (const auto& [o, name] : kOrgans) {
    if (o == organ) return name;
  }
  return "unknown";
}

Organ parse_organ(std::string_view text) {
  for (const auto& [o, name] : kOrgans) {
    if (name == text) return o;
  }
  throw Error(ErrorCode::validation, "unknown organ '" + std::string(text) + "'");
}

void validate_patient(const Patient& patient, Date today) {
  if (patient.patient_id.empty()) {
    throw Error(ErrorCode::validation, "patient_id empty");
  }
  if (patient.transplant_date > today) {
    throw Error(ErrorCode::validation, "transplant_date in the future");
  }
  Zone::load(patient.timezone);
}

const DoseSlot* DoseSchedule::find_slot(std::string_view slot_id) const {
  for (const auto& med : medications) {
    for (const auto& slot : med.slots) {
      if (slot.slot_id == slot_id) return &slot;
    }
  }
  return nullptr;
}

const MedicationLine* DoseSchedule::medication_of(std::string_view slot_id) const {
  for (const auto& med : medications) {
    for (const auto& slot : med.slots) {
      if (slot.slot_id == slot_id) return &med;
    }
  }
  return nullptr;
}

std::vector<std::string> validate_schedule(const DoseSchedule& schedule) {
  std::vector<std::string> violations;
  if (schedule.patient_id.empty()) violations.emplace_back("patient_id empty");
  if (schedule.medications.empty()) violations.emplace_back("medications empty");

  std::set<std::string> seen;
  for (std::size_t m = 0; m < schedule.medications.size(); ++m) {
    const auto& med = schedule.medications[m];
    const std::string where = "medications[" + std::to_string(m) + "]";
    if (med.med_name.empty()) violations.push_back(where + ".med_name empty");
    if (med.slots.empty()) violations.push_back(where + ".slots empty");
    for (std::size_t s = 0; s < med.slots.size(); ++s) {
      const auto& slot = med.slots[s];
      const std::string at = where + ".slots[" + std::to_string(s) + "]";
      if (slot.slot_id.empty()) {
        violations.push_back(at + ".slot_id empty");
      } else if (!seen.insert(slot.slot_id).second) {
        violations.push_back("slot_id duplicate: " + slot.slot_id);
      }
      if (!slot.nominal_time.valid()) violations.push_back(at + ".nominal_time invalid");
      if (slot.window_before < 0) violations.push_back(at + ".window_before negative");
      if (slot.window_after < 0) violations.push_back(at + ".window_after negative");
      if (s > 0 && !(med.slots[s - 1].nominal_time < slot.nominal_time)) {
        violations.push_back(at + ".nominal_time not strictly increasing");
      }
    }
  }
  return violations;
}

void ScheduleHistory::add(DoseSchedule schedule) {
  if (auto violations = validate_schedule(schedule); !violations.empty()) {
    std::string msg = "invalid schedule:";
    for (const auto& v : violations) msg += " " + v + ";";
    throw Error(ErrorCode::validation, msg);
  }
  auto it = std::lower_bound(versions_.begin(), versions_.end(), schedule.effective_from,
                             [](const DoseSchedule& s, Date d) { return s.effective_from < d; });
  if (it != versions_.end() && it->effective_from == schedule.effective_from) {
    *it = std::move(schedule);
  } else {
    versions_.insert(it, std::move(schedule));
  }
}

const DoseSchedule* ScheduleHistory::in_force(Date day) const {
  auto it = std::upper_bound(versions_.begin(), versions_.end(), day,
                             [](Date d, const DoseSchedule& s) { return d < s.effective_from; });
  if (it == versions_.begin()) return nullptr;
  return &*std::prev(it);
}

std::optional<Date> ScheduleHistory::first_effective() const {
  if (versions_.empty()) return std::nullopt;
  return versions_.front().effective_from;
}

std::string_view to_string(IntakeKind kind) {
  return kind == IntakeKind::taken ? "taken" : "skipped";
}

IntakeKind parse_intake_kind(std::string_view text) {
  if (text == "taken") return IntakeKind::taken;
  if (text == "skipped") return IntakeKind::skipped;
  throw Error(ErrorCode::validation, "unknown intake kind '" + std::string(text) + "'");
}

std::string_view to_string(Analyte) { return "tacrolimus"; }

Analyte parse_analyte(std::string_view text) {
  if (text == "tacrolimus") return Analyte::tacrolimus;
  throw Error(ErrorCode::validation, "unsupported analyte '" + std::string(text) + "'");
}

}  // namespace adhere
