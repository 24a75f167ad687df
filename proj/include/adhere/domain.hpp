#pragma once

#include "adhere/calendar.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adhere {

enum class Organ { liver, kidney, heart, lung, intestine, pancreas };

std::string_view to_string(Organ organ);
Organ parse_organ(std::string_view text);

struct Patient {
  std::string patient_id;
  Date transplant_date;
  Organ organ = Organ::kidney;
  std::string timezone = "UTC";
  // Study arm tag used by cohort reporting; empty when the patient is not
  // enrolled in a comparison.
  std::string arm;
};

/// Throws Error(validation) on an empty id or a transplant date after `today`,
/// and Error(config) on an unknown timezone.
void validate_patient(const Patient& patient, Date today);

inline constexpr int kDefaultWindowMinutes = 120;

struct DoseSlot {
  std::string slot_id;
  TimeOfDay nominal_time;
  int window_before = kDefaultWindowMinutes;  // minutes
  int window_after = kDefaultWindowMinutes;   // minutes
};

struct MedicationLine {
  std::string med_name;
  bool is_immunosuppressant = false;
  std::vector<DoseSlot> slots;
};

struct DoseSchedule {
  std::string patient_id;
  std::vector<MedicationLine> medications;
  Date effective_from;

  const DoseSlot* find_slot(std::string_view slot_id) const;
  const MedicationLine* medication_of(std::string_view slot_id) const;
};

/// Empty when the schedule is usable downstream; otherwise one message per
/// violation, each starting with the offending field.
std::vector<std::string> validate_schedule(const DoseSchedule& schedule);

/// Schedule versions ordered by effective_from. The version in force on a day
/// is the latest one whose effective_from is not after it.
class ScheduleHistory {
 public:
  /// Validates and inserts; a version with the same effective_from replaces
  /// the previous one.
  void add(DoseSchedule schedule);
  const DoseSchedule* in_force(Date day) const;
  const std::vector<DoseSchedule>& versions() const { return versions_; }
  bool empty() const { return versions_.empty(); }
  std::optional<Date> first_effective() const;

 private:
  std::vector<DoseSchedule> versions_;
};

enum class IntakeKind { taken, skipped };

std::string_view to_string(IntakeKind kind);
IntakeKind parse_intake_kind(std::string_view text);

struct IntakeEvent {
  std::string patient_id;
  std::string slot_id;
  Instant timestamp;
  IntakeKind kind = IntakeKind::taken;

  bool operator==(const IntakeEvent&) const = default;
};

enum class Analyte { tacrolimus };

struct LabResult {
  std::string patient_id;
  Date draw_date;
  Analyte analyte = Analyte::tacrolimus;
  double value_ng_ml = 0.0;

  bool operator==(const LabResult&) const = default;
};

std::string_view to_string(Analyte analyte);
Analyte parse_analyte(std::string_view text);

}  // namespace adhere
