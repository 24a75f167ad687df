#pragma once

#include "adhere/analytics.hpp"
#include "adhere/clock.hpp"
#include "adhere/domain.hpp"
#include "adhere/event_log.hpp"
#include "adhere/game.hpp"
#include "adhere/scheduler.hpp"
#include "adhere/streaks.hpp"

#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace adhere {

struct Snapshot {
  std::string patient_id;
  std::int64_t as_of_seq = 0;
  GameLedger ledger;
  AdherenceSummary summary;

  bool operator==(const Snapshot&) const = default;
};

struct IntakeAck {
  bool appended = false;  // false for an idempotent duplicate
  std::int64_t seq = 0;   // seq of the stored (or original) record
  Date day;               // slot occurrence the intake was filed under
  std::vector<Award> awards;
};

struct RejectedRow {
  int line = 0;
  std::string reason;
};

struct LabImportResult {
  int accepted = 0;
  std::vector<RejectedRow> rejected;
};

struct SlotView {
  DueSlot due;
  SlotStatus status = SlotStatus::pending;
};

struct TodayView {
  std::string patient_id;
  Date day;
  std::vector<SlotView> slots;
  ReminderPlan reminders;
};

struct Dashboard {
  std::int64_t as_of_seq = 0;
  TodayView today;
  GameLedger ledger;
  AdherenceSummary summary;
  Cell<CvResult> latest_cv;
};

/// Cohort arm assignment: "tag" uses Patient::arm, "id-prefix" uses the
/// patient id up to its first '-'.
enum class ArmRule { tag, id_prefix };
ArmRule parse_arm_rule(std::string_view text);

/// The adherence platform over a data directory.
///
/// Layout: DIR/patients/<id>/{profile.json, events.jsonl, snapshot.json}.
/// events.jsonl is the source of truth; profile and snapshot are derived
/// conveniences. Writes for one patient are serialized on that patient's
/// lock; different patients never contend.
class AdherenceService {
 public:
  AdherenceService(std::filesystem::path data_dir, std::shared_ptr<const Clock> clock);
  ~AdherenceService();

  AdherenceService(const AdherenceService&) = delete;
  AdherenceService& operator=(const AdherenceService&) = delete;

  const std::filesystem::path& data_dir() const { return data_dir_; }
  const Clock& clock() const { return *clock_; }

  void create_patient(const Patient& patient, const DoseSchedule& schedule,
                      std::optional<NotificationPrefs> prefs = std::nullopt);
  void change_schedule(const std::string& patient_id, const DoseSchedule& schedule);
  std::vector<std::string> patient_ids() const;
  Patient patient(const std::string& patient_id) const;

  /// Errors: not_found (patient or slot), day_closed (frozen day), validation.
  IntakeAck record_intake(const std::string& patient_id, const std::string& slot_id,
                          Instant timestamp, IntakeKind kind);
  IntakeAck record_intake(const std::string& patient_id, const std::string& slot_id,
                          std::string_view timestamp, std::string_view kind);

  /// CSV with header `patient_id,draw_date,analyte,value_ng_ml`.
  LabImportResult ingest_labs(std::istream& csv);

  /// Closes every unclosed day up to `through` whose freeze instant has
  /// passed, appending day_close and award records and refreshing snapshots.
  /// Returns the awards emitted per patient.
  std::map<std::string, std::vector<Award>> close_days(Date through);

  TodayView today(const std::string& patient_id) const;
  GameLedger game(const std::string& patient_id) const;
  Dashboard dashboard(const std::string& patient_id, std::optional<DateRange> window) const;
  CohortReport cohort_report(const DateRange& window, ArmRule rule = ArmRule::tag) const;

  /// Ledger and summary as of the latest record.
  Snapshot current_snapshot(const std::string& patient_id) const;
  /// Rebuilds the snapshot by replaying the patient's log from seq 1.
  Snapshot replay_snapshot(const std::string& patient_id) const;
  void write_snapshot(const std::string& patient_id);

  std::vector<IntakeEvent> intakes(const std::string& patient_id) const;
  std::vector<LabResult> labs(const std::string& patient_id) const;
  std::vector<DayOutcome> closed_days(const std::string& patient_id) const;
  std::vector<EventRecord> records(const std::string& patient_id) const;

  /// Bulk append of historical data, bypassing the open-day check. Used to
  /// load simulated cohorts. Duplicates are skipped as in record_intake.
  void import_history(const std::string& patient_id, const std::vector<IntakeEvent>& events,
                      const std::vector<LabResult>& labs);

  struct PatientState;

 private:
  std::shared_ptr<PatientState> find(const std::string& patient_id) const;
  void load_patient(const std::filesystem::path& dir);

  std::filesystem::path data_dir_;
  std::shared_ptr<const Clock> clock_;
  mutable std::shared_mutex patients_mutex_;
  std::map<std::string, std::shared_ptr<PatientState>> patients_;
};

}  // namespace adhere
