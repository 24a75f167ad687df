#include "adhere/service.hpp"

#include "adhere/error.hpp"
#include "adhere/json_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <tuple>

namespace adhere {

namespace fs = std::filesystem;

struct AdherenceService::PatientState {
  Patient patient;
  Zone zone = Zone::utc();
  NotificationPrefs prefs;
  fs::path dir;
  ScheduleHistory schedules;
  std::vector<IntakeEvent> intakes;
  std::map<std::tuple<std::string, Date, IntakeKind>, std::int64_t> intake_keys;
  std::vector<LabResult> labs;
  std::set<std::pair<Date, Analyte>> lab_keys;
  std::vector<DayOutcome> closed;
  GameLedger ledger;
  std::vector<Award> awards;
  std::unique_ptr<EventLog> log;
  mutable std::shared_mutex mutex;
};

namespace {

using State = AdherenceService::PatientState;

// Clock skew tolerated on client-supplied intake timestamps.
constexpr absl::Duration kFutureTolerance = absl::Minutes(5);

void require_safe_id(const std::string& id) {
  const bool ok = !id.empty() && id != "." && id != ".." &&
                  std::all_of(id.begin(), id.end(), [](char c) {
                    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
                  });
  if (!ok) throw Error(ErrorCode::validation, "patient_id must match [A-Za-z0-9._-]+");
}

void write_file_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::io, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Slot definition and occurrence day for an intake, using the schedule in
// force around the intake time.
std::pair<const DoseSlot*, Date> resolve_slot(const State& st, const std::string& slot_id, Instant ts) {
  const Date local = local_day(ts, st.zone);
  for (Date probe : {local, local - 1, local + 1}) {
    const DoseSchedule* schedule = st.schedules.in_force(probe);
    if (schedule == nullptr) continue;
    if (const DoseSlot* slot = schedule->find_slot(slot_id)) {
      const Date day = occurrence_day(*slot, ts, st.zone);
      const DoseSchedule* on_day = st.schedules.in_force(day);
      if (on_day != nullptr && on_day->find_slot(slot_id) != nullptr) return {slot, day};
    }
  }
  return {nullptr, local};
}

Date summary_start(const State& st) {
  if (!st.closed.empty()) return st.closed.front().day;
  return st.schedules.first_effective().value_or(st.patient.transplant_date);
}

AdherenceSummary overall_summary(const State& st) {
  const Date from = summary_start(st);
  const Date to = st.closed.empty() ? from : st.closed.back().day;
  return summarize(st.closed, {from, to});
}

void apply_record(State& st, const EventRecord& r, bool fold_ledger) {
  switch (r.type) {
    case RecordType::schedule_change:
      st.schedules.add(r.payload.get<DoseSchedule>());
      break;
    case RecordType::intake: {
      auto e = r.payload.get<IntakeEvent>();
      const auto [slot, day] = resolve_slot(st, e.slot_id, e.timestamp);
      st.intake_keys.emplace(std::make_tuple(e.slot_id, day, e.kind), r.seq);
      st.intakes.push_back(std::move(e));
      break;
    }
    case RecordType::lab: {
      auto lab = r.payload.get<LabResult>();
      st.lab_keys.emplace(lab.draw_date, lab.analyte);
      st.labs.push_back(std::move(lab));
      break;
    }
    case RecordType::day_close: {
      auto outcome = r.payload.get<DayOutcome>();
      if (fold_ledger) st.ledger = apply_day(st.ledger, outcome).ledger;
      st.closed.push_back(std::move(outcome));
      break;
    }
    case RecordType::award:
      st.awards.push_back(r.payload.at("award").get<Award>());
      break;
  }
}

const EventRecord& append(State& st, RecordType type, Json payload, Instant recorded_at) {
  const auto& record = st.log->append(type, std::move(payload), recorded_at);
  apply_record(st, record, true);
  return record;
}

Json award_payload(const std::string& patient_id, const Award& award) {
  return Json{{"patient_id", patient_id}, {"award", award}};
}

// Closes unclosed days up to `through` that are frozen as of `now`.
std::vector<Award> close_locked(State& st, Date through, Instant now) {
  std::vector<Award> emitted;
  const auto first_effective = st.schedules.first_effective();
  if (!first_effective) return emitted;
  const Date first = st.ledger.last_applied_day ? *st.ledger.last_applied_day + 1 : *first_effective;
  // freeze_instant(d) <= now  <=>  d < local_day(now - grace)
  const Date last_frozen = local_day(now - kLateEntryGrace, st.zone) - 1;
  const Date last = std::min(through, last_frozen);
  if (last < first) return emitted;
  for (const auto& outcome : final_outcomes(st.schedules, st.intakes, first, last, st.zone)) {
    auto step = apply_day(st.ledger, outcome);
    st.log->append(RecordType::day_close, outcome, now);
    st.closed.push_back(outcome);
    st.ledger = std::move(step.ledger);
    for (const auto& award : step.awards) {
      st.log->append(RecordType::award, award_payload(st.patient.patient_id, award), now);
      st.awards.push_back(award);
      emitted.push_back(award);
    }
  }
  return emitted;
}

Snapshot make_snapshot(const State& st) {
  return Snapshot{
      .patient_id = st.patient.patient_id,
      .as_of_seq = st.log->last_seq(),
      .ledger = st.ledger,
      .summary = overall_summary(st),
  };
}

Json snapshot_json(const Snapshot& s) {
  return Json{{"patient_id", s.patient_id},
              {"as_of_seq", s.as_of_seq},
              {"ledger", s.ledger},
              {"summary", s.summary}};
}

Snapshot snapshot_from_json(const Json& j) {
  return Snapshot{
      .patient_id = j.at("patient_id").get<std::string>(),
      .as_of_seq = j.at("as_of_seq").get<std::int64_t>(),
      .ledger = j.at("ledger").get<GameLedger>(),
      .summary = j.at("summary").get<AdherenceSummary>(),
  };
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    fields.emplace_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return fields;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

ArmRule parse_arm_rule(std::string_view text) {
  if (text.empty() || text == "tag") return ArmRule::tag;
  if (text == "id-prefix") return ArmRule::id_prefix;
  throw Error(ErrorCode::validation, "unknown arm rule '" + std::string(text) + "'");
}

AdherenceService::AdherenceService(fs::path data_dir, std::shared_ptr<const Clock> clock)
    : data_dir_(std::move(data_dir)), clock_(std::move(clock)) {
  std::error_code ec;
  fs::create_directories(data_dir_ / "patients", ec);
  if (ec) throw Error(ErrorCode::io, "cannot create data directory " + data_dir_.string());
  for (const auto& entry : fs::directory_iterator(data_dir_ / "patients")) {
    if (entry.is_directory() && fs::exists(entry.path() / "profile.json")) load_patient(entry.path());
  }
}

AdherenceService::~AdherenceService() = default;

void AdherenceService::load_patient(const fs::path& dir) {
  auto st = std::make_shared<State>();
  const Json profile = parse_json(read_file(dir / "profile.json"));
  st->patient = profile.at("patient").get<Patient>();
  st->zone = Zone::load(st->patient.timezone);
  st->prefs = profile.value("prefs", NotificationPrefs{});
  st->prefs.patient_id = st->patient.patient_id;
  st->dir = dir;
  st->ledger.patient_id = st->patient.patient_id;
  st->log = std::make_unique<EventLog>(dir / "events.jsonl");

  std::optional<Snapshot> snapshot;
  if (fs::exists(dir / "snapshot.json")) {
    try {
      snapshot = snapshot_from_json(parse_json(read_file(dir / "snapshot.json")));
    } catch (const std::exception&) {
      snapshot.reset();
    }
    // A snapshot ahead of the log (log tail lost) is stale; replay instead.
    if (snapshot && snapshot->as_of_seq > st->log->last_seq()) snapshot.reset();
  }
  if (snapshot) st->ledger = snapshot->ledger;
  for (const auto& r : st->log->records()) {
    apply_record(*st, r, !snapshot || r.seq > snapshot->as_of_seq);
  }

  // A crash between a day_close record and its award records leaves the
  // awards short; re-emit the missing tail.
  std::vector<Award> expected;
  GameLedger ledger{.patient_id = st->patient.patient_id};
  for (const auto& o : st->closed) {
    auto step = apply_day(ledger, o);
    ledger = std::move(step.ledger);
    expected.insert(expected.end(), step.awards.begin(), step.awards.end());
  }
  if (st->awards.size() < expected.size() &&
      std::equal(st->awards.begin(), st->awards.end(), expected.begin())) {
    for (std::size_t i = st->awards.size(); i < expected.size(); ++i) {
      st->log->append(RecordType::award, award_payload(st->patient.patient_id, expected[i]), clock_->now());
      st->awards.push_back(expected[i]);
    }
  }

  std::unique_lock lock(patients_mutex_);
  patients_[st->patient.patient_id] = std::move(st);
}

std::shared_ptr<State> AdherenceService::find(const std::string& patient_id) const {
  std::shared_lock lock(patients_mutex_);
  auto it = patients_.find(patient_id);
  if (it == patients_.end()) throw Error(ErrorCode::not_found, "unknown patient '" + patient_id + "'");
  return it->second;
}

void AdherenceService::create_patient(const Patient& patient, const DoseSchedule& schedule,
                                      std::optional<NotificationPrefs> prefs) {
  require_safe_id(patient.patient_id);
  const Zone zone = Zone::load(patient.timezone);
  validate_patient(patient, local_day(clock_->now(), zone));
  DoseSchedule sched = schedule;
  if (sched.patient_id.empty()) sched.patient_id = patient.patient_id;
  if (sched.patient_id != patient.patient_id) {
    throw Error(ErrorCode::validation, "schedule patient_id does not match patient");
  }
  ScheduleHistory probe;
  probe.add(sched);
  NotificationPrefs p = prefs.value_or(NotificationPrefs{});
  p.patient_id = patient.patient_id;
  validate_prefs(p);

  std::unique_lock lock(patients_mutex_);
  if (patients_.contains(patient.patient_id)) {
    throw Error(ErrorCode::conflict, "patient '" + patient.patient_id + "' already exists");
  }
  auto st = std::make_shared<State>();
  st->patient = patient;
  st->zone = zone;
  st->prefs = p;
  st->dir = data_dir_ / "patients" / patient.patient_id;
  st->ledger.patient_id = patient.patient_id;
  fs::create_directories(st->dir);
  write_file_atomically(st->dir / "profile.json", Json{{"patient", patient}, {"prefs", p}}.dump(2) + "\n");
  st->log = std::make_unique<EventLog>(st->dir / "events.jsonl");
  append(*st, RecordType::schedule_change, sched, clock_->now());
  patients_[patient.patient_id] = std::move(st);
}

void AdherenceService::change_schedule(const std::string& patient_id, const DoseSchedule& schedule) {
  auto st = find(patient_id);
  std::unique_lock lock(st->mutex);
  DoseSchedule sched = schedule;
  if (sched.patient_id.empty()) sched.patient_id = patient_id;
  if (sched.patient_id != patient_id) {
    throw Error(ErrorCode::validation, "schedule patient_id does not match patient");
  }
  ScheduleHistory probe;
  probe.add(sched);
  if (st->ledger.last_applied_day && sched.effective_from <= *st->ledger.last_applied_day) {
    throw Error(ErrorCode::day_closed, "schedule change would rewrite closed days");
  }
  append(*st, RecordType::schedule_change, sched, clock_->now());
}

std::vector<std::string> AdherenceService::patient_ids() const {
  std::shared_lock lock(patients_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : patients_) ids.push_back(id);
  return ids;
}

Patient AdherenceService::patient(const std::string& patient_id) const {
  auto st = find(patient_id);
  std::shared_lock lock(st->mutex);
  return st->patient;
}

IntakeAck AdherenceService::record_intake(const std::string& patient_id, const std::string& slot_id,
                                          Instant timestamp, IntakeKind kind) {
  auto st = find(patient_id);
  std::unique_lock lock(st->mutex);
  const Instant now = clock_->now();
  if (timestamp > now + kFutureTolerance) {
    throw Error(ErrorCode::validation, "intake timestamp is in the future");
  }
  const auto [slot, day] = resolve_slot(*st, slot_id, timestamp);
  if (slot == nullptr) {
    throw Error(ErrorCode::not_found, "unknown slot '" + slot_id + "' for patient '" + patient_id + "'");
  }
  if ((st->ledger.last_applied_day && day <= *st->ledger.last_applied_day) ||
      now >= freeze_instant(day, st->zone)) {
    throw Error(ErrorCode::day_closed, "day " + format_date(day) + " is closed for logging");
  }
  IntakeAck ack{.day = day};
  const auto key = std::make_tuple(slot_id, day, kind);
  if (auto it = st->intake_keys.find(key); it != st->intake_keys.end()) {
    ack.seq = it->second;
  } else {
    ack.seq = append(*st, RecordType::intake, IntakeEvent{patient_id, slot_id, timestamp, kind}, now).seq;
    ack.appended = true;
  }
  // Days that froze since the last close are settled now so their awards
  // reach the patient with this response.
  ack.awards = close_locked(*st, local_day(now, st->zone), now);
  return ack;
}

IntakeAck AdherenceService::record_intake(const std::string& patient_id, const std::string& slot_id,
                                          std::string_view timestamp, std::string_view kind) {
  return record_intake(patient_id, slot_id, parse_instant(timestamp), parse_intake_kind(kind));
}

LabImportResult AdherenceService::ingest_labs(std::istream& csv) {
  static constexpr std::string_view kHeader = "patient_id,draw_date,analyte,value_ng_ml";
  std::string line;
  if (!std::getline(csv, line)) throw Error(ErrorCode::io, "labs stream is empty or unreadable");
  if (trim(line) != kHeader) {
    throw Error(ErrorCode::validation, "labs header must be '" + std::string(kHeader) + "'");
  }
  LabImportResult result;
  int line_no = 1;
  while (std::getline(csv, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto reject = [&](std::string reason) { result.rejected.push_back({line_no, std::move(reason)}); };
    const auto fields = split_csv_line(trim(line));
    if (fields.size() != 4) {
      reject("expected 4 fields");
      continue;
    }
    std::shared_ptr<State> st;
    LabResult lab;
    try {
      st = find(trim(fields[0]));
      lab.patient_id = trim(fields[0]);
      lab.draw_date = parse_date(trim(fields[1]));
      lab.analyte = parse_analyte(trim(fields[2]));
    } catch (const Error& e) {
      reject(e.code() == ErrorCode::not_found ? "unknown patient" : e.what());
      continue;
    }
    const std::string value_text = trim(fields[3]);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
    if (ec != std::errc() || ptr != value_text.data() + value_text.size() || !std::isfinite(value)) {
      reject("malformed value");
      continue;
    }
    if (!(value > 0.0)) {
      reject("nonpositive value");
      continue;
    }
    lab.value_ng_ml = value;
    std::unique_lock lock(st->mutex);
    if (st->lab_keys.contains({lab.draw_date, lab.analyte})) {
      reject("duplicate draw for patient and date");
      continue;
    }
    append(*st, RecordType::lab, lab, clock_->now());
    ++result.accepted;
  }
  if (csv.bad()) throw Error(ErrorCode::io, "error while reading labs stream");
  return result;
}

std::map<std::string, std::vector<Award>> AdherenceService::close_days(Date through) {
  std::map<std::string, std::vector<Award>> out;
  const Instant now = clock_->now();
  for (const auto& id : patient_ids()) {
    auto st = find(id);
    std::unique_lock lock(st->mutex);
    const auto before = st->log->last_seq();
    out[id] = close_locked(*st, through, now);
    if (st->log->last_seq() != before) {
      write_file_atomically(st->dir / "snapshot.json", snapshot_json(make_snapshot(*st)).dump(2) + "\n");
    }
  }
  return out;
}

namespace {

TodayView today_locked(const State& st, Instant now) {
  TodayView view{.patient_id = st.patient.patient_id, .day = local_day(now, st.zone)};
  view.reminders.day = view.day;
  const DoseSchedule* schedule = st.schedules.in_force(view.day);
  if (schedule == nullptr) return view;
  const auto todays = events_on_day(*schedule, st.intakes, view.day, st.zone);
  std::set<std::string> logged;
  for (const auto& due : due_slots(*schedule, view.day, st.zone)) {
    std::vector<IntakeEvent> for_slot;
    for (const auto& e : todays) {
      if (e.slot_id == due.slot_id) for_slot.push_back(e);
    }
    const auto status = classify_slot(due, for_slot, now).status;
    // Any logged intake, taken or skipped, silences further reminders.
    if (status != SlotStatus::pending && status != SlotStatus::missed) logged.insert(due.slot_id);
    view.slots.push_back({due, status});
  }
  view.reminders = reminder_plan(*schedule, st.prefs, view.day, logged, st.zone);
  return view;
}

}  // namespace

TodayView AdherenceService::today(const std::string& patient_id) const {
  auto st = find(patient_id);
  std::shared_lock lock(st->mutex);
  return today_locked(*st, clock_->now());
}

GameLedger AdherenceService::game(const std::string& patient_id) const {
  auto st = find(patient_id);
  std::shared_lock lock(st->mutex);
  return st->ledger;
}

Dashboard AdherenceService::dashboard(const std::string& patient_id, std::optional<DateRange> window) const {
  auto st = find(patient_id);
  std::shared_lock lock(st->mutex);
  const Instant now = clock_->now();
  Dashboard d{.as_of_seq = st->log->last_seq(), .today = today_locked(*st, now), .ledger = st->ledger};
  const DateRange w = window.value_or(DateRange{summary_start(*st), std::max(summary_start(*st), d.today.day)});
  d.summary = summarize(st->closed, w);
  try {
    d.latest_cv = Cell<CvResult>{coefficient_of_variation(LabSeries{patient_id, st->labs}, w), {}};
  } catch (const Error& e) {
    d.latest_cv = Cell<CvResult>::unavailable(e.what());
  }
  return d;
}

CohortReport AdherenceService::cohort_report(const DateRange& window, ArmRule rule) const {
  std::vector<PatientRecord> records;
  for (const auto& id : patient_ids()) {
    auto st = find(id);
    std::shared_lock lock(st->mutex);
    std::string arm = st->patient.arm;
    if (rule == ArmRule::id_prefix) arm = id.substr(0, id.find('-'));
    if (arm.empty()) continue;
    LabSeries labs{id, st->labs};
    std::stable_sort(labs.observations.begin(), labs.observations.end(),
                     [](const auto& a, const auto& b) { return a.draw_date < b.draw_date; });
    records.push_back(PatientRecord{
        .patient_id = id,
        .arm = arm,
        .labs = std::move(labs),
        .summary = summarize(st->closed, window),
        .ledger = st->ledger,
        .outcomes = st->closed,
    });
  }
  return adhere::cohort_report(std::move(records), ReportOptions{.window = window});
}

Snapshot AdherenceService::current_snapshot(const std::string& patient_id) const {
  auto st = find(patient_id);
  std::shared_lock lock(st->mutex);
  return make_snapshot(*st);
}

Snapshot AdherenceService::replay_snapshot(const std::string& patient_id) const {
  auto st = find(patient_id);
  std::shared_lock lock(st->mutex);
  State fresh;
  fresh.patient = st->patient;
  fresh.zone = st->zone;
  fresh.ledger.patient_id = patient_id;
  for (const auto& r : st->log->records()) apply_record(fresh, r, true);
  return Snapshot{
      .patient_id = patient_id,
      .as_of_seq = st->log->last_seq(),
      .ledger = fresh.ledger,
      .summary = overall_summary(fresh),
  };
}

void AdherenceService::write_snapshot(const std::string& patient_id) {
  auto st = find(patient_id);
  std::unique_lock lock(st->mutex);
  write_file_atomically(st->dir / "snapshot.json", snapshot_json(make_snapshot(*st)).dump(2) + "\n");
}

std::vector<IntakeEvent> AdherenceService::intakes(const std::string& patient_id) const {
  auto st = find(patient_id);
  std::shared_lock lock(st->mutex);
  return st->intakes;
}

std::vector<LabResult> AdherenceService::labs(const std::string& patient_id) const {
  auto st = find(patient_id);
  std::shared_lock lock(st->mutex);
  return st->labs;
}

std::vector<DayOutcome> AdherenceService::closed_days(const std::string& patient_id) const {
  auto st = find(patient_id);
  std::shared_lock lock(st->mutex);
  return st->closed;
}

std::vector<EventRecord> AdherenceService::records(const std::string& patient_id) const {
  auto st = find(patient_id);
  std::shared_lock lock(st->mutex);
  return st->log->records();
}

void AdherenceService::import_history(const std::string& patient_id,
                                      const std::vector<IntakeEvent>& events,
                                      const std::vector<LabResult>& labs) {
  auto st = find(patient_id);
  std::unique_lock lock(st->mutex);
  for (const auto& e : events) {
    const auto [slot, day] = resolve_slot(*st, e.slot_id, e.timestamp);
    if (slot == nullptr) throw Error(ErrorCode::not_found, "unknown slot '" + e.slot_id + "'");
    if (st->ledger.last_applied_day && day <= *st->ledger.last_applied_day) {
      throw Error(ErrorCode::day_closed, "day " + format_date(day) + " is already closed");
    }
    if (st->intake_keys.contains(std::make_tuple(e.slot_id, day, e.kind))) continue;
    append(*st, RecordType::intake, e, e.timestamp);
  }
  for (const auto& lab : labs) {
    if (st->lab_keys.contains({lab.draw_date, lab.analyte})) continue;
    append(*st, RecordType::lab, lab, at_local(lab.draw_date, TimeOfDay::from_hm(12, 0), st->zone));
  }
}

}  // namespace adhere
