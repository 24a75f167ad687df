#include "adhere/error.hpp"
#include "adhere/event_log.hpp"
#include "adhere/json_io.hpp"
#include "adhere/service.hpp"
#include "adhere/sim_loader.hpp"
#include "adhere/simulator.hpp"
#include "support.hpp"

#include <doctest.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

using namespace adhere;
using adhere::testing::TempDir;
using adhere::testing::tacrolimus_bid;

namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::io;
}

struct Fixture {
  TempDir dir{"platform"};
  std::shared_ptr<ManualClock> clock =
      std::make_shared<ManualClock>(parse_instant("2024-03-01T07:00:00Z"));
  std::unique_ptr<AdherenceService> service = std::make_unique<AdherenceService>(dir.path(), clock);

  void add_patient(const std::string& id, const std::string& arm = "") {
    service->create_patient(
        Patient{.patient_id = id, .transplant_date = Date(2024, 1, 15), .arm = arm},
        tacrolimus_bid(id, Date(2024, 3, 1)));
  }

  void reopen() { service = std::make_unique<AdherenceService>(dir.path(), clock); }

  // Logs both doses on each of `days` days starting 2024-03-01, moving the clock along.
  void adherent_days(const std::string& id, int days) {
    for (int i = 0; i < days; ++i) {
      const Instant morning = at_local(Date(2024, 3, 1) + i, TimeOfDay::from_hm(8, 10), Zone::utc());
      clock->set(morning);
      service->record_intake(id, "tac-am", morning, IntakeKind::taken);
      clock->set(morning + absl::Hours(12));
      service->record_intake(id, "tac-pm", morning + absl::Hours(12), IntakeKind::taken);
    }
  }

  fs::path log_path(const std::string& id) const {
    return dir.path() / "patients" / id / "events.jsonl";
  }
};

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_all(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

}  // namespace

TEST_CASE("event log appends and reopens") {
  TempDir dir("log");
  const auto path = dir.path() / "events.jsonl";
  {
    EventLog log(path);
    for (int i = 0; i < 3; ++i) {
      log.append(RecordType::lab, Json{{"i", i}}, parse_instant("2024-01-01T00:00:00Z"));
    }
    CHECK(log.last_seq() == 3);
  }
  EventLog again(path);
  REQUIRE(again.records().size() == 3);
  CHECK(again.records()[2].payload["i"] == 2);
  CHECK(again.discarded_bytes() == 0);
  CHECK(again.append(RecordType::award, Json::object(), parse_instant("2024-01-02T00:00:00Z")).seq == 4);
}

TEST_CASE("event log drops a torn tail and rejects corruption elsewhere") {
  TempDir dir("torn");
  const auto path = dir.path() / "events.jsonl";
  {
    EventLog log(path);
    for (int i = 0; i < 4; ++i) log.append(RecordType::lab, Json{{"i", i}}, absl::UnixEpoch());
  }
  const std::string full = read_all(path);
  const auto last_line = full.rfind('\n', full.size() - 2) + 1;

  write_all(path, full.substr(0, last_line + 10));
  {
    EventLog log(path);
    CHECK(log.records().size() == 3);
    CHECK(log.discarded_bytes() == 10);
    log.append(RecordType::lab, Json{{"i", 99}}, absl::UnixEpoch());
  }
  EventLog reread(path);
  REQUIRE(reread.records().size() == 4);
  CHECK(reread.records()[3].payload["i"] == 99);

  std::string corrupt = read_all(path);
  corrupt[5] = '#';
  write_all(path, corrupt);
  CHECK(code_of([&] { EventLog broken(path); }) == ErrorCode::data);
}

TEST_CASE("record_intake happy path and idempotency") {
  Fixture f;
  f.add_patient("p1");
  f.clock->set(parse_instant("2024-03-01T08:05:00Z"));
  const auto ack = f.service->record_intake("p1", "tac-am", "2024-03-01T08:00:00Z", "taken");
  CHECK(ack.appended);
  CHECK(ack.day == Date(2024, 3, 1));
  const auto again = f.service->record_intake("p1", "tac-am", "2024-03-01T08:01:00Z", "taken");
  CHECK_FALSE(again.appended);
  CHECK(again.seq == ack.seq);
  CHECK(f.service->intakes("p1").size() == 1);
  // A skip for the same slot is a different record, kept for data quality.
  CHECK(f.service->record_intake("p1", "tac-am", "2024-03-01T08:02:00Z", "skipped").appended);
}

TEST_CASE("record_intake error mapping") {
  Fixture f;
  f.add_patient("p1");
  f.clock->set(parse_instant("2024-03-10T09:00:00Z"));
  CHECK(code_of([&] { f.service->record_intake("p1", "tac-am", "2024-03-07T08:00:00Z", "taken"); }) ==
        ErrorCode::day_closed);
  CHECK(code_of([&] { f.service->record_intake("nobody", "tac-am", "2024-03-10T08:00:00Z", "taken"); }) ==
        ErrorCode::not_found);
  CHECK(code_of([&] { f.service->record_intake("p1", "tac-noon", "2024-03-10T08:00:00Z", "taken"); }) ==
        ErrorCode::not_found);
  CHECK(code_of([&] { f.service->record_intake("p1", "tac-am", "10 March, 8am", "taken"); }) ==
        ErrorCode::validation);
  CHECK(code_of([&] { f.service->record_intake("p1", "tac-am", "2024-03-11T08:00:00Z", "taken"); }) ==
        ErrorCode::validation);
  // Yesterday is still open until 06:00 today; the day before is frozen.
  f.clock->set(parse_instant("2024-03-10T05:00:00Z"));
  CHECK(f.service->record_intake("p1", "tac-pm", "2024-03-09T20:00:00Z", "taken").appended);
  CHECK(code_of([&] { f.service->record_intake("p1", "tac-pm", "2024-03-08T20:00:00Z", "taken"); }) ==
        ErrorCode::day_closed);
}

TEST_CASE("patient creation rules") {
  Fixture f;
  f.add_patient("p1");
  CHECK(code_of([&] { f.add_patient("p1"); }) == ErrorCode::conflict);
  CHECK(code_of([&] { f.add_patient("../escape"); }) == ErrorCode::validation);
  CHECK(code_of([&] {
          f.service->create_patient(Patient{.patient_id = "p2", .transplant_date = Date(2025, 1, 1)},
                                    tacrolimus_bid("p2"));
        }) == ErrorCode::validation);
  auto empty = tacrolimus_bid("p3");
  empty.medications.clear();
  CHECK(code_of([&] {
          f.service->create_patient(Patient{.patient_id = "p3", .transplant_date = Date(2024, 1, 1)}, empty);
        }) == ErrorCode::validation);
  CHECK(f.service->patient_ids() == std::vector<std::string>{"p1"});
}

TEST_CASE("lab import") {
  Fixture f;
  f.add_patient("p1");
  f.add_patient("p2");
  SUBCASE("valid rows") {
    std::istringstream csv(
        "patient_id,draw_date,analyte,value_ng_ml\n"
        "p1,2024-02-01,tacrolimus,8.1\n"
        "p1,2024-02-08,tacrolimus,9.4\n"
        "p2,2024-02-01,tacrolimus,7.0\n");
    const auto r = f.service->ingest_labs(csv);
    CHECK(r.accepted == 3);
    CHECK(r.rejected.empty());
    CHECK(f.service->labs("p1").size() == 2);
  }
  SUBCASE("invalid rows are reported and not written") {
    std::istringstream csv(
        "patient_id,draw_date,analyte,value_ng_ml\n"
        "p1,2024-02-01,tacrolimus,-1\n"
        "p1,2024-02-02,tacrolimus,8.0\n"
        "p1,2024-02-02,tacrolimus,8.5\n"
        "p9,2024-02-02,tacrolimus,8.5\n"
        "p2,2024-02-31,tacrolimus,8.5\n"
        "p2,2024-02-03,tacrolimus,abc\n"
        "p2,2024-02-03\n");
    const auto r = f.service->ingest_labs(csv);
    CHECK(r.accepted == 1);
    REQUIRE(r.rejected.size() == 6);
    CHECK(r.rejected[0].line == 2);
    CHECK(r.rejected[0].reason == "nonpositive value");
    CHECK(r.rejected[1].reason == "duplicate draw for patient and date");
    CHECK(r.rejected[2].reason == "unknown patient");
    CHECK(r.rejected[4].reason == "malformed value");
    CHECK(r.rejected[5].reason == "expected 4 fields");
    CHECK(f.service->labs("p2").empty());
  }
  SUBCASE("bad header") {
    std::istringstream csv("id,date,value\n");
    CHECK(code_of([&] { f.service->ingest_labs(csv); }) == ErrorCode::validation);
    std::istringstream empty("");
    CHECK(code_of([&] { f.service->ingest_labs(empty); }) == ErrorCode::io);
  }
}

TEST_CASE("dashboard on a new patient") {
  Fixture f;
  f.add_patient("p1");
  const auto d = f.service->dashboard("p1", std::nullopt);
  CHECK(d.ledger.total_points == 0);
  CHECK(d.ledger.challenges_completed == 0);
  REQUIRE(d.today.slots.size() == 2);
  for (const auto& s : d.today.slots) CHECK(s.status == SlotStatus::pending);
  CHECK_FALSE(d.latest_cv.available());
  CHECK(d.today.reminders.entries.size() == 2);
  CHECK(code_of([&] { f.service->dashboard("ghost", std::nullopt); }) == ErrorCode::not_found);
}

TEST_CASE("seven adherent days complete the first challenge") {
  Fixture f;
  f.add_patient("p1");
  f.adherent_days("p1", 7);
  CHECK(f.service->game("p1").total_points == 6);  // day 7 is still open
  f.clock->set(parse_instant("2024-03-08T07:00:00Z"));
  const auto awards = f.service->close_days(Date(2024, 3, 8));
  CHECK(awards.at("p1").size() == 3);

  const auto d = f.service->dashboard("p1", std::nullopt);
  CHECK(d.ledger.total_points == 7);
  CHECK(d.ledger.challenges_completed == 1);
  REQUIRE(d.ledger.rewards.size() == 1);
  CHECK(d.ledger.rewards[0].badge_id == "badge-1-challenge");
  CHECK(d.summary.current_streak_days == 7);
  CHECK(d.summary.missed_dose_rate == 0.0);
  const Json view = game_view(d.ledger);
  CHECK(view["level"] == 1);
}

TEST_CASE("intake after a frozen day closes it and returns its awards") {
  Fixture f;
  f.add_patient("p1");
  f.adherent_days("p1", 7);
  f.clock->set(parse_instant("2024-03-08T08:00:00Z"));
  const auto ack = f.service->record_intake("p1", "tac-am", "2024-03-08T08:00:00Z", "taken");
  REQUIRE(ack.awards.size() == 3);
  CHECK(ack.awards[1].kind == AwardKind::challenge_completed);
}

TEST_CASE("lab window on the dashboard") {
  Fixture f;
  f.add_patient("p1");
  std::istringstream csv(
      "patient_id,draw_date,analyte,value_ng_ml\n"
      "p1,2024-02-01,tacrolimus,8\np1,2024-02-08,tacrolimus,10\np1,2024-02-15,tacrolimus,12\n");
  f.service->ingest_labs(csv);
  const auto d = f.service->dashboard("p1", parse_date_range("2024-02-01..2024-02-29"));
  REQUIRE(d.latest_cv.available());
  CHECK(d.latest_cv.value->cv_percent == doctest::Approx(20.0));
  CHECK_FALSE(f.service->dashboard("p1", parse_date_range("2024-02-10..2024-02-29")).latest_cv.available());
}

TEST_CASE("restart replays the log and snapshot equals replay") {
  Fixture f;
  f.add_patient("p1");
  f.adherent_days("p1", 10);
  f.clock->set(parse_instant("2024-03-14T09:00:00Z"));
  f.service->close_days(Date(2024, 3, 14));
  const auto before = f.service->current_snapshot("p1");
  CHECK(before == f.service->replay_snapshot("p1"));
  CHECK(before.ledger.total_points == 10);
  CHECK(before.ledger.current_streak_days == 0);

  f.reopen();
  CHECK(f.service->current_snapshot("p1") == before);
  CHECK(f.service->intakes("p1").size() == 20);
  CHECK(f.service->closed_days("p1").size() == 13);
}

TEST_CASE("crash mid-record: partial record discarded, replay succeeds") {
  Fixture f;
  f.add_patient("p1");
  f.adherent_days("p1", 3);
  const auto path = f.log_path("p1");
  const std::string full = read_all(path);
  const auto records_before = f.service->records("p1").size();

  // Cut the final record in half, as a crash during write would.
  const auto last_start = full.rfind('\n', full.size() - 2) + 1;
  write_all(path, full.substr(0, last_start + (full.size() - last_start) / 2));
  f.reopen();
  CHECK(f.service->records("p1").size() == records_before - 1);
  CHECK(f.service->current_snapshot("p1") == f.service->replay_snapshot("p1"));
  // The lost intake can be logged again.
  CHECK(f.service->intakes("p1").size() == 5);
}

TEST_CASE("awards lost after a day_close record are restored on open") {
  Fixture f;
  f.add_patient("p1");
  f.adherent_days("p1", 7);
  f.clock->set(parse_instant("2024-03-08T07:00:00Z"));
  f.service->close_days(Date(2024, 3, 8));
  const auto path = f.log_path("p1");
  std::string full = read_all(path);
  // Drop the final two award lines whole.
  for (int i = 0; i < 2; ++i) full.erase(full.rfind('\n', full.size() - 2) + 1);
  write_all(path, full);
  fs::remove(path.parent_path() / "snapshot.json");

  f.reopen();
  const auto records = f.service->records("p1");
  int awards = 0;
  for (const auto& r : records) awards += r.type == RecordType::award;
  CHECK(awards == 7 + 2);
  CHECK(f.service->game("p1").challenges_completed == 1);
}

TEST_CASE("100 concurrent duplicate intakes store one event") {
  Fixture f;
  f.add_patient("p1");
  f.clock->set(parse_instant("2024-03-01T08:05:00Z"));
  std::atomic<int> appended{0};
  std::vector<std::int64_t> seqs(100);
  {
    std::vector<std::jthread> threads;
    for (int i = 0; i < 100; ++i) {
      threads.emplace_back([&, i] {
        const auto ack = f.service->record_intake("p1", "tac-am", "2024-03-01T08:00:00Z", "taken");
        appended += ack.appended;
        seqs[static_cast<std::size_t>(i)] = ack.seq;
      });
    }
  }
  CHECK(appended == 1);
  CHECK(std::all_of(seqs.begin(), seqs.end(), [&](auto s) { return s == seqs[0]; }));
  CHECK(f.service->intakes("p1").size() == 1);
  f.reopen();
  CHECK(f.service->intakes("p1").size() == 1);
}

TEST_CASE("cohort report from the store") {
  Fixture f;
  SUBCASE("empty store") {
    const auto r = f.service->cohort_report(parse_date_range("2024-01-01..2024-12-31"));
    CHECK_FALSE(r.comparison.available());
    CHECK_FALSE(r.logistic.available());
    CHECK_FALSE(r.spearman.available());
    CHECK_FALSE(r.subgroup_vs_nonusers.available());
    CHECK_FALSE(r.arms[0].mean_cv.available());
  }
  SUBCASE("single arm") {
    f.add_patient("a1", "app");
    f.add_patient("a2", "app");
    std::istringstream csv(
        "patient_id,draw_date,analyte,value_ng_ml\n"
        "a1,2024-02-01,tacrolimus,8\na1,2024-02-08,tacrolimus,10\n"
        "a2,2024-02-01,tacrolimus,7\na2,2024-02-08,tacrolimus,11\n");
    f.service->ingest_labs(csv);
    const auto r = f.service->cohort_report(parse_date_range("2024-01-01..2024-12-31"));
    CHECK(r.arms[0].mean_cv.available());
    CHECK_FALSE(r.arms[1].mean_cv.available());
    CHECK_FALSE(r.comparison.available());
  }
  SUBCASE("simulated cohort loaded through the store") {
    sim::CohortConfig c;
    c.arms = {sim::ArmConfig{"app", 5, {0.9, 0.3, 0.0, 1}},
              sim::ArmConfig{"control", 5, {0.9, 0.0, 0.0, 2}}};
    c.days = 45;
    c.schedule_template = sim::default_schedule_template();
    const auto cohort = sim::simulate_cohort(c);
    f.clock->set(parse_instant("2024-06-01T00:00:00Z"));
    CHECK(load_simulation(*f.service, cohort) == 10);
    const auto from_store = f.service->cohort_report(cohort.period(), ArmRule::id_prefix);
    const auto direct = cohort_report(cohort.records(), ReportOptions{.window = cohort.period()});
    CHECK(Json(from_store).dump() == Json(direct).dump());
    for (const auto& m : cohort.members) {
      CHECK(f.service->game(m.sim.patient.patient_id) == m.ledger);
    }
  }
}
