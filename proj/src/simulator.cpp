#include "adhere/simulator.hpp"

#include "adhere/error.hpp"
#include "adhere/json_io.hpp"
#include "adhere/parallel.hpp"
#include "adhere/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <random>
#include <sstream>

namespace adhere::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct ArmSlot {
  const ArmConfig* arm;
  int index_in_arm;
};

ArmSlot locate(const CohortConfig& config, int patient_index) {
  int offset = patient_index;
  for (const auto& arm : config.arms) {
    if (offset < arm.patients) return {&arm, offset};
    offset -= arm.patients;
  }
  throw Error(ErrorCode::config, "patient index out of range: " + std::to_string(patient_index));
}

std::string patient_id_for(const ArmSlot& slot) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "-%04d", slot.index_in_arm + 1);
  return slot.arm->label + buf;
}

}  // namespace

int CohortConfig::total_patients() const {
  int n = 0;
  for (const auto& arm : arms) n += arm.patients;
  return n;
}

DoseSchedule default_schedule_template() {
  return DoseSchedule{
      .patient_id = "template",
      .medications = {MedicationLine{
          .med_name = "tacrolimus",
          .is_immunosuppressant = true,
          .slots = {DoseSlot{.slot_id = "tac-am", .nominal_time = TimeOfDay::from_hm(8, 0)},
                    DoseSlot{.slot_id = "tac-pm", .nominal_time = TimeOfDay::from_hm(20, 0)}},
      }},
      .effective_from = Date(2024, 1, 1),
  };
}

void validate_config(const CohortConfig& config) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::config, msg); };
  if (config.arms.empty()) fail("at least one arm is required");
  for (const auto& arm : config.arms) {
    if (arm.label.empty()) fail("arm label empty");
    if (arm.patients <= 0) fail("arm '" + arm.label + "' needs a positive patient count");
    const auto& b = arm.behavior;
    if (!(b.base_daily_adherence_prob >= 0.0 && b.base_daily_adherence_prob <= 1.0)) {
      fail("base_daily_adherence_prob must be in [0,1]");
    }
    if (!(b.gamification_uplift >= 0.0 && b.gamification_uplift < 1.0)) {
      fail("gamification_uplift must be in [0,1)");
    }
    if (!std::isfinite(b.post_surgery_decay)) fail("post_surgery_decay must be finite");
  }
  if (config.days <= 0) fail("days must be positive");
  const auto& l = config.labs;
  if (!(l.true_mean_level > 0 && l.sd_adherent > 0 && l.sd_inflation_per_missrate > 0 &&
        l.draw_interval_days >= 1)) {
    fail("lab model parameters must be positive");
  }
  Zone::load(config.timezone);
  DoseSchedule probe = config.schedule_template;
  if (probe.patient_id.empty()) probe.patient_id = "template";
  if (auto v = validate_schedule(probe); !v.empty()) fail("schedule template invalid: " + v.front());
}

std::uint64_t patient_seed(std::uint64_t master_seed, std::uint64_t arm_seed, int patient_index) {
  return splitmix64(splitmix64(master_seed ^ splitmix64(arm_seed)) +
                    static_cast<std::uint64_t>(patient_index));
}

SimulatedPatient simulate_patient(const CohortConfig& config, int patient_index) {
  const ArmSlot slot = locate(config, patient_index);
  const BehaviorParams& behavior = slot.arm->behavior;
  const Zone zone = Zone::load(config.timezone);
  std::mt19937_64 rng(patient_seed(config.master_seed, behavior.seed, patient_index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> standard_normal(0.0, 1.0);

  SimulatedPatient out;
  out.patient = Patient{
      .patient_id = patient_id_for(slot),
      .transplant_date = config.start_date,
      .organ = Organ::kidney,
      .timezone = config.timezone,
      .arm = slot.arm->label,
  };
  out.schedule = config.schedule_template;
  out.schedule.patient_id = out.patient.patient_id;
  out.schedule.effective_from = config.start_date;
  out.labs.patient_id = out.patient.patient_id;
  out.live_ledger.patient_id = out.patient.patient_id;

  std::deque<std::pair<int, int>> trailing;  // (scheduled, missed) per recent day
  int trailing_scheduled = 0;
  int trailing_missed = 0;
  bool uplifted = false;
  for (int i = 0; i < config.days; ++i) {
    const Date day = config.start_date + i;
    const double p = std::clamp(behavior.base_daily_adherence_prob + behavior.post_surgery_decay * i, 0.0, 1.0);
    const double miss = (1.0 - p) * (uplifted ? 1.0 - behavior.gamification_uplift : 1.0);

    int scheduled = 0;
    int taken = 0;
    for (const auto& due : due_slots(out.schedule, day, zone)) {
      ++scheduled;
      if (unit(rng) < miss) continue;
      ++taken;
      // Intake lands within +-30 min of the nominal time, inside the window.
      const auto before = std::min<absl::Duration>(absl::Minutes(30), due.nominal - due.window_start);
      const auto after = std::min<absl::Duration>(absl::Minutes(30), due.window_end - due.nominal);
      const double u = unit(rng);
      const auto offset = absl::Seconds(std::floor(-absl::ToDoubleSeconds(before) +
                                                   u * absl::ToDoubleSeconds(before + after)));
      out.events.push_back(IntakeEvent{out.patient.patient_id, due.slot_id, due.nominal + offset,
                                       IntakeKind::taken});
    }

    const auto outcome = closed_outcome(out.patient.patient_id, day, scheduled, taken, 0, scheduled - taken);
    out.live_ledger = apply_day(out.live_ledger, outcome).ledger;
    uplifted = uplifted || out.live_ledger.challenges_completed >= kUpliftChallengeThreshold;

    trailing.emplace_back(scheduled, scheduled - taken);
    trailing_scheduled += scheduled;
    trailing_missed += scheduled - taken;
    if (static_cast<int>(trailing.size()) > kTrailingMissDays) {
      trailing_scheduled -= trailing.front().first;
      trailing_missed -= trailing.front().second;
      trailing.pop_front();
    }

    if ((i + 1) % config.labs.draw_interval_days == 0) {
      const double miss_rate = trailing_scheduled == 0 ? 0.0 : static_cast<double>(trailing_missed) / trailing_scheduled;
      const double sd = config.labs.sd_adherent * (1.0 + config.labs.sd_inflation_per_missrate * miss_rate);
      double level = 0.0;
      do {
        level = config.labs.true_mean_level + sd * standard_normal(rng);
      } while (level < kMinLevel);
      out.labs.observations.push_back(
          LabResult{out.patient.patient_id, day, Analyte::tacrolimus, level});
    }
  }
  return out;
}

DateRange SimulatedCohort::period() const {
  return {config.start_date, config.start_date + (config.days - 1)};
}

std::vector<PatientRecord> SimulatedCohort::records() const {
  std::vector<PatientRecord> out;
  out.reserve(members.size());
  for (const auto& m : members) {
    out.push_back(PatientRecord{
        .patient_id = m.sim.patient.patient_id,
        .arm = m.sim.patient.arm,
        .labs = m.sim.labs,
        .summary = m.summary,
        .ledger = m.ledger,
        .outcomes = m.outcomes,
    });
  }
  return out;
}

SimulatedCohort simulate_cohort(const CohortConfig& config) {
  validate_config(config);
  SimulatedCohort cohort{.config = config};
  cohort.members.resize(config.total_patients());
  const Zone zone = Zone::load(config.timezone);
  const DateRange period = cohort.period();
  detail::parallel_for(cohort.members.size(), [&](std::size_t i) {
    auto& m = cohort.members[i];
    m.sim = simulate_patient(config, static_cast<int>(i));
    ScheduleHistory history;
    history.add(m.sim.schedule);
    m.outcomes = final_outcomes(history, m.sim.events, period.from, period.to, zone);
    m.ledger.patient_id = m.sim.patient.patient_id;
    for (const auto& o : m.outcomes) {
      auto step = apply_day(m.ledger, o);
      m.ledger = std::move(step.ledger);
      m.awards.insert(m.awards.end(), step.awards.begin(), step.awards.end());
    }
    m.summary = summarize(m.outcomes, period);
  });
  return cohort;
}

std::vector<stats::LogisticRow> simulate_logistic_rows(int n, double intercept, double slope,
                                                       double covariate_mean,
                                                       double covariate_sd, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> covariate(covariate_mean, covariate_sd);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<stats::LogisticRow> rows;
  rows.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double x = covariate(rng);
    const double p = 1.0 / (1.0 + std::exp(-(intercept + slope * x)));
    rows.push_back({x, unit(rng) < p ? 1 : 0});
  }
  return rows;
}

void to_json(nlohmann::json& j, const BehaviorParams& b) {
  j = {{"base_daily_adherence_prob", b.base_daily_adherence_prob},
       {"gamification_uplift", b.gamification_uplift},
       {"post_surgery_decay", b.post_surgery_decay},
       {"seed", b.seed}};
}

void from_json(const nlohmann::json& j, BehaviorParams& b) {
  const BehaviorParams d;
  b.base_daily_adherence_prob = j.value("base_daily_adherence_prob", d.base_daily_adherence_prob);
  b.gamification_uplift = j.value("gamification_uplift", d.gamification_uplift);
  b.post_surgery_decay = j.value("post_surgery_decay", d.post_surgery_decay);
  b.seed = j.value("seed", d.seed);
}

void to_json(nlohmann::json& j, const LabModelParams& l) {
  j = {{"true_mean_level", l.true_mean_level},
       {"sd_adherent", l.sd_adherent},
       {"sd_inflation_per_missrate", l.sd_inflation_per_missrate},
       {"draw_interval_days", l.draw_interval_days}};
}

void from_json(const nlohmann::json& j, LabModelParams& l) {
  const LabModelParams d;
  l.true_mean_level = j.value("true_mean_level", d.true_mean_level);
  l.sd_adherent = j.value("sd_adherent", d.sd_adherent);
  l.sd_inflation_per_missrate = j.value("sd_inflation_per_missrate", d.sd_inflation_per_missrate);
  l.draw_interval_days = j.value("draw_interval_days", d.draw_interval_days);
}

void to_json(nlohmann::json& j, const ArmConfig& a) {
  j = {{"label", a.label}, {"patients", a.patients}, {"behavior", a.behavior}};
}

void from_json(const nlohmann::json& j, ArmConfig& a) {
  a.label = j.at("label").get<std::string>();
  a.patients = j.at("patients").get<int>();
  a.behavior = j.value("behavior", BehaviorParams{});
}

void to_json(nlohmann::json& j, const CohortConfig& c) {
  j = {{"arms", c.arms},
       {"days", c.days},
       {"start_date", format_date(c.start_date)},
       {"timezone", c.timezone},
       {"schedule_template", c.schedule_template},
       {"labs", c.labs},
       {"master_seed", c.master_seed}};
}

void from_json(const nlohmann::json& j, CohortConfig& c) {
  try {
    c.arms = j.at("arms").get<std::vector<ArmConfig>>();
    c.days = j.value("days", 180);
    c.start_date = parse_date(j.value("start_date", std::string("2024-01-01")));
    c.timezone = j.value("timezone", std::string("UTC"));
    if (j.contains("schedule_template")) {
      auto tmpl = j.at("schedule_template");
      if (!tmpl.contains("patient_id")) tmpl["patient_id"] = "template";
      if (!tmpl.contains("effective_from")) tmpl["effective_from"] = format_date(c.start_date);
      c.schedule_template = tmpl.get<DoseSchedule>();
    } else {
      c.schedule_template = default_schedule_template();
    }
    c.labs = j.value("labs", LabModelParams{});
    c.master_seed = j.value("master_seed", std::uint64_t{1});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, std::string("cohort config: ") + e.what());
  }
}

CohortConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot read config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  CohortConfig config;
  try {
    config = parse_json(buffer.str()).get<CohortConfig>();
  } catch (const Error& e) {
    throw Error(ErrorCode::config, e.what());
  }
  validate_config(config);
  return config;
}

}  // namespace adhere::sim
