#pragma once

#include "adhere/analytics.hpp"
#include "adhere/domain.hpp"
#include "adhere/game.hpp"
#include "adhere/stats.hpp"
#include "adhere/streaks.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace adhere::sim {

/// Challenges after which the gamification uplift switches on.
inline constexpr int kUpliftChallengeThreshold = 3;
/// Lower truncation point for simulated tacrolimus levels, ng/mL.
inline constexpr double kMinLevel = 0.1;
/// Trailing window for the miss rate that inflates lab variability.
inline constexpr int kTrailingMissDays = 30;

struct BehaviorParams {
  double base_daily_adherence_prob = 0.9;  // per scheduled dose
  double gamification_uplift = 0.0;        // fractional cut in miss probability
  double post_surgery_decay = 0.0;         // added to the probability per elapsed day
  std::uint64_t seed = 0;
};

struct LabModelParams {
  double true_mean_level = 8.0;           // ng/mL
  double sd_adherent = 1.6;               // ng/mL
  double sd_inflation_per_missrate = 5.0;
  int draw_interval_days = 7;
};

struct ArmConfig {
  std::string label;
  int patients = 0;
  BehaviorParams behavior;
};

struct CohortConfig {
  std::vector<ArmConfig> arms;
  int days = 180;
  Date start_date{2024, 1, 1};
  std::string timezone = "UTC";
  // patient_id and effective_from are filled in per patient.
  DoseSchedule schedule_template;
  LabModelParams labs;
  std::uint64_t master_seed = 1;

  int total_patients() const;
};

/// Two-slot tacrolimus schedule at 08:00 and 20:00 with default windows.
DoseSchedule default_schedule_template();

/// Throws Error(config) when counts are not positive, probabilities are out
/// of range or the schedule template is invalid.
void validate_config(const CohortConfig& config);

/// Seed for one patient, derived from the master seed, the arm seed and the
/// patient index by splitmix64 mixing.
std::uint64_t patient_seed(std::uint64_t master_seed, std::uint64_t arm_seed, int patient_index);

struct SimulatedPatient {
  Patient patient;
  DoseSchedule schedule;
  std::vector<IntakeEvent> events;
  LabSeries labs;
  // Ledger tracked while generating; drives the uplift switch.
  GameLedger live_ledger;
};

/// Generates one patient; index runs over all arms in config order.
/// Fully determined by (config, index).
SimulatedPatient simulate_patient(const CohortConfig& config, int patient_index);

struct CohortMember {
  SimulatedPatient sim;
  std::vector<DayOutcome> outcomes;  // replayed from the event log
  GameLedger ledger;                 // replayed from the outcomes
  std::vector<Award> awards;
  AdherenceSummary summary;
};

struct SimulatedCohort {
  CohortConfig config;
  std::vector<CohortMember> members;  // patient-index order

  DateRange period() const;
  std::vector<PatientRecord> records() const;
};

/// Simulates every patient (in parallel) and replays each event log through
/// day outcomes and the game engine.
SimulatedCohort simulate_cohort(const CohortConfig& config);

/// Synthetic (covariate, outcome) rows with covariate ~ Normal(mean, sd) and
/// P(outcome = 1) = logistic(intercept + slope * covariate).
std::vector<stats::LogisticRow> simulate_logistic_rows(int n, double intercept, double slope,
                                                       double covariate_mean,
                                                       double covariate_sd, std::uint64_t seed);

void to_json(nlohmann::json& j, const BehaviorParams& b);
void from_json(const nlohmann::json& j, BehaviorParams& b);
void to_json(nlohmann::json& j, const LabModelParams& l);
void from_json(const nlohmann::json& j, LabModelParams& l);
void to_json(nlohmann::json& j, const ArmConfig& a);
void from_json(const nlohmann::json& j, ArmConfig& a);
void to_json(nlohmann::json& j, const CohortConfig& c);
void from_json(const nlohmann::json& j, CohortConfig& c);

CohortConfig load_config(const std::string& path);

}  // namespace adhere::sim
