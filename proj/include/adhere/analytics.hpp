#pragma once

#include "adhere/calendar.hpp"
#include "adhere/domain.hpp"
#include "adhere/game.hpp"
#include "adhere/stats.hpp"
#include "adhere/streaks.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adhere {

struct LabSeries {
  std::string patient_id;
  std::vector<LabResult> observations;  // non-decreasing draw_date
};

struct CvResult {
  int n = 0;
  double mean = 0.0;  // ng/mL
  double sd = 0.0;    // ng/mL, n - 1 denominator
  double cv_percent = 0.0;
};

/// CV = sd / mean * 100 over the observations drawn inside `window`.
/// Throws Error(insufficient_data) with fewer than two in-window draws.
CvResult coefficient_of_variation(const LabSeries& series, const DateRange& window);
CvResult coefficient_of_variation(std::span<const double> levels);

/// Either a value or the reason it could not be computed.
template <typename T>
struct Cell {
  std::optional<T> value;
  std::string unavailable_reason;

  bool available() const { return value.has_value(); }
  static Cell unavailable(std::string why) { return Cell{std::nullopt, std::move(why)}; }
};

struct PatientRecord {
  std::string patient_id;
  std::string arm;
  LabSeries labs;
  AdherenceSummary summary;
  GameLedger ledger;
  std::vector<DayOutcome> outcomes;  // closed days, date-ordered
};

struct ReportOptions {
  DateRange window;
  std::string app_arm = "app";
  std::string control_arm = "control";
  int subgroup_min_challenges = 3;
};

struct ArmSummary {
  std::string label;
  int n_patients = 0;
  int n_with_cv = 0;
  Cell<double> mean_cv;
  Cell<double> sd_cv;
  double missed_dose_rate = 0.0;  // pooled over the arm's closed days in window
};

struct RateRatio {
  double numerator_rate = 0.0;
  double denominator_rate = 0.0;
  double ratio = 0.0;
  double reduction_percent = 0.0;  // (1 - ratio) * 100
  int numerator_patients = 0;
  int denominator_patients = 0;
};

struct CohortReport {
  ReportOptions options;
  std::vector<ArmSummary> arms;  // app arm first, then control
  std::string comparison_test = stats::kWelchTestName;
  Cell<stats::WelchResult> comparison;  // app minus control
  std::string logistic_model = stats::kLogisticModelName;
  int logistic_rows = 0;
  Cell<stats::LogisticFit> logistic;  // P(app arm) on CV
  std::string correlation_population;
  int correlation_pairs = 0;
  Cell<double> spearman;  // missed-dose rate vs game level
  Cell<double> pearson;
  // Missed-dose rate of app users with >= N challenges, counted on days after
  // the Nth challenge, relative to each comparator.
  Cell<RateRatio> subgroup_vs_nonusers;
  Cell<RateRatio> subgroup_vs_other_app_users;
};

/// Statistics that cannot be computed are marked unavailable instead of
/// failing the report. Records are processed in patient-id order so the
/// result does not depend on input order.
CohortReport cohort_report(std::vector<PatientRecord> cohort, const ReportOptions& options);

/// Plain-text table of the report.
std::string render_text(const CohortReport& report);

}  // namespace adhere
