#include "adhere/analytics.hpp"
#include "adhere/json_io.hpp"
#include "adhere/simulator.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace adhere;
using adhere::testing::outcomes_from_bits;

namespace {

const DateRange kWindow{Date(2024, 1, 1), Date(2024, 12, 31)};

LabSeries labs_of(const std::string& id, std::vector<double> values) {
  LabSeries s{id, {}};
  for (std::size_t i = 0; i < values.size(); ++i) {
    s.observations.push_back({id, Date(2024, 1, 7) + static_cast<int>(7 * i), Analyte::tacrolimus, values[i]});
  }
  return s;
}

PatientRecord record(const std::string& id, const std::string& arm, std::vector<double> labs,
                     const std::string& bits) {
  PatientRecord r{.patient_id = id, .arm = arm, .labs = labs_of(id, std::move(labs))};
  r.outcomes = outcomes_from_bits(bits);
  for (const auto& o : r.outcomes) r.ledger = apply_day(r.ledger, o).ledger;
  r.summary = summarize(r.outcomes, kWindow);
  return r;
}

}  // namespace

TEST_CASE("identical arms give a null report") {
  const std::vector<std::vector<double>> labs{
      {8, 9, 10}, {7, 9, 11}, {8, 8, 12}, {6, 9, 12}, {9, 10, 11}};
  const std::vector<std::string> traces{"1111111011", "1111111111111111111111", "1101", "11111110",
                                        "111111111111111111111110111"};
  std::vector<PatientRecord> cohort;
  for (int i = 0; i < 5; ++i) {
    cohort.push_back(record("a" + std::to_string(i), "app", labs[i], traces[i]));
    cohort.push_back(record("c" + std::to_string(i), "control", labs[i], traces[i]));
  }
  const auto r = cohort_report(cohort, ReportOptions{.window = kWindow});
  REQUIRE(r.comparison.available());
  CHECK(r.comparison.value->t == doctest::Approx(0.0));
  CHECK(r.comparison.value->p_value == doctest::Approx(1.0));
  REQUIRE(r.logistic.available());
  CHECK(r.logistic.value->odds_ratio == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.arms[0].mean_cv.value == r.arms[1].mean_cv.value);
  CHECK(r.arms[0].missed_dose_rate == r.arms[1].missed_dose_rate);
  CHECK(r.comparison_test == stats::kWelchTestName);
}

TEST_CASE("a one-patient arm is reported as unavailable") {
  std::vector<PatientRecord> cohort{record("a0", "app", {8, 10, 12}, "1111"),
                                    record("c0", "control", {8, 9, 10}, "1111"),
                                    record("c1", "control", {7, 9, 12}, "1011")};
  const auto r = cohort_report(cohort, ReportOptions{.window = kWindow});
  CHECK_FALSE(r.arms[0].mean_cv.available());
  CHECK(r.arms[1].mean_cv.available());
  CHECK_FALSE(r.comparison.available());
  CHECK(r.comparison.unavailable_reason.find("insufficient_data") != std::string::npos);
  CHECK_FALSE(r.spearman.available());
  const auto text = render_text(r);
  CHECK(text.find("n/a") != std::string::npos);
}

TEST_CASE("empty cohort marks every statistic unavailable") {
  const auto r = cohort_report({}, ReportOptions{.window = kWindow});
  CHECK_FALSE(r.comparison.available());
  CHECK_FALSE(r.logistic.available());
  CHECK_FALSE(r.spearman.available());
  CHECK_FALSE(r.pearson.available());
  CHECK_FALSE(r.subgroup_vs_nonusers.available());
  CHECK_FALSE(r.subgroup_vs_other_app_users.available());
  const Json j = r;
  CHECK(j["comparison"]["result"]["available"] == false);
}

TEST_CASE("subgroup rate ratios count days after the third challenge") {
  // a0 reaches 3 challenges on day 21, then misses 1 of the next 10 days
  // (1 of 20 doses). a1 never reaches 3. Controls miss 4 of 40 doses.
  const std::string a0 = std::string(21, '1') + "1111011111";
  std::vector<PatientRecord> cohort{
      record("a0", "app", {8, 10, 12}, a0),
      record("a1", "app", {8, 9, 10}, "1100110011"),
      record("c0", "control", {7, 9, 12}, "0011111111"),
      record("c1", "control", {6, 9, 12}, "1111111100"),
  };
  const auto r = cohort_report(cohort, ReportOptions{.window = kWindow});
  REQUIRE(r.subgroup_vs_nonusers.available());
  const auto& vs_control = *r.subgroup_vs_nonusers.value;
  CHECK(vs_control.numerator_rate == doctest::Approx(1.0 / 20));
  CHECK(vs_control.denominator_rate == doctest::Approx(4.0 / 40));
  CHECK(vs_control.ratio == doctest::Approx(0.5));
  CHECK(vs_control.reduction_percent == doctest::Approx(50.0));
  CHECK(vs_control.numerator_patients == 1);
  CHECK(vs_control.denominator_patients == 2);

  REQUIRE(r.subgroup_vs_other_app_users.available());
  // a1 missed 4 of 10 days: 4 of 20 doses.
  CHECK(r.subgroup_vs_other_app_users.value->denominator_rate == doctest::Approx(0.2));
  CHECK(r.subgroup_vs_other_app_users.value->ratio == doctest::Approx(0.25));

  // Two app users are too few for a rank correlation.
  CHECK(r.correlation_pairs == 2);
  CHECK_FALSE(r.spearman.available());
}

TEST_CASE("report does not depend on record order") {
  auto c = sim::CohortConfig{};
  c.arms = {sim::ArmConfig{"app", 12, {0.9, 0.3, 0.0, 1}},
            sim::ArmConfig{"control", 15, {0.88, 0.0, 0.0, 2}}};
  c.days = 60;
  c.schedule_template = sim::default_schedule_template();
  const auto cohort = sim::simulate_cohort(c);
  const ReportOptions opt{.window = cohort.period()};
  auto records = cohort.records();
  const std::string reference = Json(cohort_report(records, opt)).dump();
  std::mt19937_64 rng(4);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(records.begin(), records.end(), rng);
    CHECK(Json(cohort_report(records, opt)).dump() == reference);
  }
}

TEST_CASE("18 vs 49 cohort config renders every cell") {
  auto config = sim::load_config(ADHERE_SOURCE_DIR "/configs/cohort_18v49.json");
  const auto cohort = sim::simulate_cohort(config);
  const auto r = cohort_report(cohort.records(), ReportOptions{.window = cohort.period()});
  CHECK(r.arms[0].n_patients == 18);
  CHECK(r.arms[1].n_patients == 49);
  CHECK(r.comparison.available());
  CHECK(r.logistic.available());
  CHECK(r.spearman.available());
  CHECK(r.pearson.available());
  CHECK(r.subgroup_vs_nonusers.available());
  CHECK(r.subgroup_vs_other_app_users.available());
  CHECK(render_text(r).find("n/a") == std::string::npos);
}
