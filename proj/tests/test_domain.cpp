#include "adhere/domain.hpp"
#include "adhere/error.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace adhere;
using adhere::testing::tacrolimus_bid;

namespace {

bool mentions(const std::vector<std::string>& violations, std::string_view needle) {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const std::string& v) { return v.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("validate_schedule") {
  SUBCASE("well-formed two-slot schedule is ok") {
    CHECK(validate_schedule(tacrolimus_bid()).empty());
  }
  SUBCASE("zero medications") {
    auto s = tacrolimus_bid();
    s.medications.clear();
    CHECK(mentions(validate_schedule(s), "medications empty"));
  }
  SUBCASE("duplicate slot id across medications") {
    auto s = tacrolimus_bid();
    s.medications.push_back(MedicationLine{
        .med_name = "mycophenolate",
        .slots = {DoseSlot{.slot_id = "tac-am", .nominal_time = TimeOfDay::from_hm(9, 0)}}});
    CHECK(mentions(validate_schedule(s), "slot_id duplicate"));
  }
  SUBCASE("field-level violations name the field") {
    auto s = tacrolimus_bid();
    s.medications[0].slots[0].window_before = -5;
    s.medications[0].slots[1].nominal_time = TimeOfDay::from_hm(7, 0);
    const auto v = validate_schedule(s);
    CHECK(mentions(v, "window_before negative"));
    CHECK(mentions(v, "nominal_time not strictly increasing"));
  }
  SUBCASE("medication without slots and invalid time") {
    auto s = tacrolimus_bid();
    s.medications[0].slots[1].nominal_time = TimeOfDay{24 * 60};
    s.medications.push_back(MedicationLine{.med_name = "prednisone"});
    const auto v = validate_schedule(s);
    CHECK(mentions(v, "nominal_time invalid"));
    CHECK(mentions(v, "slots empty"));
  }
}

TEST_CASE("schedule history picks the version in force") {
  ScheduleHistory h;
  h.add(tacrolimus_bid("p1", Date(2024, 1, 1)));
  auto later = tacrolimus_bid("p1", Date(2024, 3, 1));
  later.medications[0].slots[1].nominal_time = TimeOfDay::from_hm(21, 0);
  h.add(later);

  CHECK(h.in_force(Date(2023, 12, 31)) == nullptr);
  CHECK(h.in_force(Date(2024, 2, 29))->effective_from == Date(2024, 1, 1));
  CHECK(h.in_force(Date(2024, 3, 1))->effective_from == Date(2024, 3, 1));
  CHECK(h.first_effective() == Date(2024, 1, 1));

  auto bad = tacrolimus_bid();
  bad.medications.clear();
  CHECK_THROWS_AS(h.add(bad), Error);
  CHECK(h.versions().size() == 2);
}

TEST_CASE("validate_patient") {
  Patient p{.patient_id = "k-17", .transplant_date = Date(2024, 1, 10), .timezone = "Europe/Berlin"};
  CHECK_NOTHROW(validate_patient(p, Date(2024, 1, 10)));
  CHECK_THROWS_AS(validate_patient(p, Date(2024, 1, 9)), Error);
  p.patient_id.clear();
  CHECK_THROWS_AS(validate_patient(p, Date(2024, 2, 1)), Error);
  p.patient_id = "k-17";
  p.timezone = "Nowhere/Special";
  try {
    validate_patient(p, Date(2024, 2, 1));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
  }
}

TEST_CASE("enum text forms") {
  for (auto organ : {Organ::liver, Organ::kidney, Organ::heart, Organ::lung, Organ::intestine,
                     Organ::pancreas}) {
    CHECK(parse_organ(to_string(organ)) == organ);
  }
  CHECK_THROWS_AS(parse_organ("spleen"), Error);
  CHECK(parse_intake_kind("skipped") == IntakeKind::skipped);
  CHECK_THROWS_AS(parse_intake_kind("maybe"), Error);
  CHECK(parse_analyte("tacrolimus") == Analyte::tacrolimus);
  CHECK_THROWS_AS(parse_analyte("cyclosporine"), Error);
}
