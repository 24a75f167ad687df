#pragma once

#include "adhere/analytics.hpp"
#include "adhere/domain.hpp"
#include "adhere/game.hpp"
#include "adhere/scheduler.hpp"
#include "adhere/streaks.hpp"

#include <json.hpp>

namespace adhere {

using Json = nlohmann::json;

// Wire formats: dates ISO-8601, times of day HH:MM, instants RFC3339 (UTC, Z).
// from_json throws Error(validation) for missing or malformed fields.

void to_json(Json& j, const Patient& p);
void from_json(const Json& j, Patient& p);
void to_json(Json& j, const DoseSlot& s);
void from_json(const Json& j, DoseSlot& s);
void to_json(Json& j, const MedicationLine& m);
void from_json(const Json& j, MedicationLine& m);
void to_json(Json& j, const DoseSchedule& s);
void from_json(const Json& j, DoseSchedule& s);
void to_json(Json& j, const NotificationPrefs& p);
void from_json(const Json& j, NotificationPrefs& p);
void to_json(Json& j, const IntakeEvent& e);
void from_json(const Json& j, IntakeEvent& e);
void to_json(Json& j, const LabResult& l);
void from_json(const Json& j, LabResult& l);
void to_json(Json& j, const DayOutcome& o);
void from_json(const Json& j, DayOutcome& o);
void to_json(Json& j, const Reward& r);
void from_json(const Json& j, Reward& r);
void to_json(Json& j, const Award& a);
void from_json(const Json& j, Award& a);
void to_json(Json& j, const GameLedger& g);
void from_json(const Json& j, GameLedger& g);
void to_json(Json& j, const AdherenceSummary& s);
void from_json(const Json& j, AdherenceSummary& s);
void to_json(Json& j, const ReminderPlan& p);
void to_json(Json& j, const CvResult& c);
void to_json(Json& j, const RateRatio& r);
void to_json(Json& j, const ArmSummary& a);
void to_json(Json& j, const CohortReport& r);

/// GameLedger view with the derived level and the full badge gallery.
Json game_view(const GameLedger& ledger);

namespace stats {
void to_json(Json& j, const WelchResult& w);
void to_json(Json& j, const LogisticFit& f);
}  // namespace stats

template <typename T>
void to_json(Json& j, const Cell<T>& cell) {
  if (cell.available()) {
    j = Json{{"available", true}, {"value", *cell.value}};
  } else {
    j = Json{{"available", false}, {"reason", cell.unavailable_reason}};
  }
}

/// Parses text as JSON, mapping parse errors to Error(validation).
Json parse_json(std::string_view text);

}  // namespace adhere
