#include "adhere/json_io.hpp"

#include "adhere/error.hpp"

namespace adhere {

namespace {

const Json& field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    throw Error(ErrorCode::validation, std::string("missing field '") + name + "'");
  }
  return j.at(name);
}

template <typename T>
T get(const Json& j, const char* name) {
  try {
    return field(j, name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::validation, std::string("field '") + name + "': " + e.what());
  }
}

template <typename T>
T get_or(const Json& j, const char* name, T fallback) {
  return j.is_object() && j.contains(name) ? get<T>(j, name) : fallback;
}

Date get_date(const Json& j, const char* name) { return parse_date(get<std::string>(j, name)); }

}  // namespace

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::validation, std::string("malformed JSON: ") + e.what());
  }
}

void to_json(Json& j, const Patient& p) {
  j = Json{{"patient_id", p.patient_id},
           {"transplant_date", format_date(p.transplant_date)},
           {"organ", to_string(p.organ)},
           {"timezone", p.timezone}};
  if (!p.arm.empty()) j["arm"] = p.arm;
}

void from_json(const Json& j, Patient& p) {
  p.patient_id = get<std::string>(j, "patient_id");
  p.transplant_date = get_date(j, "transplant_date");
  p.organ = parse_organ(get<std::string>(j, "organ"));
  p.timezone = get_or<std::string>(j, "timezone", "UTC");
  p.arm = get_or<std::string>(j, "arm", "");
}

void to_json(Json& j, const DoseSlot& s) {
  j = Json{{"slot_id", s.slot_id},
           {"nominal_time", format_time_of_day(s.nominal_time)},
           {"window_before", s.window_before},
           {"window_after", s.window_after}};
}

void from_json(const Json& j, DoseSlot& s) {
  s.slot_id = get<std::string>(j, "slot_id");
  s.nominal_time = parse_time_of_day(get<std::string>(j, "nominal_time"));
  s.window_before = get_or<int>(j, "window_before", kDefaultWindowMinutes);
  s.window_after = get_or<int>(j, "window_after", kDefaultWindowMinutes);
}

void to_json(Json& j, const MedicationLine& m) {
  j = Json{{"med_name", m.med_name}, {"is_immunosuppressant", m.is_immunosuppressant}, {"slots", m.slots}};
}

void from_json(const Json& j, MedicationLine& m) {
  m.med_name = get<std::string>(j, "med_name");
  m.is_immunosuppressant = get_or<bool>(j, "is_immunosuppressant", false);
  m.slots = get<std::vector<DoseSlot>>(j, "slots");
}

void to_json(Json& j, const DoseSchedule& s) {
  j = Json{{"patient_id", s.patient_id},
           {"effective_from", format_date(s.effective_from)},
           {"medications", s.medications}};
}

void from_json(const Json& j, DoseSchedule& s) {
  s.patient_id = get<std::string>(j, "patient_id");
  s.effective_from = get_date(j, "effective_from");
  s.medications = get<std::vector<MedicationLine>>(j, "medications");
}

void to_json(Json& j, const NotificationPrefs& p) {
  Json overrides = Json::object();
  for (const auto& [slot, time] : p.overrides) overrides[slot] = format_time_of_day(time);
  j = Json{{"patient_id", p.patient_id},
           {"overrides", overrides},
           {"gentle_repeat_interval", p.gentle_repeat_interval},
           {"max_repeats_per_slot", p.max_repeats_per_slot}};
}

void from_json(const Json& j, NotificationPrefs& p) {
  p.patient_id = get_or<std::string>(j, "patient_id", "");
  p.overrides.clear();
  if (j.contains("overrides")) {
    for (const auto& [slot, time] : field(j, "overrides").items()) {
      p.overrides[slot] = parse_time_of_day(time.get<std::string>());
    }
  }
  p.gentle_repeat_interval = get_or<int>(j, "gentle_repeat_interval", kDefaultRepeatIntervalMinutes);
  p.max_repeats_per_slot = get_or<int>(j, "max_repeats_per_slot", kDefaultMaxRepeats);
}

void to_json(Json& j, const IntakeEvent& e) {
  j = Json{{"patient_id", e.patient_id},
           {"slot_id", e.slot_id},
           {"ts", format_instant(e.timestamp)},
           {"kind", to_string(e.kind)}};
}

void from_json(const Json& j, IntakeEvent& e) {
  e.patient_id = get<std::string>(j, "patient_id");
  e.slot_id = get<std::string>(j, "slot_id");
  e.timestamp = parse_instant(get<std::string>(j, "ts"));
  e.kind = parse_intake_kind(get<std::string>(j, "kind"));
}

void to_json(Json& j, const LabResult& l) {
  j = Json{{"patient_id", l.patient_id},
           {"draw_date", format_date(l.draw_date)},
           {"analyte", to_string(l.analyte)},
           {"value_ng_ml", l.value_ng_ml}};
}

void from_json(const Json& j, LabResult& l) {
  l.patient_id = get<std::string>(j, "patient_id");
  l.draw_date = get_date(j, "draw_date");
  l.analyte = parse_analyte(get<std::string>(j, "analyte"));
  l.value_ng_ml = get<double>(j, "value_ng_ml");
}

void to_json(Json& j, const DayOutcome& o) {
  j = Json{{"patient_id", o.patient_id}, {"day", format_date(o.day)}, {"scheduled", o.scheduled},
           {"taken", o.taken},           {"skipped", o.skipped},       {"missed", o.missed},
           {"pending", o.pending},       {"closed", o.closed},         {"adherent", o.adherent}};
  if (!o.warnings.empty()) j["warnings"] = o.warnings;
}

void from_json(const Json& j, DayOutcome& o) {
  o.patient_id = get<std::string>(j, "patient_id");
  o.day = get_date(j, "day");
  o.scheduled = get<int>(j, "scheduled");
  o.taken = get<int>(j, "taken");
  o.skipped = get<int>(j, "skipped");
  o.missed = get<int>(j, "missed");
  o.pending = get_or<int>(j, "pending", 0);
  o.closed = get<bool>(j, "closed");
  o.adherent = get<bool>(j, "adherent");
  o.warnings = get_or<std::vector<std::string>>(j, "warnings", {});
}

void to_json(Json& j, const Reward& r) {
  j = Json{{"milestone", r.milestone}, {"badge_id", r.badge_id}, {"earned_on", format_date(r.earned_on)}};
}

void from_json(const Json& j, Reward& r) {
  r.milestone = get<int>(j, "milestone");
  r.badge_id = get<std::string>(j, "badge_id");
  r.earned_on = get_date(j, "earned_on");
}

void to_json(Json& j, const Award& a) {
  j = Json{{"kind", to_string(a.kind)}, {"day", format_date(a.day)}, {"detail", a.detail}};
}

void from_json(const Json& j, Award& a) {
  a.kind = parse_award_kind(get<std::string>(j, "kind"));
  a.day = get_date(j, "day");
  a.detail = get<int>(j, "detail");
}

void to_json(Json& j, const GameLedger& g) {
  j = Json{{"patient_id", g.patient_id},
           {"total_points", g.total_points},
           {"challenges_completed", g.challenges_completed},
           {"current_streak_days", g.current_streak_days},
           {"milestones_reached", g.milestones_reached},
           {"rewards", g.rewards},
           {"last_applied_day", g.last_applied_day ? Json(format_date(*g.last_applied_day)) : Json()}};
}

void from_json(const Json& j, GameLedger& g) {
  g.patient_id = get<std::string>(j, "patient_id");
  g.total_points = get<int>(j, "total_points");
  g.challenges_completed = get<int>(j, "challenges_completed");
  g.current_streak_days = get<int>(j, "current_streak_days");
  g.milestones_reached = get<std::vector<int>>(j, "milestones_reached");
  g.rewards = get<std::vector<Reward>>(j, "rewards");
  const auto& last = field(j, "last_applied_day");
  g.last_applied_day.reset();
  if (!last.is_null()) g.last_applied_day = parse_date(last.get<std::string>());
}

void to_json(Json& j, const AdherenceSummary& s) {
  j = Json{{"period_start", format_date(s.period.from)},
           {"period_end", format_date(s.period.to)},
           {"total_scheduled", s.total_scheduled},
           {"total_missed", s.total_missed},
           {"missed_dose_rate", s.missed_dose_rate},
           {"current_streak_days", s.current_streak_days},
           {"longest_streak_days", s.longest_streak_days}};
}

void from_json(const Json& j, AdherenceSummary& s) {
  s.period = {get_date(j, "period_start"), get_date(j, "period_end")};
  s.total_scheduled = get<int>(j, "total_scheduled");
  s.total_missed = get<int>(j, "total_missed");
  s.missed_dose_rate = get<double>(j, "missed_dose_rate");
  s.current_streak_days = get<int>(j, "current_streak_days");
  s.longest_streak_days = get<int>(j, "longest_streak_days");
}

void to_json(Json& j, const ReminderPlan& p) {
  Json entries = Json::array();
  for (const auto& e : p.entries) {
    Json fires = Json::array();
    for (const auto& t : e.fire_instants) fires.push_back(format_instant(t));
    entries.push_back({{"slot_id", e.slot_id}, {"fire_instants", fires}, {"tone", ReminderEntry::tone}});
  }
  j = Json{{"day", format_date(p.day)}, {"entries", entries}};
}

void to_json(Json& j, const CvResult& c) {
  j = Json{{"n", c.n}, {"mean", c.mean}, {"sd", c.sd}, {"cv_percent", c.cv_percent}};
}

void stats::to_json(Json& j, const WelchResult& w) {
  j = Json{{"n_a", w.a.n},     {"mean_a", w.a.mean}, {"sd_a", w.a.sd}, {"n_b", w.b.n},
           {"mean_b", w.b.mean}, {"sd_b", w.b.sd},   {"t", w.t},       {"df", w.df},
           {"p_value", w.p_value}};
}

void stats::to_json(Json& j, const LogisticFit& f) {
  j = Json{{"intercept", f.intercept},   {"slope", f.slope},
           {"slope_se", f.slope_se},     {"odds_ratio", f.odds_ratio},
           {"ci95", {f.ci95_low, f.ci95_high}}, {"converged", f.converged},
           {"iterations", f.iterations}, {"score_max_norm", f.score_max_norm}};
}

void to_json(Json& j, const RateRatio& r) {
  j = Json{{"numerator_rate", r.numerator_rate},
           {"denominator_rate", r.denominator_rate},
           {"ratio", r.ratio},
           {"reduction_percent", r.reduction_percent},
           {"numerator_patients", r.numerator_patients},
           {"denominator_patients", r.denominator_patients}};
}

void to_json(Json& j, const ArmSummary& a) {
  j = Json{{"label", a.label},         {"n_patients", a.n_patients}, {"n_with_cv", a.n_with_cv},
           {"mean_cv", a.mean_cv},     {"sd_cv", a.sd_cv},           {"missed_dose_rate", a.missed_dose_rate}};
}

void to_json(Json& j, const CohortReport& r) {
  j = Json{
      {"window", format_date_range(r.options.window)},
      {"app_arm", r.options.app_arm},
      {"control_arm", r.options.control_arm},
      {"arms", r.arms},
      {"comparison", {{"test", r.comparison_test}, {"result", r.comparison}}},
      {"logistic", {{"model", r.logistic_model}, {"rows", r.logistic_rows}, {"result", r.logistic}}},
      {"correlation",
       {{"population", r.correlation_population},
        {"pairs", r.correlation_pairs},
        {"spearman", r.spearman},
        {"pearson", r.pearson}}},
      {"missed_rate",
       {{"subgroup_min_challenges", r.options.subgroup_min_challenges},
        {"subgroup_vs_nonusers", r.subgroup_vs_nonusers},
        {"subgroup_vs_other_app_users", r.subgroup_vs_other_app_users}}},
  };
}

Json game_view(const GameLedger& ledger) {
  Json j = ledger;
  j["level"] = level(ledger);
  Json gallery = Json::array();
  for (int m : kMilestones) {
    Json badge{{"milestone", m}, {"badge_id", badge_id_for(m)}, {"earned", false}};
    for (const auto& r : ledger.rewards) {
      if (r.milestone == m) {
        badge["earned"] = true;
        badge["earned_on"] = format_date(r.earned_on);
      }
    }
    gallery.push_back(std::move(badge));
  }
  j["badges"] = std::move(gallery);
  return j;
}

}  // namespace adhere
