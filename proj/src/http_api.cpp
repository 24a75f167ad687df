#include "adhere/http_api.hpp"

#include "adhere/error.hpp"
#include "adhere/json_io.hpp"

#include <httplib.h>

#include <sstream>

namespace adhere {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict:
    case ErrorCode::day_closed: return 409;
    case ErrorCode::validation:
    case ErrorCode::config:
    case ErrorCode::domain: return 400;
    case ErrorCode::insufficient_data:
    case ErrorCode::degenerate_data:
    case ErrorCode::separation:
    case ErrorCode::undefined_correlation:
    case ErrorCode::replay:
    case ErrorCode::idempotency: return 422;
    case ErrorCode::data:
    case ErrorCode::io: return 500;
  }
  return 500;
}

namespace {

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(const ApiOptions& options, Fn fn) {
  return [options, fn](const httplib::Request& req, httplib::Response& res) {
    if (options.token && req.get_header_value("X-Adhere-Token") != *options.token) {
      send_json(res, {{"error", "unauthorized"}}, 401);
      return;
    }
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_json(res, {{"error", to_string(e.code())}, {"message", e.what()}}, http_status(e.code()));
    } catch (const std::exception& e) {
      send_json(res, {{"error", "internal"}, {"message", e.what()}}, 500);
    }
  };
}

Json slot_view_json(const SlotView& v) {
  return {{"slot_id", v.due.slot_id},
          {"med_name", v.due.med_name},
          {"is_immunosuppressant", v.due.is_immunosuppressant},
          {"nominal", format_instant(v.due.nominal)},
          {"window_start", format_instant(v.due.window_start)},
          {"window_end", format_instant(v.due.window_end)},
          {"status", to_string(v.status)}};
}

Json today_json(const TodayView& t) {
  Json slots = Json::array();
  for (const auto& s : t.slots) slots.push_back(slot_view_json(s));
  return {{"patient_id", t.patient_id}, {"day", format_date(t.day)}, {"slots", slots}, {"reminders", t.reminders}};
}

std::optional<DateRange> window_param(const httplib::Request& req) {
  if (!req.has_param("window") || req.get_param_value("window").empty()) return std::nullopt;
  return parse_date_range(req.get_param_value("window"));
}

}  // namespace

void mount_api(httplib::Server& server, AdherenceService& service, const ApiOptions& options) {
  server.Post("/patients", guarded(options, [&service](const auto& req, auto& res) {
    const Json body = parse_json(req.body);
    if (!body.contains("patient") || !body.contains("schedule")) {
      throw Error(ErrorCode::validation, "body needs 'patient' and 'schedule'");
    }
    const auto patient = body.at("patient").template get<Patient>();
    auto schedule = body.at("schedule");
    if (!schedule.contains("patient_id")) schedule["patient_id"] = patient.patient_id;
    std::optional<NotificationPrefs> prefs;
    if (body.contains("notification_prefs")) prefs = body.at("notification_prefs").template get<NotificationPrefs>();
    service.create_patient(patient, schedule.template get<DoseSchedule>(), prefs);
    send_json(res, {{"patient", patient}}, 201);
  }));

  server.Get(R"(/patients/([^/]+)/today)", guarded(options, [&service](const auto& req, auto& res) {
    send_json(res, today_json(service.today(req.matches[1])));
  }));

  server.Post(R"(/patients/([^/]+)/intakes)", guarded(options, [&service](const auto& req, auto& res) {
    const Json body = parse_json(req.body);
    if (!body.contains("slot_id") || !body.contains("ts")) {
      throw Error(ErrorCode::validation, "body needs 'slot_id' and 'ts'");
    }
    const auto ack = service.record_intake(req.matches[1], body.at("slot_id").template get<std::string>(),
                                           body.at("ts").template get<std::string>(),
                                           body.value("kind", std::string("taken")));
    send_json(res,
              {{"ack", true},
               {"appended", ack.appended},
               {"seq", ack.seq},
               {"day", format_date(ack.day)},
               {"awards", ack.awards}},
              ack.appended ? 201 : 200);
  }));

  server.Get(R"(/patients/([^/]+)/game)", guarded(options, [&service](const auto& req, auto& res) {
    send_json(res, game_view(service.game(req.matches[1])));
  }));

  server.Get(R"(/patients/([^/]+)/dashboard)", guarded(options, [&service](const auto& req, auto& res) {
    const auto d = service.dashboard(req.matches[1], window_param(req));
    send_json(res, {{"as_of_seq", d.as_of_seq},
                    {"today", today_json(d.today)},
                    {"game", game_view(d.ledger)},
                    {"summary", d.summary},
                    {"latest_cv", d.latest_cv}});
  }));

  server.Post("/labs/import", guarded(options, [&service](const auto& req, auto& res) {
    std::istringstream csv(req.body);
    const auto result = service.ingest_labs(csv);
    Json rejected = Json::array();
    for (const auto& r : result.rejected) rejected.push_back({{"line", r.line}, {"reason", r.reason}});
    send_json(res, {{"accepted", result.accepted}, {"rejected", rejected}});
  }));

  server.Get("/cohort/report", guarded(options, [&service](const auto& req, auto& res) {
    const auto window = window_param(req);
    if (!window) throw Error(ErrorCode::validation, "window=FROM..TO is required");
    const auto rule = parse_arm_rule(req.has_param("rule") ? req.get_param_value("rule") : "");
    const auto report = service.cohort_report(*window, rule);
    if (req.get_param_value("format") == "text") {
      res.set_content(render_text(report), "text/plain");
    } else {
      send_json(res, report);
    }
  }));

  if (options.static_dir) server.set_mount_point("/", *options.static_dir);
}

}  // namespace adhere
