#include "adhere/http_api.hpp"
#include "adhere/json_io.hpp"
#include "support.hpp"

#include <doctest.h>
#include <httplib.h>

#include <thread>

using namespace adhere;

namespace {

const char* kPatientBody = R"({
  "patient": {"patient_id": "k1", "transplant_date": "2024-01-10", "organ": "kidney",
              "timezone": "America/Chicago", "arm": "app"},
  "schedule": {"effective_from": "2024-03-01", "medications": [
    {"med_name": "tacrolimus", "is_immunosuppressant": true,
     "slots": [{"slot_id": "tac-am", "nominal_time": "08:00"},
               {"slot_id": "tac-pm", "nominal_time": "20:00"}]}]},
  "notification_prefs": {"overrides": {"tac-am": "07:30"}, "max_repeats_per_slot": 1}
})";

class LiveServer {
 public:
  explicit LiveServer(ApiOptions options = {})
      : clock_(std::make_shared<ManualClock>(parse_instant("2024-03-01T14:00:00Z"))),
        service_(dir_.path(), clock_) {
    mount_api(server_, service_, options);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LiveServer() {
    server_.stop();
    thread_.join();
  }

  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }
  ManualClock& clock() { return *clock_; }

 private:
  adhere::testing::TempDir dir_{"http"};
  std::shared_ptr<ManualClock> clock_;
  AdherenceService service_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

Json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return Json::parse(r->body);
}

}  // namespace

TEST_CASE("patient lifecycle over HTTP") {
  LiveServer live;
  auto cli = live.client();

  auto created = cli.Post("/patients", kPatientBody, "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  CHECK(cli.Post("/patients", kPatientBody, "application/json")->status == 409);

  auto today = body_of(cli.Get("/patients/k1/today"));
  CHECK(today["day"] == "2024-03-01");
  REQUIRE(today["slots"].size() == 2);
  CHECK(today["slots"][0]["status"] == "pending");
  // 07:30 CST override with one repeat.
  CHECK(today["reminders"]["entries"][0]["fire_instants"] ==
        Json::array({"2024-03-01T13:30:00Z", "2024-03-01T14:30:00Z"}));

  const std::string intake = R"({"slot_id": "tac-am", "ts": "2024-03-01T13:55:00Z", "kind": "taken"})";
  auto first = cli.Post("/patients/k1/intakes", intake, "application/json");
  REQUIRE(first);
  CHECK(first->status == 201);
  auto again = cli.Post("/patients/k1/intakes", intake, "application/json");
  CHECK(again->status == 200);
  CHECK(body_of(again)["appended"] == false);

  today = body_of(cli.Get("/patients/k1/today"));
  CHECK(today["slots"][0]["status"] == "taken_on_time");
  CHECK(today["reminders"]["entries"].size() == 1);

  const auto game = body_of(cli.Get("/patients/k1/game"));
  CHECK(game["total_points"] == 0);
  CHECK(game["level"] == 0);
  CHECK(game["badges"].size() == 5);

  const auto dash = body_of(cli.Get("/patients/k1/dashboard?window=2024-03-01..2024-03-31"));
  CHECK(dash["latest_cv"]["available"] == false);
  CHECK(dash["as_of_seq"] == 2);
}

TEST_CASE("error statuses over HTTP") {
  LiveServer live;
  auto cli = live.client();
  cli.Post("/patients", kPatientBody, "application/json");

  CHECK(cli.Get("/patients/nobody/today")->status == 404);
  auto bad_ts = cli.Post("/patients/k1/intakes", R"({"slot_id": "tac-am", "ts": "soon"})", "application/json");
  CHECK(bad_ts->status == 400);
  CHECK(body_of(bad_ts)["error"] == "validation");
  CHECK(cli.Post("/patients/k1/intakes", "{not json", "application/json")->status == 400);
  CHECK(cli.Post("/patients/k1/intakes", R"({"slot_id": "tac-am", "ts": "2024-02-20T14:00:00Z"})",
                 "application/json")
            ->status == 404);
  live.clock().set(parse_instant("2024-03-05T14:00:00Z"));
  auto closed = cli.Post("/patients/k1/intakes", R"({"slot_id": "tac-am", "ts": "2024-03-02T14:00:00Z"})",
                         "application/json");
  CHECK(closed->status == 409);
  CHECK(body_of(closed)["error"] == "day_closed");
  CHECK(cli.Get("/cohort/report")->status == 400);
}

TEST_CASE("labs import and cohort report over HTTP") {
  LiveServer live;
  auto cli = live.client();
  cli.Post("/patients", kPatientBody, "application/json");

  const auto imported = body_of(cli.Post("/labs/import",
                                         "patient_id,draw_date,analyte,value_ng_ml\n"
                                         "k1,2024-02-01,tacrolimus,8\n"
                                         "k1,2024-02-08,tacrolimus,12\n"
                                         "k1,2024-02-08,tacrolimus,10\n",
                                         "text/csv"));
  CHECK(imported["accepted"] == 2);
  CHECK(imported["rejected"].size() == 1);

  const auto report = body_of(cli.Get("/cohort/report?window=2024-01-01..2024-12-31"));
  CHECK(report["comparison"]["result"]["available"] == false);
  CHECK(report["comparison"]["test"] == stats::kWelchTestName);
  CHECK(report["logistic"]["model"] == stats::kLogisticModelName);

  auto text = cli.Get("/cohort/report?window=2024-01-01..2024-12-31&format=text");
  REQUIRE(text);
  CHECK(text->status == 200);
  CHECK(text->body.find("Cohort report") != std::string::npos);
}

TEST_CASE("shared token hook") {
  LiveServer live(ApiOptions{.token = "s3cret"});
  auto cli = live.client();
  CHECK(cli.Get("/patients/k1/today")->status == 401);
  httplib::Headers headers{{"X-Adhere-Token", "s3cret"}};
  CHECK(cli.Get("/patients/k1/today", headers)->status == 404);
}
