#include "adhere/calendar.hpp"
#include "adhere/error.hpp"
#include "adhere/game.hpp"
#include "adhere/http_api.hpp"
#include "adhere/json_io.hpp"
#include "adhere/service.hpp"
#include "adhere/sim_loader.hpp"
#include "adhere/simulator.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

std::string resolve_data_dir(const std::string& flag) {
  if (const char* env = std::getenv("ADHERE_DATA"); env != nullptr && *env != '\0') return env;
  if (flag.empty()) throw adhere::Error(adhere::ErrorCode::config, "no data directory: pass --data or set ADHERE_DATA");
  return flag;
}

std::shared_ptr<adhere::AdherenceService> open_service(const std::string& flag) {
  return std::make_shared<adhere::AdherenceService>(resolve_data_dir(flag),
                                                    std::make_shared<adhere::SystemClock>());
}

std::string milestones_text(const std::vector<int>& milestones) {
  std::string out = "{";
  for (std::size_t i = 0; i < milestones.size(); ++i) out += (i ? "," : "") + std::to_string(milestones[i]);
  return out + "}";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adhere - medication adherence engine for transplant patients"};
  app.require_subcommand(1);

  std::string data_dir;
  int port = 8080;
  std::string host = "0.0.0.0";
  std::string static_dir;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--data", data_dir, "Data directory");
  serve->add_option("--static", static_dir, "Directory of UI assets served at /");

  std::string close_date;
  auto* close_day = app.add_subcommand("close-day", "Close all frozen days up to a date");
  close_day->add_option("--date", close_date, "Last day to close (YYYY-MM-DD)")->required();
  close_day->add_option("--data", data_dir, "Data directory");

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic cohort into a data directory");
  simulate->add_option("--config", config_path, "Cohort config JSON")->required();
  simulate->add_option("--out", out_dir, "Output data directory")->required();
  simulate->add_option("--seed", seed, "Master seed (overrides the config)");

  std::string window_text, rule_text = "tag";
  bool as_text = false, as_json = false;
  auto* report = app.add_subcommand("report", "Cohort analytics report");
  report->add_option("--data", data_dir, "Data directory");
  report->add_option("--window", window_text, "FROM..TO")->required();
  report->add_option("--rule", rule_text, "Arm labeling rule: tag | id-prefix");
  auto* text_flag = report->add_flag("--text", as_text, "Plain-text table (default)");
  report->add_flag("--json", as_json, "JSON document")->excludes(text_flag);

  std::string trace;
  auto* score = app.add_subcommand("score", "Score an adherence bit-string with the game rules");
  score->add_option("--trace", trace, "Daily adherence bits, oldest first, e.g. 1111111")->required();
  bool score_json = false;
  score->add_flag("--json", score_json, "JSON output");

  std::string labs_file;
  auto* import_labs = app.add_subcommand("import-labs", "Import a tacrolimus labs CSV");
  import_labs->add_option("file", labs_file, "CSV file")->required();
  import_labs->add_option("--data", data_dir, "Data directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*score) {
      const auto s = adhere::score_trace(trace);
      if (score_json) {
        std::cout << adhere::Json{{"points", s.points}, {"challenges", s.challenges}, {"milestones", s.milestones}}.dump()
                  << "\n";
      } else {
        std::cout << "points " << s.points << "\nchallenges " << s.challenges << "\nmilestones "
                  << milestones_text(s.milestones) << "\n";
      }
    } else if (*serve) {
      auto service = open_service(data_dir);
      httplib::Server server;
      adhere::ApiOptions options;
      if (const char* token = std::getenv("ADHERE_TOKEN"); token != nullptr && *token != '\0') options.token = token;
      if (!static_dir.empty()) options.static_dir = static_dir;
      adhere::mount_api(server, *service, options);
      std::cerr << "adhere: serving " << service->data_dir() << " on " << host << ":" << port << "\n";
      if (!server.listen(host, port)) {
        std::cerr << "adhere: cannot listen on " << host << ":" << port << "\n";
        return 1;
      }
    } else if (*close_day) {
      auto service = open_service(data_dir);
      const auto awards = service->close_days(adhere::parse_date(close_date));
      std::size_t total = 0;
      for (const auto& [id, list] : awards) total += list.size();
      std::cout << "closed through " << close_date << "; " << awards.size() << " patients, " << total
                << " awards\n";
    } else if (*simulate) {
      auto config = adhere::sim::load_config(config_path);
      if (seed) config.master_seed = *seed;
      const auto cohort = adhere::sim::simulate_cohort(config);
      // Records are stamped as of the moment the last simulated day froze, so
      // the written logs depend only on the config.
      const auto as_of = adhere::freeze_instant(cohort.period().to, adhere::Zone::load(config.timezone));
      adhere::AdherenceService service(out_dir, std::make_shared<adhere::ManualClock>(as_of));
      const int n = adhere::load_simulation(service, cohort);
      std::cout << "simulated " << n << " patients over " << adhere::format_date_range(cohort.period())
                << " into " << out_dir << "\n";
    } else if (*report) {
      auto service = open_service(data_dir);
      const auto r = service->cohort_report(adhere::parse_date_range(window_text), adhere::parse_arm_rule(rule_text));
      if (as_json) {
        std::cout << adhere::Json(r).dump(2) << "\n";
      } else {
        std::cout << adhere::render_text(r);
      }
    } else if (*import_labs) {
      auto service = open_service(data_dir);
      std::ifstream in(labs_file);
      if (!in) throw adhere::Error(adhere::ErrorCode::io, "cannot read " + labs_file);
      const auto result = service->ingest_labs(in);
      std::cout << "accepted " << result.accepted << ", rejected " << result.rejected.size() << "\n";
      for (const auto& r : result.rejected) std::cout << "  line " << r.line << ": " << r.reason << "\n";
    }
  } catch (const adhere::Error& e) {
    std::cerr << "adhere: " << adhere::to_string(e.code()) << ": " << e.what() << "\n";
    return 2;
  }
  return 0;
}
