#pragma once

#include "adhere/error.hpp"
#include "adhere/service.hpp"

#include <optional>
#include <string>

namespace httplib {
class Server;
}

namespace adhere {

struct ApiOptions {
  // When set, every request must carry this value in X-Adhere-Token.
  std::optional<std::string> token;
  // Directory of static UI assets mounted at "/", if any.
  std::optional<std::string> static_dir;
};

/// Registers the JSON API on `server`:
///   POST /patients
///   GET  /patients/{id}/today
///   POST /patients/{id}/intakes
///   GET  /patients/{id}/game
///   GET  /patients/{id}/dashboard?window=FROM..TO
///   POST /labs/import            (CSV body)
///   GET  /cohort/report?window=FROM..TO[&rule=tag|id-prefix][&format=text]
void mount_api(httplib::Server& server, AdherenceService& service, const ApiOptions& options = {});

/// HTTP status for a library error code.
int http_status(ErrorCode code);

}  // namespace adhere
