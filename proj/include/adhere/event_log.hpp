#pragma once

#include "adhere/calendar.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string_view>
#include <vector>

namespace adhere {

// day_close records carry the final DayOutcome of a closed day so the game
// ledger (including non-adherent days, which emit no awards) can be replayed.
enum class RecordType { intake, award, lab, schedule_change, day_close };

std::string_view to_string(RecordType type);
RecordType parse_record_type(std::string_view text);

struct EventRecord {
  RecordType type = RecordType::intake;
  nlohmann::json payload;
  std::int64_t seq = 0;
  Instant recorded_at;

  bool operator==(const EventRecord&) const = default;
};

nlohmann::json record_to_json(const EventRecord& record);
EventRecord record_from_json(const nlohmann::json& j);

/// Append-only JSON-lines file, one record per line.
///
/// Opening scans the file: a trailing line that is unterminated or does not
/// parse is treated as a torn write, discarded, and truncated away so later
/// appends start on a clean line. A bad record anywhere else is corruption
/// and raises Error(data). Not thread-safe; callers serialize access.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path path);

  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  const std::vector<EventRecord>& records() const { return records_; }
  std::int64_t last_seq() const { return records_.empty() ? 0 : records_.back().seq; }
  /// Bytes dropped from a torn tail when the log was opened.
  std::uintmax_t discarded_bytes() const { return discarded_bytes_; }
  const std::filesystem::path& path() const { return path_; }

  /// Assigns the next seq, writes and flushes the line, then returns the
  /// stored record.
  const EventRecord& append(RecordType type, nlohmann::json payload, Instant recorded_at);

 private:
  std::filesystem::path path_;
  std::vector<EventRecord> records_;
  std::ofstream out_;
  std::uintmax_t discarded_bytes_ = 0;
};

}  // namespace adhere
