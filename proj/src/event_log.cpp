#include "adhere/event_log.hpp"

#include "adhere/error.hpp"

#include <array>
#include <utility>

namespace adhere {

namespace {

constexpr std::array<std::pair<RecordType, std::string_view>, 5> kTypes{{
    {RecordType::intake, "intake"},
    {RecordType::award, "award"},
    {RecordType::lab, "lab"},
    {RecordType::schedule_change, "schedule_change"},
    {RecordType::day_close, "day_close"},
}};

}  // namespace

std::string_view to_string(RecordType type) {
  for (const auto& [t, name] : kTypes) {
    if (t == type) return name;
  }
  return "unknown";
}

RecordType parse_record_type(std::string_view text) {
  for (const auto& [t, name] : kTypes) {
    if (name == text) return t;
  }
  throw Error(ErrorCode::data, "unknown record_type '" + std::string(text) + "'");
}

nlohmann::json record_to_json(const EventRecord& record) {
  return {{"seq", record.seq},
          {"record_type", to_string(record.type)},
          {"recorded_at", format_instant(record.recorded_at)},
          {"payload", record.payload}};
}

EventRecord record_from_json(const nlohmann::json& j) {
  try {
    return EventRecord{
        .type = parse_record_type(j.at("record_type").get<std::string>()),
        .payload = j.at("payload"),
        .seq = j.at("seq").get<std::int64_t>(),
        .recorded_at = parse_instant(j.at("recorded_at").get<std::string>()),
    };
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::data, std::string("malformed event record: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::data, std::string("malformed event record: ") + e.what());
  }
}

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)) {
  std::uintmax_t good_bytes = 0;
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read " + path_.string());
    const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    while (pos < content.size()) {
      const std::size_t nl = content.find('\n', pos);
      const bool terminated = nl != std::string::npos;
      const std::string_view line(content.data() + pos, (terminated ? nl : content.size()) - pos);
      const bool last = !terminated || nl + 1 == content.size();
      try {
        if (!terminated) throw Error(ErrorCode::data, "unterminated record");
        auto record = record_from_json(nlohmann::json::parse(line));
        if (record.seq != last_seq() + 1) {
          throw Error(ErrorCode::data, "seq " + std::to_string(record.seq) + " out of order");
        }
        records_.push_back(std::move(record));
      } catch (const std::exception& e) {
        if (!last) {
          throw Error(ErrorCode::data, path_.string() + ": corrupt record at byte " +
                                           std::to_string(pos) + ": " + e.what());
        }
        break;
      }
      pos = nl + 1;
      good_bytes = pos;
    }
    discarded_bytes_ = content.size() - good_bytes;
    if (discarded_bytes_ > 0) std::filesystem::resize_file(path_, good_bytes);
  } else {
    std::filesystem::create_directories(path_.parent_path());
  }
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw Error(ErrorCode::io, "cannot open " + path_.string() + " for append");
}

const EventRecord& EventLog::append(RecordType type, nlohmann::json payload, Instant recorded_at) {
  EventRecord record{
      .type = type, .payload = std::move(payload), .seq = last_seq() + 1, .recorded_at = recorded_at};
  const std::string line = record_to_json(record).dump() + "\n";
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
  if (!out_) throw Error(ErrorCode::io, "write failed on " + path_.string());
  records_.push_back(std::move(record));
  return records_.back();
}

}  // namespace adhere
