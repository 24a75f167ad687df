#pragma once

#include "adhere/calendar.hpp"
#include "adhere/domain.hpp"
#include "adhere/streaks.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace adhere::testing {

inline DoseSchedule tacrolimus_bid(const std::string& patient_id = "p1",
                                   Date effective_from = Date(2024, 1, 1)) {
  DoseSchedule s;
  s.patient_id = patient_id;
  s.effective_from = effective_from;
  s.medications.push_back(MedicationLine{
      .med_name = "tacrolimus",
      .is_immunosuppressant = true,
      .slots = {DoseSlot{.slot_id = "tac-am", .nominal_time = TimeOfDay::from_hm(8, 0)},
                DoseSlot{.slot_id = "tac-pm", .nominal_time = TimeOfDay::from_hm(20, 0)}},
  });
  return s;
}

inline IntakeEvent intake(const std::string& slot, const std::string& rfc3339,
                          IntakeKind kind = IntakeKind::taken,
                          const std::string& patient_id = "p1") {
  return IntakeEvent{patient_id, slot, parse_instant(rfc3339), kind};
}

/// Closed outcomes, one per character: '1' adherent, '0' one of two missed.
inline std::vector<DayOutcome> outcomes_from_bits(const std::string& bits,
                                                  Date first = Date(2024, 1, 1)) {
  std::vector<DayOutcome> out;
  Date d = first;
  for (char c : bits) {
    out.push_back(c == '1' ? closed_outcome("p1", d, 2, 2, 0, 0)
                           : closed_outcome("p1", d, 2, 1, 0, 1));
    d += 1;
  }
  return out;
}

inline std::string random_bits(std::mt19937_64& rng, int max_len, double p_one) {
  std::uniform_int_distribution<int> len(0, max_len);
  std::bernoulli_distribution one(p_one);
  std::string s(static_cast<std::size_t>(len(rng)), '0');
  for (auto& c : s) c = one(rng) ? '1' : '0';
  return s;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("adhere-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace adhere::testing
