#pragma once

#include "adhere/calendar.hpp"
#include "adhere/streaks.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace adhere {

/// Consecutive adherent days that complete one "7 Day Challenge".
inline constexpr int kChallengeLength = 7;

/// Challenge counts that unlock a collectible badge.
inline constexpr std::array<int, 5> kMilestones{1, 3, 5, 10, 15};

std::string badge_id_for(int milestone);

struct Reward {
  int milestone = 0;
  std::string badge_id;
  Date earned_on;

  bool operator==(const Reward&) const = default;
};

enum class AwardKind { daily_point, challenge_completed, milestone_reached };

std::string_view to_string(AwardKind kind);
AwardKind parse_award_kind(std::string_view text);

struct Award {
  AwardKind kind = AwardKind::daily_point;
  Date day;
  int detail = 0;  // points granted, challenge ordinal, or milestone

  bool operator==(const Award&) const = default;
};

struct GameLedger {
  std::string patient_id;
  int total_points = 0;
  int challenges_completed = 0;
  int current_streak_days = 0;
  std::vector<int> milestones_reached;
  std::vector<Reward> rewards;
  std::optional<Date> last_applied_day;

  bool operator==(const GameLedger&) const = default;
};

struct GameStep {
  GameLedger ledger;
  std::vector<Award> awards;
};

/// Applies one closed day. The first day applied to an empty ledger may be
/// any date; after that days must be contiguous.
/// Throws Error(idempotency) for a day already applied, Error(replay) for a
/// gap or an unclosed outcome.
GameStep apply_day(const GameLedger& ledger, const DayOutcome& outcome);

struct TraceScore {
  int points = 0;
  int challenges = 0;
  std::vector<int> milestones;

  bool operator==(const TraceScore&) const = default;
};

/// Scores a string of '1' (adherent) and '0' days, oldest first, by folding
/// apply_day from an empty ledger. Throws Error(validation) on other chars.
TraceScore score_trace(std::string_view bits);

/// Number of milestone badges reached, 0..5.
int level(const GameLedger& ledger);

}  // namespace adhere
