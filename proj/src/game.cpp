#include "adhere/game.hpp"

#include "adhere/error.hpp"

namespace adhere {

std::string badge_id_for(int milestone) {
  return "badge-" + std::to_string(milestone) + "-challenge" + (milestone == 1 ? "" : "s");
}

std::string_view to_string(AwardKind kind) {
  switch (kind) {
    case AwardKind::daily_point: return "daily_point";
    case AwardKind::challenge_completed: return "challenge_completed";
    case AwardKind::milestone_reached: return "milestone_reached";
  }
  return "unknown";
}

AwardKind parse_award_kind(std::string_view text) {
  if (text == "daily_point") return AwardKind::daily_point;
  if (text == "challenge_completed") return AwardKind::challenge_completed;
  if (text == "milestone_reached") return AwardKind::milestone_reached;
  throw Error(ErrorCode::validation, "unknown award kind '" + std::string(text) + "'");
}

GameStep apply_day(const GameLedger& ledger, const DayOutcome& outcome) {
  if (!outcome.closed) {
    throw Error(ErrorCode::replay, "day " + format_date(outcome.day) + " is not closed");
  }
  if (ledger.last_applied_day) {
    if (outcome.day <= *ledger.last_applied_day) {
      throw Error(ErrorCode::idempotency, "day " + format_date(outcome.day) + " already applied");
    }
    if (outcome.day != *ledger.last_applied_day + 1) {
      throw Error(ErrorCode::replay, "non-contiguous day " + format_date(outcome.day) +
                                         " after " + format_date(*ledger.last_applied_day));
    }
  }

  GameStep step{.ledger = ledger, .awards = {}};
  GameLedger& next = step.ledger;
  next.last_applied_day = outcome.day;
  if (!outcome.adherent) {
    next.current_streak_days = 0;
    return step;
  }

  next.total_points += 1;
  next.current_streak_days += 1;
  step.awards.push_back({AwardKind::daily_point, outcome.day, 1});
  if (next.current_streak_days % kChallengeLength != 0) return step;

  next.challenges_completed += 1;
  step.awards.push_back({AwardKind::challenge_completed, outcome.day, next.challenges_completed});
  for (int m : kMilestones) {
    if (m == next.challenges_completed) {
      next.milestones_reached.push_back(m);
      next.rewards.push_back({m, badge_id_for(m), outcome.day});
      step.awards.push_back({AwardKind::milestone_reached, outcome.day, m});
    }
  }
  return step;
}

TraceScore score_trace(std::string_view bits) {
  GameLedger ledger;
  // Dates only anchor contiguity here.
  Date day(2000, 1, 1);
  for (char c : bits) {
    if (c != '0' && c != '1') {
      throw Error(ErrorCode::validation, "trace must contain only 0 and 1");
    }
    const int taken = c == '1' ? 1 : 0;
    ledger = apply_day(ledger, closed_outcome("trace", day, 1, taken, 0, 1 - taken)).ledger;
    day += 1;
  }
  return {ledger.total_points, ledger.challenges_completed, ledger.milestones_reached};
}

int level(const GameLedger& ledger) { return static_cast<int>(ledger.milestones_reached.size()); }

}  // namespace adhere
