#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "crowdauction/money.hpp"
#include "crowdauction/valuefn.hpp"

namespace crowdauction {

/// True profile of a participant. Only the cost is private; the task set is
/// observable by the platform and cannot be misreported.
struct UserProfile {
  UserId id = 0;
  Money true_cost;
  std::vector<TaskId> tasks;
  std::int64_t arrival_step = 0;  // 1..T in online runs, 0 offline
};

/// What a participant declares. The task set is not repeated here: it is
/// owned by the value oracle, which keeps it identical to the true one.
struct DeclaredProfile {
  UserId id = 0;
  Money bid;
  friend bool operator==(const DeclaredProfile&, const DeclaredProfile&) = default;
};

enum class DecisionReason {
  accepted,
  threshold,       // bid above the offer in force
  stage_service,   // stage service already reached
  deadline,        // arrived after T
  zero_marginal,   // nothing left to contribute
  not_selected,    // offline: lost the greedy ordering
};

inline std::string_view to_string(DecisionReason r) {
  switch (r) {
    case DecisionReason::accepted: return "accepted";
    case DecisionReason::threshold: return "threshold";
    case DecisionReason::stage_service: return "stage_service";
    case DecisionReason::deadline: return "deadline";
    case DecisionReason::zero_marginal: return "zero_marginal";
    case DecisionReason::not_selected: return "not_selected";
  }
  return "unknown";
}

inline DecisionReason decision_reason_from_string(std::string_view s) {
  for (auto r : {DecisionReason::accepted, DecisionReason::threshold,
                 DecisionReason::stage_service, DecisionReason::deadline,
                 DecisionReason::zero_marginal, DecisionReason::not_selected}) {
    if (to_string(r) == s) return r;
  }
  throw std::invalid_argument("unknown decision reason '" + std::string(s) + "'");
}

/// One entry of the decision log. `clock` is the time step for online
/// mechanisms and the selection index for offline ones.
struct Decision {
  std::int64_t clock = 0;
  UserId user = 0;
  double threshold = 0;  // density in force (value per currency unit)
  Money bid;
  Money offer;           // price offered before looking at the bid
  bool accepted = false;
  Money payment;
  Value allocated = 0;   // service credited to the user
  DecisionReason reason = DecisionReason::not_selected;
  friend bool operator==(const Decision&, const Decision&) = default;
};

struct AuctionOutcome {
  std::vector<UserId> winners;  // selection order
  std::vector<Money> payments;   // indexed by user id, zero for losers
  Value achieved_value = 0;
  Money total_payment;
  std::vector<Decision> trace;
  std::vector<std::string> notes;

  bool is_winner(UserId i) const {
    return std::find(winners.begin(), winners.end(), i) != winners.end();
  }
  Money payment(UserId i) const {
    return i < payments.size() ? payments[i] : Money::zero();
  }
  bool has_note(std::string_view prefix) const {
    return std::any_of(notes.begin(), notes.end(), [&](const std::string& n) {
      return n.compare(0, prefix.size(), prefix) == 0;
    });
  }
};

/// p_i - c_i for winners, 0 otherwise.
inline Money utility(UserId i, const AuctionOutcome& outcome, Money true_cost) {
  if (!outcome.is_winner(i)) return Money::zero();
  return outcome.payment(i) - true_cost;
}

struct OutcomeCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct OutcomeChecklist {
  std::vector<OutcomeCheck> checks;
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const OutcomeCheck& c) { return c.passed; });
  }
  const OutcomeCheck* failure(std::string_view name) const {
    for (const auto& c : checks) {
      if (!c.passed && c.name == name) return &c;
    }
    return nullptr;
  }
};

inline OutcomeChecklist validate_outcome(const AuctionOutcome& outcome,
                                         double required_service) {
  OutcomeChecklist list;

  OutcomeCheck nonneg{"payments nonnegative", true, ""};
  OutcomeCheck loser{"non-winner paid", true, ""};
  Money sum;
  std::vector<std::uint8_t> won(outcome.payments.size(), 0);
  for (UserId w : outcome.winners) {
    if (w < won.size()) won[w] = 1;
  }
  for (UserId i = 0; i < outcome.payments.size(); ++i) {
    const Money p = outcome.payments[i];
    if (p < Money::zero()) {
      nonneg.passed = false;
      nonneg.detail += "user " + std::to_string(i) + " paid " + p.to_string() + "; ";
    }
    const bool winner = won[i] != 0;
    if (!winner && p != Money::zero()) {
      loser.passed = false;
      loser.detail += "user " + std::to_string(i) + " paid " + p.to_string() + "; ";
    }
    if (winner) sum += p;
  }
  list.checks.push_back(nonneg);
  list.checks.push_back(loser);

  OutcomeCheck service{"service shortfall", true, ""};
  if (static_cast<double>(outcome.achieved_value) < required_service) {
    service.passed = false;
    service.detail = "achieved " + std::to_string(outcome.achieved_value) +
                     " < required " + std::to_string(required_service);
  }
  list.checks.push_back(service);

  OutcomeCheck total{"total consistency", sum == outcome.total_payment, ""};
  if (!total.passed) {
    total.detail = "sum of winner payments " + sum.to_string() +
                   " != total " + outcome.total_payment.to_string();
  }
  list.checks.push_back(total);
  return list;
}

/// Bids as a vector indexed by user id, for deviation reruns.
using BidVector = std::vector<Money>;

inline BidVector bid_vector(std::span<const DeclaredProfile> users,
                            std::size_t user_count) {
  BidVector bids(user_count, Money::zero());
  for (const auto& u : users) bids.at(u.id) = u.bid;
  return bids;
}

struct CriticalBid {
  Money bid;
  bool never_wins = false;
  bool unbounded = false;  // still wins at the ceiling
};

/// Largest bid (in micro-units) at which `user` is still selected, assuming
/// selection is monotone in the bid.
template <class WinPredicate>
CriticalBid bisect_critical_bid(WinPredicate&& wins, Money ceiling) {
  std::int64_t lo = 1;
  std::int64_t hi = ceiling.micros();
  if (hi < lo) throw std::invalid_argument("critical bid: empty bracket");
  if (wins(Money::from_micros(hi))) return {Money::from_micros(hi), false, true};
  if (!wins(Money::from_micros(lo))) return {Money::zero(), true, false};
  // wins(lo) && !wins(hi)
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (wins(Money::from_micros(mid))) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {Money::from_micros(lo), false, false};
}

namespace detail {

/// V_a / b_a > V_b / b_b, compared exactly by cross multiplication.
inline bool denser(Value va, Money ba, Value vb, Money bb) {
  return static_cast<__int128>(va) * bb.micros() >
         static_cast<__int128>(vb) * ba.micros();
}

inline void require_positive_bids(std::span<const DeclaredProfile> users) {
  for (const auto& u : users) {
    if (!u.bid.is_positive()) {
      throw std::invalid_argument("bid of user " + std::to_string(u.id) +
                                  " must be positive");
    }
  }
}

struct Pick {
  std::size_t index;  // into the candidate span
  Value marginal;
};

/// Highest marginal density among candidates not yet in the tracker's set.
/// Ties go to the lowest user id; zero-marginal candidates are never picked.
template <class Tracker>
std::optional<Pick> pick_densest(const Tracker& tracker,
                                 std::span<const DeclaredProfile> candidates) {
  std::optional<Pick> best;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto& c = candidates[k];
    if (tracker.contains(c.id)) continue;
    const Value gain = tracker.marginal(c.id);
    if (gain <= 0) continue;
    if (!best) {
      best = Pick{k, gain};
      continue;
    }
    const auto& b = candidates[best->index];
    if (denser(gain, c.bid, best->marginal, b.bid) ||
        (!denser(best->marginal, b.bid, gain, c.bid) && c.id < b.id)) {
      best = Pick{k, gain};
    }
  }
  return best;
}

inline void seal(AuctionOutcome& outcome, std::size_t user_count) {
  outcome.payments.resize(user_count, Money::zero());
  Money sum;
  for (UserId w : outcome.winners) sum += outcome.payments.at(w);
  outcome.total_payment = sum;
  std::vector<std::uint8_t> won(user_count, 0);
  for (UserId w : outcome.winners) won.at(w) = 1;
  for (UserId i = 0; i < user_count; ++i) {
    if (outcome.payments[i] != Money::zero() && !won[i]) {
      throw std::logic_error("outcome pays non-winner " + std::to_string(i));
    }
    if (outcome.payments[i] < Money::zero()) {
      throw std::logic_error("outcome has negative payment");
    }
  }
}

}  // namespace detail
}  // namespace crowdauction
