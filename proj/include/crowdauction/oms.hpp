#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crowdauction/auction.hpp"
#include "crowdauction/valuefn.hpp"

// Offline mechanism under a service constraint: service-bounded greedy
// selection, stage budget, proportional-share re-selection and payments.

namespace crowdauction {

enum class WinnerRule {
  phase1_service,  // greedy until V(S) >= R
  phase2_budget,   // proportional-share greedy under the phase-1 budget
};

enum class PaymentRule {
  literal,             // max over positions of min{b_i(j), eta_i(j)}
  bisection_critical,  // supremum winning bid, found by bisection
};

struct OmsConfig {
  double required_service = 0;
  WinnerRule winner_rule = WinnerRule::phase1_service;
  PaymentRule payment_rule = PaymentRule::bisection_critical;
  /// Upper end of the critical-bid search. A winner who keeps winning at
  /// this bid is paid the ceiling.
  Money bid_ceiling = Money::from_micros(100 * Money::kScale);
};

class ServiceInfeasible : public std::runtime_error {
 public:
  ServiceInfeasible(Value reachable, double required)
      : std::runtime_error("service infeasible: users cover " +
                           std::to_string(reachable) + " < required " +
                           std::to_string(required)),
        reachable_(reachable),
        required_(required) {}
  Value reachable() const { return reachable_; }
  double required() const { return required_; }

 private:
  Value reachable_;
  double required_;
};

class PaymentLoopInfeasible : public std::runtime_error {
 public:
  explicit PaymentLoopInfeasible(UserId user)
      : std::runtime_error("payment loop cannot reach the required service "
                           "without user " + std::to_string(user)),
        user_(user) {}
  UserId user() const { return user_; }

 private:
  UserId user_;
};

namespace detail {

template <ValueOracle F>
Value total_value(const F& fn, std::span<const DeclaredProfile> users) {
  auto tracker = fn.tracker();
  for (const auto& u : users) tracker.add(u.id);
  return tracker.value();
}

}  // namespace detail

/// Greedy by marginal value per bid until the required service is reached.
template <ValueOracle F>
std::vector<DeclaredProfile> select_service(const F& fn,
                                            std::span<const DeclaredProfile> users,
                                            double required) {
  detail::require_positive_bids(users);
  std::vector<DeclaredProfile> picked;
  auto tracker = fn.tracker();
  while (static_cast<double>(tracker.value()) < required) {
    const auto best = detail::pick_densest(tracker, users);
    if (!best) {
      throw ServiceInfeasible(detail::total_value(fn, users), required);
    }
    tracker.add(users[best->index].id);
    picked.push_back(users[best->index]);
  }
  return picked;
}

inline Money stage_budget(std::span<const DeclaredProfile> winners) {
  Money sum;
  for (const auto& w : winners) sum += w.bid;
  return sum;
}

/// Proportional-share greedy: keeps adding the densest user while
/// V_i(S) / b_i >= V(S + i) / B.
template <ValueOracle F>
std::vector<DeclaredProfile> select_budget(const F& fn,
                                           std::span<const DeclaredProfile> users,
                                           Money budget) {
  detail::require_positive_bids(users);
  if (budget < Money::zero()) {
    throw std::invalid_argument("select_budget: budget must be >= 0");
  }
  std::vector<DeclaredProfile> picked;
  auto tracker = fn.tracker();
  for (;;) {
    const auto best = detail::pick_densest(tracker, users);
    if (!best) break;
    const auto& u = users[best->index];
    const Value with = tracker.value() + best->marginal;
    // V_i * B >= V(S+i) * b_i
    if (static_cast<__int128>(best->marginal) * budget.micros() <
        static_cast<__int128>(with) * u.bid.micros()) {
      break;
    }
    tracker.add(u.id);
    picked.push_back(u);
  }
  return picked;
}

/// Payment formula as printed: re-sorts the other users greedily and takes
/// the max over positions j of min{b_i(j), eta_i(j)} until V(T) >= R.
template <ValueOracle F>
Money payment_literal(const F& fn, std::span<const DeclaredProfile> users,
                      UserId winner, double required, Money budget) {
  std::vector<DeclaredProfile> others;
  others.reserve(users.size());
  for (const auto& u : users) {
    if (u.id != winner) others.push_back(u);
  }
  if (static_cast<double>(detail::total_value(fn, others)) < required) {
    throw PaymentLoopInfeasible(winner);
  }

  auto prefix = fn.tracker();  // T_{j-1}
  double pay = 0;
  do {
    const auto next = detail::pick_densest(prefix, others);
    if (!next) throw PaymentLoopInfeasible(winner);
    const auto& ij = others[next->index];
    const Value gain_i = prefix.marginal(winner);
    const double scaled_bid = static_cast<double>(gain_i) * ij.bid.to_double() /
                              static_cast<double>(next->marginal);
    const Value with_i = prefix.value() + gain_i;
    const double eta = with_i > 0 ? static_cast<double>(gain_i) *
                                        budget.to_double() /
                                        static_cast<double>(with_i)
                                  : 0.0;
    pay = std::max(pay, std::min(scaled_bid, eta));
    prefix.add(ij.id);
  } while (static_cast<double>(prefix.value()) < required);
  return Money::from_double(pay);
}

/// Whether `user` is selected when bidding `bid`, everything else fixed.
template <ValueOracle F>
bool oms_wins(const F& fn, std::span<const DeclaredProfile> users, UserId user,
              Money bid, const OmsConfig& config) {
  std::vector<DeclaredProfile> modified(users.begin(), users.end());
  for (auto& u : modified) {
    if (u.id == user) u.bid = bid;
  }
  const auto phase1 = select_service(fn, modified, config.required_service);
  const auto contains = [&](const std::vector<DeclaredProfile>& set) {
    return std::any_of(set.begin(), set.end(),
                       [&](const DeclaredProfile& d) { return d.id == user; });
  };
  if (config.winner_rule == WinnerRule::phase1_service) return contains(phase1);
  return contains(select_budget(fn, modified, stage_budget(phase1)));
}

template <ValueOracle F>
AuctionOutcome run_oms(const F& fn, std::span<const DeclaredProfile> users,
                       const OmsConfig& config) {
  if (!(config.required_service >= 0)) {
    throw std::invalid_argument("run_oms: required service must be >= 0");
  }
  AuctionOutcome out;
  const auto phase1 = select_service(fn, users, config.required_service);
  const Money budget = stage_budget(phase1);

  std::vector<DeclaredProfile> winners = phase1;
  if (config.winner_rule == WinnerRule::phase2_budget) {
    winners = select_budget(fn, users, budget);
  }

  out.payments.assign(fn.user_count(), Money::zero());
  auto tracker = fn.tracker();
  for (std::size_t k = 0; k < winners.size(); ++k) {
    const auto& w = winners[k];
    const Value gain = tracker.marginal(w.id);
    tracker.add(w.id);
    out.winners.push_back(w.id);

    Money pay;
    bool use_bisection = config.payment_rule == PaymentRule::bisection_critical;
    if (!use_bisection) {
      try {
        pay = payment_literal(fn, users, w.id, config.required_service, budget);
      } catch (const PaymentLoopInfeasible&) {
        out.notes.push_back("payment_loop_infeasible:" + std::to_string(w.id));
        use_bisection = true;
      }
    }
    if (use_bisection) {
      const auto critical = bisect_critical_bid(
          [&](Money b) { return oms_wins(fn, users, w.id, b, config); },
          config.bid_ceiling);
      if (critical.unbounded) {
        out.notes.push_back("critical_unbounded:" + std::to_string(w.id));
      }
      if (critical.never_wins) {
        out.notes.push_back("critical_never_wins:" + std::to_string(w.id));
      }
      pay = critical.bid;
    }
    out.payments[w.id] = pay;

    Decision d;
    d.clock = static_cast<std::int64_t>(k + 1);
    d.user = w.id;
    d.threshold = static_cast<double>(gain) / w.bid.to_double();
    d.bid = w.bid;
    d.offer = pay;
    d.accepted = true;
    d.payment = pay;
    d.allocated = gain;
    d.reason = DecisionReason::accepted;
    out.trace.push_back(d);
  }

  std::vector<DeclaredProfile> losers;
  for (const auto& u : users) {
    if (!out.is_winner(u.id)) losers.push_back(u);
  }
  std::sort(losers.begin(), losers.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  std::int64_t clock = static_cast<std::int64_t>(winners.size());
  for (const auto& l : losers) {
    Decision d;
    d.clock = ++clock;
    d.user = l.id;
    d.bid = l.bid;
    d.reason = DecisionReason::not_selected;
    out.trace.push_back(d);
  }

  out.achieved_value = tracker.value();
  if (static_cast<double>(out.achieved_value) < config.required_service) {
    out.notes.push_back("service_shortfall");
  }
  detail::seal(out, fn.user_count());
  return out;
}

}  // namespace crowdauction
