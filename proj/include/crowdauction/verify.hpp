#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crowdauction/auction.hpp"
#include "crowdauction/oms.hpp"
#include "crowdauction/sos.hpp"
#include "crowdauction/valuefn.hpp"

// Property and oracle harness: critical bids, truthfulness, individual
// rationality, service feasibility, exact minimum-cost covers and frugality.

namespace crowdauction {

/// Reruns a mechanism on a full bid vector (indexed by user id), with every
/// other input frozen.
using MechanismRun = std::function<AuctionOutcome(const BidVector&)>;

class NonMonotoneSelection : public std::runtime_error {
 public:
  NonMonotoneSelection(UserId user, Money losing_bid, Money winning_bid)
      : std::runtime_error("selection of user " + std::to_string(user) +
                           " is not monotone: loses at " + losing_bid.to_string() +
                           " but wins at " + winning_bid.to_string()),
        losing_bid_(losing_bid),
        winning_bid_(winning_bid) {}
  Money losing_bid() const { return losing_bid_; }
  Money winning_bid() const { return winning_bid_; }

 private:
  Money losing_bid_;
  Money winning_bid_;
};

/// Win/lose transition of `user`'s bid over [1 micro-unit, ceiling].
///
/// Monotonicity is checked first on `probe_points` evenly spaced bids; if a
/// lower bid loses while a higher one wins, NonMonotoneSelection is thrown.
inline CriticalBid critical_bid_oracle(const MechanismRun& run, BidVector bids,
                                       UserId user, Money ceiling,
                                       std::size_t probe_points = 41) {
  const auto wins = [&](Money b) {
    bids.at(user) = b;
    return run(bids).is_winner(user);
  };
  if (probe_points >= 2) {
    std::optional<Money> lowest_loss;
    for (std::size_t k = 0; k < probe_points; ++k) {
      const auto micros =
          1 + (ceiling.micros() - 1) * static_cast<std::int64_t>(k) /
                  static_cast<std::int64_t>(probe_points - 1);
      const Money b = Money::from_micros(micros);
      if (wins(b)) {
        if (lowest_loss) throw NonMonotoneSelection(user, *lowest_loss, b);
      } else if (!lowest_loss) {
        lowest_loss = b;
      }
    }
  }
  return bisect_critical_bid(wins, ceiling);
}

/// `points` bids evenly spaced on [0.1 c, 3 c], plus c itself and, when
/// given, the critical bid and one micro-unit either side of it.
inline std::vector<Money> deviation_grid(Money cost, std::optional<Money> critical,
                                         std::size_t points = 41) {
  std::vector<Money> grid;
  const double c = cost.to_double();
  for (std::size_t k = 0; k < points; ++k) {
    const double f = points == 1 ? 1.0
                                 : 0.1 + 2.9 * static_cast<double>(k) /
                                             static_cast<double>(points - 1);
    grid.push_back(Money::from_double(f * c));
  }
  grid.push_back(cost);
  if (critical && critical->is_positive()) {
    grid.push_back(*critical - Money::epsilon());
    grid.push_back(*critical);
    grid.push_back(*critical + Money::epsilon());
  }
  std::erase_if(grid, [](Money m) { return !m.is_positive(); });
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

struct TruthfulnessReport {
  UserId user = 0;
  Money truthful_utility;
  Money max_gain = Money::zero();  // best deviation utility minus truthful
  Money best_deviation;            // bid achieving max_gain
  std::size_t deviations = 0;
  bool passed() const { return max_gain <= Money::zero(); }
};

/// Reruns the mechanism with only `user`'s bid changed, for every bid in the
/// grid, and reports the largest utility gain over truthful bidding.
inline TruthfulnessReport check_truthfulness(const MechanismRun& run,
                                             const BidVector& true_costs,
                                             UserId user,
                                             std::span<const Money> grid) {
  const Money cost = true_costs.at(user);
  if (std::find(grid.begin(), grid.end(), cost) == grid.end()) {
    throw std::invalid_argument("check_truthfulness: grid must contain the true cost");
  }
  TruthfulnessReport report;
  report.user = user;
  report.truthful_utility = utility(user, run(true_costs), cost);
  report.best_deviation = cost;
  BidVector bids = true_costs;
  for (Money b : grid) {
    if (b == cost) continue;
    bids[user] = b;
    const Money gain = utility(user, run(bids), cost) - report.truthful_utility;
    ++report.deviations;
    if (gain > report.max_gain) {
      report.max_gain = gain;
      report.best_deviation = b;
    }
  }
  return report;
}

struct IrViolation {
  UserId user = 0;
  Money payment;
  Money cost;
};

struct IrReport {
  std::vector<IrViolation> violations;
  bool passed() const { return violations.empty(); }
};

inline IrReport check_individual_rationality(const AuctionOutcome& outcome,
                                             std::span<const Money> true_costs) {
  IrReport report;
  for (UserId w : outcome.winners) {
    const Money p = outcome.payment(w);
    const Money c = true_costs[w];
    if (p < c) report.violations.push_back({w, p, c});
  }
  return report;
}

struct FeasibilityViolation {
  std::int64_t t = 0;
  Value value = 0;
  double bound = 0;
};

struct FeasibilityReport {
  std::vector<FeasibilityViolation> violations;
  Value final_value = 0;
  bool completed = false;  // final value >= R
  bool passed() const { return violations.empty(); }
};

/// Allocated service must stay within the stage service at every step and
/// within R at the deadline. Completion is reported separately.
inline FeasibilityReport check_service_feasibility(
    std::span<const ServiceSample> log, double required) {
  FeasibilityReport report;
  for (const auto& s : log) {
    if (static_cast<double>(s.value) > s.stage_service) {
      report.violations.push_back({s.t, s.value, s.stage_service});
    }
  }
  if (!log.empty()) {
    report.final_value = log.back().value;
    if (static_cast<double>(report.final_value) > required) {
      report.violations.push_back({log.back().t, report.final_value, required});
    }
  }
  report.completed = static_cast<double>(report.final_value) >= required;
  return report;
}

/// Offline contract: a returned outcome reaches R.
inline FeasibilityReport check_service_feasibility(const AuctionOutcome& outcome,
                                                   double required) {
  FeasibilityReport report;
  report.final_value = outcome.achieved_value;
  report.completed = static_cast<double>(outcome.achieved_value) >= required;
  if (!report.completed) {
    report.violations.push_back({0, outcome.achieved_value, required});
  }
  return report;
}

struct MinCostCover {
  bool feasible = false;
  Money cost = Money::max();
  std::vector<UserId> users;
};

/// Exact minimum total cost of a subset of `users` with coverage >= R, by
/// exhaustive branch-and-bound search. At most 20 users.
inline MinCostCover min_cost_cover_bruteforce(const CoverageValueFn& fn,
                                              std::span<const UserId> users,
                                              std::span<const Money> costs,
                                              double required) {
  if (users.size() > 20) {
    throw std::invalid_argument("min_cost_cover_bruteforce: at most 20 users");
  }
  MinCostCover best;
  if (required <= 0) {
    best.feasible = true;
    best.cost = Money::zero();
    return best;
  }
  std::vector<std::uint16_t> hits(fn.task_count(), 0);
  std::vector<UserId> chosen;
  Value covered = 0;

  const std::function<void(std::size_t, Money)> search = [&](std::size_t k,
                                                              Money spent) {
    if (best.feasible && spent >= best.cost) return;
    if (static_cast<double>(covered) >= required) {
      best.feasible = true;
      best.cost = spent;
      best.users = chosen;
      return;
    }
    if (k == users.size()) return;
    const UserId u = users[k];
    // include
    for (TaskId t : fn.tasks(u)) covered += hits[t]++ == 0 ? 1 : 0;
    chosen.push_back(u);
    search(k + 1, spent + costs[u]);
    chosen.pop_back();
    for (TaskId t : fn.tasks(u)) covered -= --hits[t] == 0 ? 1 : 0;
    // exclude
    search(k + 1, spent);
  };
  search(0, Money::zero());
  return best;
}

struct FrugalityReport {
  Money total_payment;
  Money reference_cost;       // optimum (or greedy stand-in) at gamma * R
  bool reference_exact = false;
  bool reference_feasible = false;
  bool completed = false;
  double ratio = std::numeric_limits<double>::quiet_NaN();
  std::string qualifier;      // "", "incomplete", "infeasible-reference"
};

/// Total payment divided by the minimum cost of covering gamma * R with the
/// same users at their true costs. Above 20 users the greedy cover cost is
/// used as the reference and the report says so.
inline FrugalityReport measure_frugality(const AuctionOutcome& outcome,
                                         const CoverageValueFn& fn,
                                         std::span<const Money> true_costs,
                                         double required, double gamma = 1.0) {
  FrugalityReport report;
  report.total_payment = outcome.total_payment;
  report.completed = static_cast<double>(outcome.achieved_value) >= required;
  std::vector<UserId> ids(fn.user_count());
  std::iota(ids.begin(), ids.end(), UserId{0});
  const double target = gamma * required;
  if (ids.size() <= 20) {
    const auto opt = min_cost_cover_bruteforce(fn, ids, true_costs, target);
    report.reference_exact = true;
    report.reference_feasible = opt.feasible;
    report.reference_cost = opt.cost;
  } else {
    std::vector<DeclaredProfile> truthful;
    for (UserId i : ids) truthful.push_back({i, true_costs[i]});
    try {
      report.reference_cost = stage_budget(select_service(fn, truthful, target));
      report.reference_feasible = true;
    } catch (const ServiceInfeasible&) {
      report.reference_feasible = false;
    }
  }
  if (!report.reference_feasible) {
    report.qualifier = "infeasible-reference";
    return report;
  }
  if (report.reference_cost.is_positive()) {
    report.ratio = report.total_payment.to_double() / report.reference_cost.to_double();
  }
  if (!report.completed) report.qualifier = "incomplete";
  return report;
}

/// The offer made to `user` must not move when only that user's bid moves.
inline bool check_bid_independence(const MechanismRun& run, BidVector bids,
                                   UserId user, std::span<const Money> alternatives) {
  const auto offer_of = [&](const AuctionOutcome& o) -> std::optional<Money> {
    for (const auto& d : o.trace) {
      if (d.user == user) return d.offer;
    }
    return std::nullopt;
  };
  const auto reference = offer_of(run(bids));
  for (Money b : alternatives) {
    bids.at(user) = b;
    if (offer_of(run(bids)) != reference) return false;
  }
  return true;
}

struct Summary {
  std::size_t count = 0;
  double mean = 0;
  double stddev = 0;  // sample standard deviation
  double min = 0;
  double p10 = 0;
  double median = 0;
  double p90 = 0;
  double max = 0;
};

inline Summary summarize(std::vector<double> xs) {
  Summary s;
  std::erase_if(xs, [](double x) { return !std::isfinite(x); });
  s.count = xs.size();
  if (xs.empty()) return s;
  std::sort(xs.begin(), xs.end());
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.stddev = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  const auto q = [&](double p) {
    const double pos = p * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
  };
  s.min = xs.front();
  s.p10 = q(0.1);
  s.median = q(0.5);
  s.p90 = q(0.9);
  s.max = xs.back();
  return s;
}

}  // namespace crowdauction
