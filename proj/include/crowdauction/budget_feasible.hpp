#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "crowdauction/auction.hpp"
#include "crowdauction/valuefn.hpp"

namespace crowdauction {

struct FeasibleDensity {
  double density = 0;             // V(J) / B'
  std::vector<UserId> accepted;   // J, in acceptance order
  Value accepted_value = 0;       // V(J)
};

/// Proportional-share greedy over a sample under budget B'. Users are taken
/// in order of marginal density while
///
///   b_i <= B' * V_i(J) / V(J + i)   and   V(J) <= B'
///
/// and the resulting density V(J) / B' is returned. The second condition
/// compares a value with a currency amount; it is applied as written, with
/// both sides as plain reals.
template <ValueOracle F>
FeasibleDensity get_feasible_density(const F& fn,
                                     std::span<const DeclaredProfile> sample,
                                     Money budget) {
  if (!budget.is_positive()) {
    throw std::domain_error("get_feasible_density: budget must be positive");
  }
  detail::require_positive_bids(sample);
  FeasibleDensity result;
  auto tracker = fn.tracker();
  for (;;) {
    const auto best = detail::pick_densest(tracker, sample);
    if (!best) break;
    const auto& u = sample[best->index];
    const Value with = tracker.value() + best->marginal;
    // b_i * V(J+i) <= B' * V_i(J)
    const bool share_ok = static_cast<__int128>(u.bid.micros()) * with <=
                          static_cast<__int128>(budget.micros()) * best->marginal;
    // V(J) <= B'
    const bool value_ok = static_cast<__int128>(tracker.value()) * Money::kScale <=
                          static_cast<__int128>(budget.micros());
    if (!share_ok || !value_ok) break;
    tracker.add(u.id);
    result.accepted.push_back(u.id);
  }
  result.accepted_value = tracker.value();
  result.density = static_cast<double>(result.accepted_value) / budget.to_double();
  return result;
}

}  // namespace crowdauction
