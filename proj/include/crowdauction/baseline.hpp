#pragma once

#include <span>
#include <stdexcept>

#include "crowdauction/auction.hpp"
#include "crowdauction/sos.hpp"
#include "crowdauction/valuefn.hpp"

namespace crowdauction {

/// Naive online comparison mechanism: posts the same uninformed price
/// `theta` to everyone. A user is accepted iff b_i <= theta and V(S) < R and
/// it adds something new; winners are paid theta.
template <ValueOracle F>
OnlineResult run_random_threshold(const F& fn, std::span<const Arrival> stream,
                                  double required, std::int64_t deadline,
                                  Money theta) {
  if (!theta.is_positive()) {
    throw std::invalid_argument("run_random_threshold: theta must be positive");
  }
  OnlineResult result;
  auto& out = result.outcome;
  out.payments.assign(fn.user_count(), Money::zero());
  auto tracker = fn.tracker();

  std::size_t next = 0;
  for (std::int64_t t = 1; t <= deadline; ++t) {
    while (next < stream.size() && stream[next].step < t) ++next;  // malformed
    if (next < stream.size() && stream[next].step == t) {
      const auto& u = stream[next].user;
      Decision d;
      d.clock = t;
      d.user = u.id;
      d.bid = u.bid;
      d.offer = theta;
      if (static_cast<double>(tracker.value()) >= required) {
        d.reason = DecisionReason::stage_service;
      } else if (tracker.marginal(u.id) == 0) {
        d.reason = DecisionReason::zero_marginal;
      } else if (u.bid <= theta) {
        d.accepted = true;
        d.reason = DecisionReason::accepted;
        d.payment = theta;
        d.allocated = tracker.add(u.id);
        out.winners.push_back(u.id);
        out.payments[u.id] = theta;
      } else {
        d.reason = DecisionReason::threshold;
      }
      out.trace.push_back(d);
      ++next;
    }
    result.service_log.push_back({t, required, tracker.value()});
  }
  for (; next < stream.size(); ++next) {
    Decision d;
    d.clock = stream[next].step;
    d.user = stream[next].user.id;
    d.bid = stream[next].user.bid;
    d.reason = DecisionReason::deadline;
    out.trace.push_back(d);
  }
  out.achieved_value = tracker.value();
  if (static_cast<double>(out.achieved_value) < required) {
    out.notes.push_back("service_shortfall");
  }
  detail::seal(out, fn.user_count());
  return result;
}

}  // namespace crowdauction
