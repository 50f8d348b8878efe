#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crowdauction/auction.hpp"
#include "crowdauction/budget_feasible.hpp"
#include "crowdauction/valuefn.hpp"

// Online mechanism for sequential arrivals: multi-stage sampling-accepting
// with doubling stage service R' and horizon T', density-threshold offers,
// and threshold recomputation at every stage boundary.

namespace crowdauction {

/// How much service an accepted user is credited with.
enum class AllocationMode {
  /// Allocate at most floor(R') - V(S) of the user's new tasks, so the
  /// allocated service never exceeds the stage service. Offer and payment
  /// are priced on the allocated part.
  capped,
  /// Credit the full marginal V_i(S). A single acceptance can push V(S)
  /// past R'.
  verbatim,
};

struct SosConfig {
  double required_service = 0;  // R
  std::int64_t deadline = 0;    // T
  double delta = 6;             // frugal blow-up of the stage service
  double nu = 2;                // threshold shrink divisor
  double epsilon = 1;           // initial density threshold
  AllocationMode allocation = AllocationMode::capped;

  void validate() const {
    if (!(required_service > 0)) {
      throw std::invalid_argument("SosConfig: required service must be > 0");
    }
    if (deadline < 1) throw std::invalid_argument("SosConfig: deadline must be >= 1");
    if (!(delta >= 1)) throw std::invalid_argument("SosConfig: delta must be >= 1");
    if (!(nu >= 1)) throw std::invalid_argument("SosConfig: nu must be >= 1");
    if (!(epsilon > 0)) throw std::invalid_argument("SosConfig: epsilon must be > 0");
  }
};

struct DensityThreshold {
  double threshold = 0;         // rho / nu
  Money budget;                 // B'
  std::vector<UserId> cover;    // greedy cover of delta * R'
  bool sample_shortfall = false;
  FeasibleDensity feasible;
  std::uint64_t work = 0;
};

/// Greedily covers delta * R' from the sample, takes the bid sum of that
/// cover as a budget and turns it into a density through the
/// proportional-share routine. If the sample cannot cover delta * R', the
/// budget is the bid sum of the whole sample.
template <ValueOracle F>
DensityThreshold get_density_threshold(const F& fn,
                                       std::span<const DeclaredProfile> sample,
                                       double stage_service, double delta,
                                       double nu) {
  if (sample.empty()) {
    throw std::invalid_argument("get_density_threshold: empty sample");
  }
  if (!(stage_service > 0)) {
    throw std::invalid_argument("get_density_threshold: stage service must be > 0");
  }
  detail::require_positive_bids(sample);
  DensityThreshold out;
  const double target = delta * stage_service;
  auto tracker = fn.tracker();
  Money budget;
  while (static_cast<double>(tracker.value()) < target) {
    const auto best = detail::pick_densest(tracker, sample);
    if (!best) {
      out.sample_shortfall = true;
      break;
    }
    tracker.add(sample[best->index].id);
    out.cover.push_back(sample[best->index].id);
    budget += sample[best->index].bid;
  }
  if (out.sample_shortfall) {
    budget = Money::zero();
    for (const auto& u : sample) budget += u.bid;
  }
  out.budget = budget;
  out.work = tracker.work();

  // Every cover pass makes the densest user its first pick, and that user
  // always passes the share rule under a budget that includes its own bid.
  out.feasible = get_feasible_density(fn, sample, budget);
  out.threshold = out.feasible.density / nu;
  return out;
}

/// A user arriving at a given step.
struct Arrival {
  std::int64_t step = 0;
  DeclaredProfile user;
};

struct StageRecord {
  int stage = 0;             // boundary index, 0-based
  std::int64_t t = 0;        // boundary step
  double stage_service = 0;  // R' in force during the stage just closed
  double threshold = 0;      // rho* installed for the next stage
  std::size_t sample_size = 0;
  std::size_t selected = 0;
  Value value = 0;
  Money spend;
  bool sample_shortfall = false;
  bool kept_previous = false;  // no usable sample, threshold unchanged
  std::uint64_t work = 0;      // elementary marginal-evaluation steps
};

/// Allocated service and stage service in force after step t.
struct ServiceSample {
  std::int64_t t = 0;
  double stage_service = 0;
  Value value = 0;
};

struct StageState {
  std::int64_t clock = 1;
  double stage_horizon = 0;  // T'
  double stage_service = 0;  // R'
  double threshold = 0;      // rho*
  std::vector<DeclaredProfile> sample;  // S'
  std::vector<UserId> selected;         // S
  Value value = 0;
  Money spend;
  int stages_closed = 0;
};

/// The online state machine. Feed it one arrival at a time with
/// `process_arrival`, then call `end_step` to close the clock tick.
template <ValueOracle F>
class SosAuction {
 public:
  using ThresholdHook =
      std::function<DensityThreshold(std::span<const DeclaredProfile>, double)>;

  SosAuction(const F& fn, SosConfig config)
      : fn_(&fn), config_(config), tracker_(fn.tracker()) {
    config_.validate();
    const int k = static_cast<int>(std::floor(std::log2(
        static_cast<double>(config_.deadline))));
    const double scale = std::ldexp(1.0, k);
    state_.clock = 1;
    state_.stage_horizon = static_cast<double>(config_.deadline) / scale;
    state_.stage_service = config_.required_service / scale;
    state_.threshold = config_.epsilon;
    payments_.assign(fn.user_count(), Money::zero());
  }

  void set_threshold_hook(ThresholdHook hook) { hook_ = std::move(hook); }

  const StageState& state() const { return state_; }
  const SosConfig& config() const { return config_; }
  bool finished() const { return state_.clock > config_.deadline; }

  /// Offer the mechanism would make to `user` right now, and the service it
  /// would be credited with. Depends only on the state and the user's task
  /// set, never on a bid.
  std::pair<Money, Value> quote(UserId user) const {
    const Value gain = tracker_.marginal(user);
    Value alloc = gain;
    if (config_.allocation == AllocationMode::capped) {
      const Value room = static_cast<Value>(std::floor(state_.stage_service)) -
                         tracker_.value();
      alloc = std::max<Value>(0, std::min(gain, room));
    }
    const Money offer = alloc > 0 ? Money::from_double(static_cast<double>(alloc) /
                                                       state_.threshold)
                                  : Money::zero();
    return {offer, alloc};
  }

  /// Irrevocable decision for a user arriving at the current clock.
  Decision process_arrival(const DeclaredProfile& user) {
    if (!user.bid.is_positive()) {
      throw std::invalid_argument("SosAuction: bid must be positive");
    }
    Decision d;
    d.clock = state_.clock;
    d.user = user.id;
    d.bid = user.bid;
    d.threshold = state_.threshold;
    if (finished()) {
      d.reason = DecisionReason::deadline;
      decisions_.push_back(d);
      return d;
    }

    const auto [offer, alloc] = quote(user.id);
    d.offer = offer;
    const bool room = static_cast<double>(tracker_.value()) < state_.stage_service;
    if (!room) {
      d.reason = DecisionReason::stage_service;
    } else if (tracker_.marginal(user.id) == 0) {
      d.reason = DecisionReason::zero_marginal;
    } else if (alloc == 0) {
      d.reason = DecisionReason::stage_service;
    } else if (user.bid <= offer) {
      d.accepted = true;
      d.reason = DecisionReason::accepted;
      d.payment = offer;
      if constexpr (PartialAllocationTracker<typename F::Tracker>) {
        d.allocated = tracker_.add_partial(user.id, alloc);
      } else {
        if (config_.allocation == AllocationMode::capped &&
            alloc != tracker_.marginal(user.id)) {
          throw std::logic_error(
              "capped allocation needs a partially allocatable value function");
        }
        d.allocated = tracker_.add(user.id);
      }
      payments_[user.id] = offer;
      state_.selected.push_back(user.id);
      state_.value = tracker_.value();
      state_.spend += offer;
    } else {
      d.reason = DecisionReason::threshold;
    }
    state_.sample.push_back(user);
    decisions_.push_back(d);
    return d;
  }

  bool at_stage_boundary() const {
    return state_.clock == static_cast<std::int64_t>(std::floor(state_.stage_horizon));
  }

  /// Recomputes the threshold on the whole sample and doubles R' and T'.
  StageRecord advance_stage() {
    StageRecord rec;
    rec.stage = state_.stages_closed;
    rec.t = state_.clock;
    rec.stage_service = state_.stage_service;
    rec.sample_size = state_.sample.size();
    rec.selected = state_.selected.size();
    rec.value = state_.value;
    rec.spend = state_.spend;

    if (state_.sample.empty()) {
      rec.kept_previous = true;
    } else {
      const DensityThreshold dt =
          hook_ ? hook_(state_.sample, state_.stage_service)
                : get_density_threshold(*fn_, state_.sample, state_.stage_service,
                                        config_.delta, config_.nu);
      rec.sample_shortfall = dt.sample_shortfall;
      rec.work = dt.work;
      if (dt.threshold > 0 && std::isfinite(dt.threshold)) {
        state_.threshold = dt.threshold;
      } else {
        rec.kept_previous = true;
      }
    }
    rec.threshold = state_.threshold;
    state_.stage_service *= 2;
    state_.stage_horizon *= 2;
    ++state_.stages_closed;
    stages_.push_back(rec);
    return rec;
  }

  /// Closes the current step: records the service sample, runs a stage
  /// boundary if one falls on this step, and advances the clock.
  void end_step() {
    if (finished()) return;
    service_log_.push_back({state_.clock, state_.stage_service, tracker_.value()});
    if (at_stage_boundary()) advance_stage();
    ++state_.clock;
  }

  const std::vector<Decision>& decisions() const { return decisions_; }
  const std::vector<StageRecord>& stages() const { return stages_; }
  const std::vector<ServiceSample>& service_log() const { return service_log_; }

  AuctionOutcome outcome() const {
    AuctionOutcome out;
    out.winners = state_.selected;
    out.payments = payments_;
    out.achieved_value = tracker_.value();
    out.trace = decisions_;
    if (static_cast<double>(out.achieved_value) < config_.required_service) {
      out.notes.push_back("service_shortfall");
    }
    for (const auto& s : stages_) {
      if (s.sample_shortfall) {
        out.notes.push_back("sample_shortfall:t=" + std::to_string(s.t));
      }
    }
    detail::seal(out, fn_->user_count());
    return out;
  }

 private:
  const F* fn_;
  SosConfig config_;
  typename F::Tracker tracker_;
  StageState state_;
  std::vector<Money> payments_;
  std::vector<Decision> decisions_;
  std::vector<StageRecord> stages_;
  std::vector<ServiceSample> service_log_;
  ThresholdHook hook_;
};

/// Outcome of an online run plus its stage and per-step service logs.
struct OnlineResult {
  AuctionOutcome outcome;
  std::vector<StageRecord> stages;
  std::vector<ServiceSample> service_log;
};
using SosResult = OnlineResult;

/// Runs the online mechanism over a time-ordered stream with at most one
/// arrival per step. Arrivals after the deadline are rejected.
template <ValueOracle F>
SosResult run_sos(const F& fn, std::span<const Arrival> stream,
                  const SosConfig& config) {
  SosAuction<F> auction(fn, config);
  std::size_t next = 0;
  std::int64_t last_step = 0;
  for (const auto& a : stream) {
    if (a.step < 1) throw std::invalid_argument("run_sos: arrival step must be >= 1");
    if (a.step <= last_step) {
      throw std::invalid_argument(
          "run_sos: stream must be strictly time-ordered, one arrival per step");
    }
    last_step = a.step;
  }
  for (std::int64_t t = 1; t <= config.deadline; ++t) {
    if (next < stream.size() && stream[next].step == t) {
      auction.process_arrival(stream[next].user);
      ++next;
    }
    auction.end_step();
  }
  for (; next < stream.size(); ++next) auction.process_arrival(stream[next].user);

  SosResult result;
  result.outcome = auction.outcome();
  // Late arrivals are logged at their own step.
  for (auto& d : result.outcome.trace) {
    if (d.reason == DecisionReason::deadline) {
      for (const auto& a : stream) {
        if (a.user.id == d.user) d.clock = a.step;
      }
    }
  }
  result.stages = auction.stages();
  result.service_log = auction.service_log();
  return result;
}

}  // namespace crowdauction
