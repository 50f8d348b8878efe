#include "mechanism.hpp"

#include <algorithm>
#include <stdexcept>

namespace crowdauction::app {

std::string_view to_string(Mechanism m) {
  switch (m) {
    case Mechanism::oms: return "oms";
    case Mechanism::sos: return "sos";
    case Mechanism::baseline: return "baseline";
  }
  return "?";
}

Mechanism mechanism_from_string(std::string_view s) {
  if (s == "oms") return Mechanism::oms;
  if (s == "sos") return Mechanism::sos;
  if (s == "baseline") return Mechanism::baseline;
  throw std::invalid_argument("unknown mechanism '" + std::string(s) +
                              "' (expected oms, sos or baseline)");
}

std::string_view to_string(WinnerRule r) {
  return r == WinnerRule::phase1_service ? "phase1_service" : "phase2_budget";
}

WinnerRule winner_rule_from_string(std::string_view s) {
  if (s == "phase1_service") return WinnerRule::phase1_service;
  if (s == "phase2_budget") return WinnerRule::phase2_budget;
  throw std::invalid_argument("unknown winner_rule '" + std::string(s) +
                              "' (expected phase1_service or phase2_budget)");
}

std::string_view to_string(PaymentRule r) {
  return r == PaymentRule::literal ? "literal" : "bisection_critical";
}

PaymentRule payment_rule_from_string(std::string_view s) {
  if (s == "literal") return PaymentRule::literal;
  if (s == "bisection_critical") return PaymentRule::bisection_critical;
  throw std::invalid_argument("unknown payment_rule '" + std::string(s) +
                              "' (expected literal or bisection_critical)");
}

std::string_view to_string(AllocationMode m) {
  return m == AllocationMode::capped ? "capped" : "verbatim";
}

AllocationMode allocation_mode_from_string(std::string_view s) {
  if (s == "capped") return AllocationMode::capped;
  if (s == "verbatim") return AllocationMode::verbatim;
  throw std::invalid_argument("unknown allocation '" + std::string(s) +
                              "' (expected capped or verbatim)");
}

SosConfig RunSpec::sos_config(std::int64_t deadline) const {
  SosConfig c;
  c.required_service = required_service;
  c.deadline = deadline;
  c.delta = delta;
  c.nu = nu;
  c.epsilon = epsilon;
  c.allocation = allocation;
  return c;
}

OmsConfig RunSpec::oms_config() const {
  OmsConfig c;
  c.required_service = required_service;
  c.winner_rule = winner_rule;
  c.payment_rule = payment_rule;
  c.bid_ceiling = bid_ceiling;
  return c;
}

RunResult execute(const RunSpec& spec, const Population& population,
                  const CoverageValueFn& fn, std::span<const Money> bids) {
  RunResult r;
  switch (spec.mechanism) {
    case Mechanism::sos: {
      auto res = run_sos(fn, population.stream(bids), spec.sos_config(population.deadline));
      r.outcome = std::move(res.outcome);
      r.stages = std::move(res.stages);
      r.service_log = std::move(res.service_log);
      break;
    }
    case Mechanism::baseline: {
      auto res = run_random_threshold(fn, population.stream(bids), spec.required_service,
                                      population.deadline, spec.theta);
      r.outcome = std::move(res.outcome);
      r.service_log = std::move(res.service_log);
      break;
    }
    case Mechanism::oms: {
      std::vector<DeclaredProfile> users;
      users.reserve(population.users.size());
      for (const auto& u : population.users) users.push_back({u.id, bids[u.id]});
      try {
        r.outcome = run_oms(fn, users, spec.oms_config());
      } catch (const ServiceInfeasible&) {
        r.service_infeasible = true;
        r.outcome = AuctionOutcome{};
        r.outcome.payments.assign(fn.user_count(), Money::zero());
        r.outcome.notes.push_back("service_infeasible");
        std::sort(users.begin(), users.end(),
                  [](const auto& a, const auto& b) { return a.id < b.id; });
        for (const auto& u : users) {
          Decision d;
          d.clock = static_cast<std::int64_t>(r.outcome.trace.size() + 1);
          d.user = u.id;
          d.bid = u.bid;
          d.reason = DecisionReason::not_selected;
          r.outcome.trace.push_back(d);
        }
      }
      break;
    }
  }
  return r;
}

}  // namespace crowdauction::app
