#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "crowdauction/crowdauction.hpp"

namespace crowdauction::app {

enum class Mechanism { oms, sos, baseline };

std::string_view to_string(Mechanism m);
Mechanism mechanism_from_string(std::string_view s);

std::string_view to_string(WinnerRule r);
WinnerRule winner_rule_from_string(std::string_view s);
std::string_view to_string(PaymentRule r);
PaymentRule payment_rule_from_string(std::string_view s);
std::string_view to_string(AllocationMode m);
AllocationMode allocation_mode_from_string(std::string_view s);

/// Everything needed to rerun one mechanism on one population.
struct RunSpec {
  Mechanism mechanism = Mechanism::sos;
  double required_service = 0;
  // sos
  double delta = 6;
  double nu = 2;
  double epsilon = 1;
  AllocationMode allocation = AllocationMode::capped;
  // oms
  WinnerRule winner_rule = WinnerRule::phase1_service;
  PaymentRule payment_rule = PaymentRule::bisection_critical;
  Money bid_ceiling = Money::from_double(100);
  // baseline
  Money theta = Money::from_double(5.5);

  SosConfig sos_config(std::int64_t deadline) const;
  OmsConfig oms_config() const;
};

struct RunResult {
  AuctionOutcome outcome;
  std::vector<StageRecord> stages;
  std::vector<ServiceSample> service_log;
  bool service_infeasible = false;  // offline mechanism could not reach R
};

/// Runs `spec` on `population` with the given bids (indexed by user id).
RunResult execute(const RunSpec& spec, const Population& population,
                  const CoverageValueFn& fn, std::span<const Money> bids);

}  // namespace crowdauction::app
