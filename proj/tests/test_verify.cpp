#include <gtest/gtest.h>

#include <random>

#include "crowdauction/oms.hpp"
#include "crowdauction/scenario.hpp"
#include "crowdauction/verify.hpp"
#include "oracles.hpp"

namespace crowdauction {
namespace {

using testing::hand_bids;
using testing::hand_instance;

MechanismRun oms_run(const CoverageValueFn& fn, OmsConfig cfg) {
  return [&fn, cfg](const BidVector& bids) {
    std::vector<DeclaredProfile> users;
    for (UserId i = 0; i < bids.size(); ++i) users.push_back({i, bids[i]});
    return run_oms(fn, users, cfg);
  };
}

BidVector hand_costs() {
  BidVector c;
  for (const auto& d : hand_bids()) c.push_back(d.bid);
  return c;
}

TEST(CriticalBidOracle, HandInstance) {
  const auto fn = hand_instance();
  OmsConfig cfg;
  cfg.required_service = 3;
  const auto run = oms_run(fn, cfg);
  const auto c = critical_bid_oracle(run, hand_costs(), 0, Money::from_double(100));
  EXPECT_EQ(c.bid, Money::from_double(4));
  EXPECT_FALSE(c.never_wins);
  EXPECT_FALSE(c.unbounded);
}

TEST(CriticalBidOracle, UnboundedWhenIndispensable) {
  const auto fn = hand_instance();
  OmsConfig cfg;
  cfg.required_service = 4;
  cfg.bid_ceiling = Money::from_double(10);
  const auto c = critical_bid_oracle(oms_run(fn, cfg), hand_costs(), 2, Money::from_double(10));
  EXPECT_TRUE(c.unbounded);
  EXPECT_EQ(c.bid, Money::from_double(10));
}

TEST(CriticalBidOracle, NeverWinsWhenDominated) {
  // u1 covers a strict subset of u0's tasks; one user suffices.
  const CoverageValueFn fn(TaskUniverse::abstract(2), {{0, 1}, {0}});
  OmsConfig cfg;
  cfg.required_service = 2;
  const BidVector costs = {Money::from_double(0.000001), Money::from_double(1)};
  const auto c = critical_bid_oracle(oms_run(fn, cfg), costs, 1, Money::from_double(10));
  EXPECT_TRUE(c.never_wins);
}

TEST(CriticalBidOracle, NonMonotoneSelectionDetected) {
  // wins only at high bids
  const MechanismRun run = [](const BidVector& bids) {
    AuctionOutcome o;
    o.payments.assign(1, Money::zero());
    if (bids[0] > Money::from_double(5)) o.winners.push_back(0);
    return o;
  };
  EXPECT_THROW(critical_bid_oracle(run, {Money::from_double(1)}, 0, Money::from_double(10)),
               NonMonotoneSelection);
}

TEST(DeviationGrid, ContainsCostAndCriticalNeighbours) {
  const Money c = Money::from_double(2);
  const auto grid = deviation_grid(c, Money::from_double(4));
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
  EXPECT_NE(std::find(grid.begin(), grid.end(), c), grid.end());
  EXPECT_NE(std::find(grid.begin(), grid.end(), Money::from_micros(3'999'999)), grid.end());
  EXPECT_NE(std::find(grid.begin(), grid.end(), Money::from_micros(4'000'001)), grid.end());
  EXPECT_EQ(grid.front(), Money::from_double(0.2));
  EXPECT_EQ(grid.back(), Money::from_double(6));
}

TEST(Truthfulness, LiteralRuleViolatedOnHandInstance) {
  const auto fn = hand_instance();
  OmsConfig cfg;
  cfg.required_service = 3;
  cfg.payment_rule = PaymentRule::literal;
  const auto run = oms_run(fn, cfg);
  const auto costs = hand_costs();
  const auto grid = deviation_grid(costs[0], std::nullopt);
  const auto rep = check_truthfulness(run, costs, 0, grid);
  EXPECT_FALSE(rep.passed());
  EXPECT_GT(rep.best_deviation, Money::from_double(4));  // losing beats winning at a loss
  const auto ir = check_individual_rationality(run(costs), costs);
  ASSERT_EQ(ir.violations.size(), 1u);
  EXPECT_EQ(ir.violations[0].user, 0u);
  EXPECT_EQ(ir.violations[0].payment, Money::from_double(1));
}

TEST(Truthfulness, CriticalRuleHoldsOnHandInstance) {
  const auto fn = hand_instance();
  OmsConfig cfg;
  cfg.required_service = 3;
  const auto run = oms_run(fn, cfg);
  const auto costs = hand_costs();
  for (UserId u = 0; u < 3; ++u) {
    const auto crit = critical_bid_oracle(run, costs, u, cfg.bid_ceiling);
    const auto grid = deviation_grid(costs[u], crit.bid);
    EXPECT_TRUE(check_truthfulness(run, costs, u, grid).passed()) << u;
  }
}

TEST(Truthfulness, GridWithoutCostRejected) {
  const auto fn = hand_instance();
  OmsConfig cfg;
  cfg.required_service = 3;
  const std::vector<Money> grid = {Money::from_double(7)};
  EXPECT_THROW(check_truthfulness(oms_run(fn, cfg), hand_costs(), 0, grid),
               std::invalid_argument);
}

TEST(ServiceFeasibility, FlagsOvershootAndShortfall) {
  const std::vector<ServiceSample> log = {{1, 1, 1}, {2, 2, 3}, {3, 4, 4}};
  const auto rep = check_service_feasibility(log, 4);
  ASSERT_EQ(rep.violations.size(), 1u);
  EXPECT_EQ(rep.violations[0].t, 2);
  EXPECT_TRUE(rep.completed);
  AuctionOutcome o;
  o.achieved_value = 2;
  EXPECT_FALSE(check_service_feasibility(o, 3).passed());
}

TEST(MinCostCover, MatchesEnumeration) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    const std::size_t m = 1 + rng() % 10;
    testing::TaskSets sets(n);
    std::vector<double> costs(n);
    std::vector<Money> money(n);
    for (std::size_t u = 0; u < n; ++u) {
      for (TaskId t = 0; t < m; ++t) {
        if (rng() % 3 == 0) sets[u].push_back(t);
      }
      money[u] = Money::from_micros(1 + static_cast<std::int64_t>(rng() % 10'000'000));
      costs[u] = money[u].to_double();
    }
    const CoverageValueFn fn(TaskUniverse::abstract(m), sets);
    std::vector<UserId> ids(n);
    std::iota(ids.begin(), ids.end(), UserId{0});
    const double R = static_cast<double>(1 + rng() % m);
    const auto got = min_cost_cover_bruteforce(fn, ids, money, R);
    const double want = testing::enumerate_min_cost(sets, costs, R);
    if (std::isinf(want)) {
      EXPECT_FALSE(got.feasible);
    } else {
      ASSERT_TRUE(got.feasible);
      EXPECT_NEAR(got.cost.to_double(), want, 1e-6);
      std::vector<UserId> chosen = got.users;
      EXPECT_GE(static_cast<double>(testing::union_size(sets, chosen)), R);
      // greedy cover never beats the optimum
      std::vector<DeclaredProfile> truthful;
      for (UserId i : ids) truthful.push_back({i, money[i]});
      EXPECT_GE(stage_budget(select_service(fn, truthful, R)), got.cost);
    }
  }
}

TEST(MinCostCover, HandInstance) {
  const auto fn = hand_instance();
  const std::vector<UserId> ids = {0, 1, 2};
  const auto costs = hand_costs();
  const auto r3 = min_cost_cover_bruteforce(fn, ids, costs, 3);
  ASSERT_TRUE(r3.feasible);
  EXPECT_EQ(r3.cost, Money::from_double(3));
  EXPECT_EQ(r3.users, (std::vector<UserId>{0, 1}));
  const auto r0 = min_cost_cover_bruteforce(fn, ids, costs, 0);
  EXPECT_TRUE(r0.feasible);
  EXPECT_EQ(r0.cost, Money::zero());
  EXPECT_FALSE(min_cost_cover_bruteforce(fn, ids, costs, 5).feasible);
}

TEST(MinCostCover, TooManyUsersRejected) {
  const CoverageValueFn fn(TaskUniverse::abstract(1), std::vector<std::vector<TaskId>>(21));
  std::vector<UserId> ids(21);
  std::iota(ids.begin(), ids.end(), UserId{0});
  const std::vector<Money> costs(21, Money::from_double(1));
  EXPECT_THROW(min_cost_cover_bruteforce(fn, ids, costs, 1), std::invalid_argument);
}

TEST(Frugality, SingletonAndQualifiers) {
  const CoverageValueFn fn(TaskUniverse::abstract(2), {{0, 1}});
  AuctionOutcome o;
  o.winners = {0};
  o.payments = {Money::from_double(3)};
  o.total_payment = Money::from_double(3);
  o.achieved_value = 2;
  const std::vector<Money> costs = {Money::from_double(2)};
  const auto rep = measure_frugality(o, fn, costs, 2);
  EXPECT_TRUE(rep.reference_exact);
  EXPECT_DOUBLE_EQ(rep.ratio, 1.5);
  EXPECT_EQ(rep.qualifier, "");
  o.achieved_value = 1;
  EXPECT_EQ(measure_frugality(o, fn, costs, 2).qualifier, "incomplete");
  EXPECT_EQ(measure_frugality(o, fn, costs, 3).qualifier, "infeasible-reference");
}

TEST(Summary, Basics) {
  const auto s = summarize({1, 2, 3, 4, std::numeric_limits<double>::quiet_NaN()});
  EXPECT_EQ(s.count, 4u);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.stddev, std::sqrt(5.0 / 3.0), 1e-12);
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_DOUBLE_EQ(s.min, 1);
  EXPECT_DOUBLE_EQ(s.max, 4);
  EXPECT_EQ(summarize({}).count, 0u);
}

}  // namespace
}  // namespace crowdauction
