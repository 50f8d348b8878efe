#include <gtest/gtest.h>

#include "crowdauction/baseline.hpp"
#include "crowdauction/scenario.hpp"
#include "crowdauction/verify.hpp"

namespace crowdauction {
namespace {

TEST(Baseline, PostsOnePrice) {
  const CoverageValueFn fn(TaskUniverse::abstract(4), {{0, 1}, {1}, {2}, {3}});
  const std::vector<Arrival> stream = {{1, {0, Money::from_double(3)}},
                                       {2, {1, Money::from_double(1)}},
                                       {3, {2, Money::from_double(9)}},
                                       {4, {3, Money::from_double(5)}}};
  const auto r = run_random_threshold(fn, stream, 10, 5, Money::from_double(5));
  const auto& tr = r.outcome.trace;
  ASSERT_EQ(tr.size(), 4u);
  EXPECT_TRUE(tr[0].accepted);
  EXPECT_EQ(tr[1].reason, DecisionReason::zero_marginal);
  EXPECT_EQ(tr[2].reason, DecisionReason::threshold);
  EXPECT_TRUE(tr[3].accepted);  // bid equal to the price
  EXPECT_EQ(r.outcome.winners, (std::vector<UserId>{0, 3}));
  EXPECT_EQ(r.outcome.total_payment, Money::from_double(10));
  EXPECT_EQ(r.outcome.achieved_value, 3);
  EXPECT_EQ(r.service_log.size(), 5u);
}

TEST(Baseline, StopsAtRequiredService) {
  const CoverageValueFn fn(TaskUniverse::abstract(3), {{0, 1}, {2}});
  const std::vector<Arrival> stream = {{1, {0, Money::from_double(1)}},
                                       {2, {1, Money::from_double(1)}}};
  const auto r = run_random_threshold(fn, stream, 2, 2, Money::from_double(5));
  EXPECT_EQ(r.outcome.trace[1].reason, DecisionReason::stage_service);
  EXPECT_FALSE(r.outcome.has_note("service_shortfall"));
}

TEST(Baseline, LateArrivalRejected) {
  const CoverageValueFn fn(TaskUniverse::abstract(1), {{0}});
  const std::vector<Arrival> stream = {{3, {0, Money::from_double(1)}}};
  const auto r = run_random_threshold(fn, stream, 1, 2, Money::from_double(5));
  EXPECT_EQ(r.outcome.trace[0].reason, DecisionReason::deadline);
  EXPECT_TRUE(r.outcome.has_note("service_shortfall"));
}

TEST(Baseline, NonPositivePriceRejected) {
  const CoverageValueFn fn(TaskUniverse::abstract(1), {{0}});
  EXPECT_THROW(run_random_threshold(fn, std::vector<Arrival>{}, 1, 1, Money::zero()),
               std::invalid_argument);
}

TEST(Baseline, IndividuallyRationalAndBidIndependent) {
  ScenarioConfig sc;
  sc.region_width = sc.region_height = 60;
  sc.task_count = 100;
  sc.sensing_radius = 9;
  sc.deadline = 80;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto pop = gen_users_iid(sc, seed);
    const auto fn = pop.value_function();
    const auto costs = pop.true_costs();
    const MechanismRun run = [&](const BidVector& bids) {
      return run_random_threshold(fn, pop.stream(bids), 60, 80, Money::from_double(5.5))
          .outcome;
    };
    EXPECT_TRUE(check_individual_rationality(run(costs), costs).passed());
    for (const auto& u : pop.users) {
      const std::vector<Money> alt = {Money::from_double(0.5), Money::from_double(50)};
      EXPECT_TRUE(check_bid_independence(run, costs, u.id, alt));
    }
  }
}

}  // namespace
}  // namespace crowdauction

namespace crowdauction {
namespace {

TEST(Baseline, PriceBelowEveryCostAcceptsNobody) {
  const CoverageValueFn fn(TaskUniverse::abstract(3), {{0}, {1}, {2}});
  const std::vector<Arrival> stream = {{1, {0, Money::from_double(2)}},
                                       {2, {1, Money::from_double(3)}},
                                       {3, {2, Money::from_double(4)}}};
  const auto r = run_random_threshold(fn, stream, 3, 3, Money::from_double(1.5));
  EXPECT_TRUE(r.outcome.winners.empty());
  EXPECT_EQ(r.outcome.achieved_value, 0);
}

TEST(Baseline, PriceAboveEveryCostReachesRAndPaysUniformly) {
  ScenarioConfig sc;
  sc.region_width = sc.region_height = 40;
  sc.task_count = 60;
  sc.sensing_radius = 8;
  sc.deadline = 200;
  sc.arrival_rate = 0.9;
  const auto pop = gen_users_iid(sc, 4);
  const auto fn = pop.value_function();
  const Money theta = Money::from_double(10);
  const auto r = run_random_threshold(fn, pop.stream(), 30, sc.deadline, theta);
  EXPECT_GE(r.outcome.achieved_value, 30);
  for (UserId w : r.outcome.winners) EXPECT_EQ(r.outcome.payment(w), theta);
  EXPECT_EQ(r.outcome.total_payment.micros(),
            theta.micros() * static_cast<std::int64_t>(r.outcome.winners.size()));
}

}  // namespace
}  // namespace crowdauction
