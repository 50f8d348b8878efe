#include <gtest/gtest.h>

#include <cmath>

#include "crowdauction/scenario.hpp"
#include "crowdauction/sos.hpp"
#include "crowdauction/verify.hpp"

namespace crowdauction {
namespace {

CoverageValueFn users_with_tasks(std::vector<std::size_t> sizes) {
  std::vector<std::vector<TaskId>> sets;
  TaskId next = 0;
  for (auto s : sizes) {
    std::vector<TaskId> tasks;
    for (std::size_t k = 0; k < s; ++k) tasks.push_back(next++);
    sets.push_back(tasks);
  }
  return CoverageValueFn(TaskUniverse::abstract(next), sets);
}

SosConfig config(double R, std::int64_t T, double epsilon = 1) {
  SosConfig c;
  c.required_service = R;
  c.deadline = T;
  c.epsilon = epsilon;
  return c;
}

TEST(ProcessArrival, AcceptsAtOfferAndPaysIt) {
  const auto fn = users_with_tasks({6});
  SosAuction auction(fn, config(100, 1, 2));
  const auto d = auction.process_arrival({0, Money::from_double(3)});
  EXPECT_TRUE(d.accepted);
  EXPECT_EQ(d.payment, Money::from_double(3));
  EXPECT_EQ(auction.state().sample.size(), 1u);
}

TEST(ProcessArrival, RejectsJustAboveOffer) {
  const auto fn = users_with_tasks({6});
  SosAuction auction(fn, config(100, 1, 2));
  const auto d = auction.process_arrival({0, Money::from_double(3.01)});
  EXPECT_FALSE(d.accepted);
  EXPECT_EQ(d.reason, DecisionReason::threshold);
  EXPECT_EQ(d.payment, Money::zero());
  EXPECT_EQ(d.offer, Money::from_double(3));
  EXPECT_EQ(auction.state().sample.size(), 1u);  // joins the sample anyway
}

TEST(ProcessArrival, StageServiceExhaustedRejectsAnyBid) {
  const auto fn = users_with_tasks({6, 6});
  SosAuction auction(fn, config(4, 2));  // R' = 2 in the first stage
  ASSERT_TRUE(auction.process_arrival({0, Money::from_double(0.5)}).accepted);
  EXPECT_EQ(auction.state().value, 2);
  const auto d = auction.process_arrival({1, Money::from_double(0.000001)});
  EXPECT_FALSE(d.accepted);
  EXPECT_EQ(d.reason, DecisionReason::stage_service);
}

TEST(ProcessArrival, ZeroMarginalNeverAccepted) {
  const CoverageValueFn fn(TaskUniverse::abstract(2), {{0, 1}, {0}});
  SosAuction auction(fn, config(100, 1));
  ASSERT_TRUE(auction.process_arrival({0, Money::from_double(1)}).accepted);
  const auto d = auction.process_arrival({1, Money::from_double(0.000001)});
  EXPECT_EQ(d.reason, DecisionReason::zero_marginal);
  EXPECT_EQ(d.offer, Money::zero());
}

TEST(ProcessArrival, AfterDeadlineRejected) {
  const auto fn = users_with_tasks({2});
  const std::vector<Arrival> stream = {{5, {0, Money::from_double(1)}}};
  const auto r = run_sos(fn, stream, config(2, 4));
  ASSERT_EQ(r.outcome.trace.size(), 1u);
  EXPECT_EQ(r.outcome.trace[0].reason, DecisionReason::deadline);
  EXPECT_EQ(r.outcome.trace[0].clock, 5);
}

TEST(AdvanceStage, PowerOfTwoDeadline) {
  const auto fn = users_with_tasks({});
  const auto r = run_sos(fn, std::vector<Arrival>{}, config(8, 4));
  ASSERT_EQ(r.stages.size(), 3u);
  const std::int64_t t[] = {1, 2, 4};
  const double rp[] = {2, 4, 8};
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(r.stages[k].t, t[k]);
    EXPECT_DOUBLE_EQ(r.stages[k].stage_service, rp[k]);
    EXPECT_TRUE(r.stages[k].kept_previous);  // empty sample
    EXPECT_DOUBLE_EQ(r.stages[k].threshold, 1.0);
  }
}

TEST(AdvanceStage, Deadline1800Boundaries) {
  // T' starts at 1800 / 1024 = 1.7578125 and doubles; boundaries are floor(T').
  std::vector<std::int64_t> expected;
  for (double tp = 1800.0 / 1024.0; tp <= 1800.0; tp *= 2) {
    expected.push_back(static_cast<std::int64_t>(std::floor(tp)));
  }
  ASSERT_EQ(expected, (std::vector<std::int64_t>{1, 3, 7, 14, 28, 56, 112, 225, 450, 900, 1800}));
  const auto fn = users_with_tasks({});
  const auto r = run_sos(fn, std::vector<Arrival>{}, config(2000, 1800));
  std::vector<std::int64_t> got;
  for (const auto& s : r.stages) got.push_back(s.t);
  EXPECT_EQ(got, expected);
  EXPECT_DOUBLE_EQ(r.stages.front().stage_service, 2000.0 / 1024.0);
  EXPECT_DOUBLE_EQ(r.stages.back().stage_service, 2000.0);
}

TEST(DensityThreshold, HandInstance) {
  const CoverageValueFn fn(TaskUniverse::abstract(4), {{0, 1}, {1, 2}, {3}});
  const std::vector<DeclaredProfile> sample = {
      {0, Money::from_double(2)}, {1, Money::from_double(3)}, {2, Money::from_double(4)}};
  // cover of 1.5 * 2 = 3: a then b, B' = 5; feasible density 2/5; / 2
  const auto r = get_density_threshold(fn, sample, 2, 1.5, 2);
  EXPECT_EQ(r.cover, (std::vector<UserId>{0, 1}));
  EXPECT_EQ(r.budget, Money::from_double(5));
  EXPECT_FALSE(r.sample_shortfall);
  EXPECT_DOUBLE_EQ(r.feasible.density, 0.4);
  EXPECT_DOUBLE_EQ(r.threshold, 0.2);
}

TEST(DensityThreshold, Singleton) {
  const CoverageValueFn fn(TaskUniverse::abstract(2), {{0, 1}});
  const auto r = get_density_threshold(
      fn, std::vector<DeclaredProfile>{{0, Money::from_double(1)}}, 1, 1, 1);
  EXPECT_EQ(r.budget, Money::from_double(1));
  EXPECT_DOUBLE_EQ(r.threshold, 2.0);
}

TEST(DensityThreshold, LargerNuShrinksThreshold) {
  const CoverageValueFn fn(TaskUniverse::abstract(4), {{0, 1}, {1, 2}, {3}});
  const std::vector<DeclaredProfile> sample = {
      {0, Money::from_double(2)}, {1, Money::from_double(3)}, {2, Money::from_double(4)}};
  double prev = std::numeric_limits<double>::infinity();
  for (double nu : {1.0, 2.0, 10.0, 1000.0}) {
    const double th = get_density_threshold(fn, sample, 2, 1.5, nu).threshold;
    EXPECT_LT(th, prev);
    prev = th;
  }
}

TEST(DensityThreshold, SampleShortfallUsesWholeSampleBudget) {
  const CoverageValueFn fn(TaskUniverse::abstract(4), {{0, 1}, {1, 2}, {3}});
  const std::vector<DeclaredProfile> sample = {
      {0, Money::from_double(2)}, {1, Money::from_double(3)}, {2, Money::from_double(4)}};
  const auto r = get_density_threshold(fn, sample, 10, 2, 2);
  EXPECT_TRUE(r.sample_shortfall);
  EXPECT_EQ(r.budget, Money::from_double(9));
}

TEST(DensityThreshold, EmptySampleRejected) {
  const CoverageValueFn fn(TaskUniverse::abstract(1), {{0}});
  EXPECT_THROW(get_density_threshold(fn, std::vector<DeclaredProfile>{}, 1, 1, 1),
               std::invalid_argument);
}

// T=4, R=4, delta=2, nu=2, eps=1: one user with two tasks bidding 1 at t=1.
TEST(RunSos, HandTraceVerbatim) {
  const auto fn = users_with_tasks({2});
  SosConfig c = config(4, 4);
  c.delta = 2;
  c.nu = 2;
  c.allocation = AllocationMode::verbatim;
  const std::vector<Arrival> stream = {{1, {0, Money::from_double(1)}}};
  const auto r = run_sos(fn, stream, c);
  ASSERT_EQ(r.outcome.trace.size(), 1u);
  EXPECT_TRUE(r.outcome.trace[0].accepted);
  EXPECT_EQ(r.outcome.payment(0), Money::from_double(2));
  ASSERT_FALSE(r.stages.empty());
  EXPECT_EQ(r.stages[0].t, 1);
  EXPECT_DOUBLE_EQ(r.stages[0].threshold, 1.0);  // rho = 2/1, / nu
  EXPECT_DOUBLE_EQ(r.stages[1].stage_service, 2.0);
  // verbatim crediting overshoots R' = 1 at t = 1
  EXPECT_EQ(r.service_log[0].value, 2);
  EXPECT_DOUBLE_EQ(r.service_log[0].stage_service, 1.0);
}

TEST(RunSos, HandTraceCapped) {
  const auto fn = users_with_tasks({2});
  SosConfig c = config(4, 4);
  c.delta = 2;
  c.nu = 2;
  const std::vector<Arrival> stream = {{1, {0, Money::from_double(1)}}};
  const auto r = run_sos(fn, stream, c);
  EXPECT_TRUE(r.outcome.trace[0].accepted);
  EXPECT_EQ(r.outcome.trace[0].allocated, 1);
  EXPECT_EQ(r.outcome.payment(0), Money::from_double(1));
  EXPECT_TRUE(check_service_feasibility(r.service_log, 4).passed());
}

TEST(RunSos, EmptyStream) {
  const auto fn = users_with_tasks({});
  const auto r = run_sos(fn, std::vector<Arrival>{}, config(10, 16));
  EXPECT_TRUE(r.outcome.winners.empty());
  EXPECT_EQ(r.outcome.achieved_value, 0);
  EXPECT_TRUE(r.outcome.has_note("service_shortfall"));
}

TEST(RunSos, ExpensiveEarlyUsersStillJoinSample) {
  const auto fn = users_with_tasks({1, 1, 1});
  // eps = 1, each marginal 1, bids 5 > 1/1
  const std::vector<Arrival> stream = {{1, {0, Money::from_double(5)}},
                                       {2, {1, Money::from_double(5)}},
                                       {3, {2, Money::from_double(5)}}};
  SosAuction auction(fn, config(24, 8));  // R' = 3
  const auto d = auction.process_arrival(stream[0].user);
  EXPECT_EQ(d.reason, DecisionReason::threshold);
  EXPECT_EQ(auction.state().sample.size(), 1u);
}

TEST(RunSos, RejectsTwoArrivalsInOneStep) {
  const auto fn = users_with_tasks({1, 1});
  const std::vector<Arrival> stream = {{1, {0, Money::from_double(1)}},
                                       {1, {1, Money::from_double(1)}}};
  EXPECT_THROW(run_sos(fn, stream, config(2, 4)), std::invalid_argument);
}

TEST(RunSos, ConfigValidation) {
  const auto fn = users_with_tasks({1});
  SosConfig c = config(2, 4);
  c.nu = 0.5;
  EXPECT_THROW(SosAuction(fn, c), std::invalid_argument);
  c = config(0, 4);
  EXPECT_THROW(SosAuction(fn, c), std::invalid_argument);
}

ScenarioConfig small_scenario() {
  ScenarioConfig sc;
  sc.region_width = sc.region_height = 60;
  sc.task_count = 120;
  sc.sensing_radius = 10;
  sc.deadline = 64;
  sc.arrival_rate = 0.5;
  return sc;
}

TEST(RunSosProperties, CappedRunsStayWithinStageService) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto pop = gen_users_iid(small_scenario(), seed);
    const auto fn = pop.value_function();
    const auto r = run_sos(fn, pop.stream(), config(40, 64));
    const auto rep = check_service_feasibility(r.service_log, 40);
    EXPECT_TRUE(rep.passed()) << "seed " << seed;
    // decision log is ordered by clock
    for (std::size_t k = 1; k < r.outcome.trace.size(); ++k) {
      EXPECT_LT(r.outcome.trace[k - 1].clock, r.outcome.trace[k].clock);
    }
  }
}

TEST(RunSosProperties, VerbatimCreditingCanOvershootStageService) {
  bool overshoot = false;
  for (std::uint64_t seed = 0; seed < 20 && !overshoot; ++seed) {
    const auto pop = gen_users_iid(small_scenario(), seed);
    const auto fn = pop.value_function();
    SosConfig c = config(40, 64);
    c.allocation = AllocationMode::verbatim;
    const auto r = run_sos(fn, pop.stream(), c);
    overshoot = !check_service_feasibility(r.service_log, 40).passed();
  }
  EXPECT_TRUE(overshoot);
}

TEST(RunSosProperties, OffersIgnoreOwnBidAndAcceptImpliesIr) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pop = gen_users_iid(small_scenario(), seed);
    const auto fn = pop.value_function();
    const auto costs = pop.true_costs();
    const MechanismRun run = [&](const BidVector& bids) {
      return run_sos(fn, pop.stream(bids), config(40, 64)).outcome;
    };
    const auto base = run(costs);
    EXPECT_TRUE(check_individual_rationality(base, costs).passed());
    for (const auto& u : pop.users) {
      const std::vector<Money> alt = {Money::from_double(0.01), Money::from_double(1000)};
      EXPECT_TRUE(check_bid_independence(run, costs, u.id, alt)) << seed << "/" << u.id;
    }
  }
}

TEST(RunSosProperties, EveryRejectionCitesAReason) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pop = gen_users_iid(small_scenario(), seed);
    const auto r = run_sos(pop.value_function(), pop.stream(), config(40, 64));
    for (const auto& d : r.outcome.trace) {
      if (d.accepted) continue;
      EXPECT_TRUE(d.reason == DecisionReason::threshold ||
                  d.reason == DecisionReason::stage_service ||
                  d.reason == DecisionReason::deadline ||
                  d.reason == DecisionReason::zero_marginal);
    }
  }
}

// Threshold recomputation work against m * |S'| * min(m, |S'|).
TEST(RunSosProperties, BoundaryWorkWithinComplexityBound) {
  std::vector<double> ratios;
  for (std::int64_t T : {64, 128, 256, 512, 1024}) {
    ScenarioConfig sc = small_scenario();
    sc.deadline = T;
    sc.region_width = sc.region_height = 120;
    sc.task_count = 400;
    sc.arrival_rate = 0.8;
    const auto pop = gen_users_iid(sc, 99);
    const auto r = run_sos(pop.value_function(), pop.stream(), config(300, T));
    double worst = 0;
    for (const auto& s : r.stages) {
      if (s.sample_size == 0) continue;
      const double m = static_cast<double>(sc.task_count);
      const double n = static_cast<double>(s.sample_size);
      worst = std::max(worst, static_cast<double>(s.work) / (m * n * std::min(m, n)));
    }
    ratios.push_back(worst);
  }
  for (double r : ratios) EXPECT_LE(r, 3 * ratios.front());
}

}  // namespace
}  // namespace crowdauction
