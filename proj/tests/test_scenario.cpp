#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <map>

#include "crowdauction/scenario.hpp"

namespace crowdauction {
namespace {

ScenarioConfig small() {
  ScenarioConfig sc;
  sc.region_width = sc.region_height = 40;
  sc.task_count = 50;
  sc.sensing_radius = 6;
  sc.deadline = 100;
  return sc;
}

TEST(Scenario, RateOneArrivesEveryStep) {
  ScenarioConfig sc = small();
  sc.arrival_rate = 1;
  const auto pop = gen_users_iid(sc, 3);
  ASSERT_EQ(pop.users.size(), 100u);
  for (std::size_t k = 0; k < pop.users.size(); ++k) {
    EXPECT_EQ(pop.users[k].arrival_step, static_cast<std::int64_t>(k + 1));
    EXPECT_EQ(pop.users[k].id, k);
  }
}

TEST(Scenario, SameSeedSamePopulation) {
  const auto a = gen_users_iid(small(), 17);
  const auto b = gen_users_iid(small(), 17);
  const auto c = gen_users_iid(small(), 18);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a == c);
  ScenarioConfig sc = small();
  sc.model = UserModel::secretary;
  sc.population = 40;
  EXPECT_EQ(gen_population(sc, 5), gen_population(sc, 5));
}

TEST(Scenario, CostsWithinRangeAndTasksWithinRadius) {
  const auto sc = small();
  const auto pop = gen_users_iid(sc, 1);
  for (const auto& u : pop.users) {
    EXPECT_GE(u.true_cost.to_double(), sc.cost_low);
    EXPECT_LE(u.true_cost.to_double(), sc.cost_high);
    EXPECT_TRUE(std::is_sorted(u.tasks.begin(), u.tasks.end()));
  }
}

TEST(Scenario, RadiusBeyondDiagonalCoversEverything) {
  ScenarioConfig sc = small();
  sc.sensing_radius = 100;
  const auto pop = gen_users_iid(sc, 2);
  for (const auto& u : pop.users) EXPECT_EQ(u.tasks.size(), sc.task_count);
}

TEST(Scenario, TinyRadiusCoversNothing) {
  ScenarioConfig sc = small();
  sc.sensing_radius = 1e-9;
  const auto pop = gen_users_iid(sc, 2);
  for (const auto& u : pop.users) EXPECT_TRUE(u.tasks.empty());
}

TEST(Scenario, ArrivalCountAndMeanCostConcentrate) {
  ScenarioConfig sc = small();
  sc.deadline = 100000;
  sc.arrival_rate = 0.465;
  sc.task_count = 1;
  const auto pop = gen_users_iid(sc, 11);
  const double n = static_cast<double>(pop.users.size());
  EXPECT_NEAR(n / 100000.0, 0.465, 0.465 * 0.01);
  double sum = 0;
  for (const auto& u : pop.users) sum += u.true_cost.to_double();
  EXPECT_NEAR(sum / n, 5.5, 5.5 * 0.01);
}

TEST(Scenario, SecretaryOrderIsUniform) {
  const std::vector<UserProfile> profiles = {
      {0, Money::from_double(1), {}, 0},
      {1, Money::from_double(2), {}, 0},
      {2, Money::from_double(3), {}, 0}};
  std::map<std::array<UserId, 3>, int> counts;
  const int draws = 6000;
  for (int s = 0; s < draws; ++s) {
    const auto pop = gen_secretary_order(TaskUniverse::abstract(1), profiles, 3,
                                         derive_seed(42, static_cast<std::uint64_t>(s)));
    std::array<UserId, 3> order{};
    for (std::size_t k = 0; k < 3; ++k) {
      order[k] = pop.users[k].id;
      EXPECT_EQ(pop.users[k].arrival_step, static_cast<std::int64_t>(k + 1));
    }
    ++counts[order];
  }
  ASSERT_EQ(counts.size(), 6u);
  double chi2 = 0;
  const double expected = draws / 6.0;
  for (const auto& [order, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 20.52);  // chi-square, 5 dof, p = 0.001
}

TEST(Scenario, SecretaryPopulationLargerThanDeadlineRejected) {
  std::vector<UserProfile> profiles(5);
  for (UserId k = 0; k < 5; ++k) profiles[k].id = k;
  EXPECT_THROW(gen_secretary_order(TaskUniverse::abstract(1), profiles, 4, 1),
               std::domain_error);
  ScenarioConfig sc = small();
  sc.model = UserModel::secretary;
  sc.population = 101;
  EXPECT_THROW(sc.validate(), std::invalid_argument);
}

TEST(Scenario, ConfigValidation) {
  ScenarioConfig sc = small();
  sc.arrival_rate = 0;
  EXPECT_THROW(sc.validate(), std::invalid_argument);
  sc = small();
  sc.cost_low = 5;
  sc.cost_high = 5;
  EXPECT_THROW(sc.validate(), std::invalid_argument);
  EXPECT_EQ(user_model_from_string("secretary"), UserModel::secretary);
  EXPECT_THROW(user_model_from_string("poisson"), std::invalid_argument);
}

TEST(Scenario, DefaultDiskCoversAboutFourTasks) {
  ScenarioConfig sc;
  sc.deadline = 2000;
  const auto pop = gen_users_iid(sc, 7);
  double sum = 0;
  for (const auto& u : pop.users) sum += static_cast<double>(u.tasks.size());
  const double mean = sum / static_cast<double>(pop.users.size());
  EXPECT_GT(mean, 3.0);
  EXPECT_LT(mean, 4.6);
}

}  // namespace
}  // namespace crowdauction
