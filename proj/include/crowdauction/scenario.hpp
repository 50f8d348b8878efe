#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "crowdauction/auction.hpp"
#include "crowdauction/sos.hpp"
#include "crowdauction/valuefn.hpp"

namespace crowdauction {

enum class UserModel { iid, secretary };

inline std::string_view to_string(UserModel m) {
  return m == UserModel::iid ? "iid" : "secretary";
}

inline UserModel user_model_from_string(std::string_view s) {
  if (s == "iid") return UserModel::iid;
  if (s == "secretary") return UserModel::secretary;
  throw std::invalid_argument("unknown user model '" + std::string(s) + "'");
}

/// Defaults: a 340 m square with 3000 tasks, so that a 7 m sensing disk
/// covers about four tasks.
struct ScenarioConfig {
  double region_width = 340;
  double region_height = 340;
  std::size_t task_count = 3000;
  double sensing_radius = 7;
  double cost_low = 1;
  double cost_high = 10;
  std::int64_t deadline = 1800;
  double arrival_rate = 0.465;
  UserModel model = UserModel::iid;
  std::size_t population = 838;  // secretary model only

  void validate() const {
    if (!(region_width > 0) || !(region_height > 0)) {
      throw std::invalid_argument("scenario: region must have positive size");
    }
    if (task_count < 1) throw std::invalid_argument("scenario: task_count must be >= 1");
    if (!(sensing_radius > 0)) {
      throw std::invalid_argument("scenario: sensing_radius must be > 0");
    }
    if (!(cost_low > 0) || !(cost_low < cost_high)) {
      throw std::invalid_argument("scenario: need 0 < cost_low < cost_high");
    }
    if (deadline < 1) throw std::invalid_argument("scenario: deadline must be >= 1");
    if (!(arrival_rate > 0 && arrival_rate <= 1)) {
      throw std::invalid_argument("scenario: arrival_rate must be in (0, 1]");
    }
    if (model == UserModel::secretary &&
        population > static_cast<std::size_t>(deadline)) {
      throw std::invalid_argument("scenario: population exceeds deadline");
    }
  }
};

/// splitmix64 step; derives independent sub-seeds from one root seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Task layout plus the rule that maps a user position to its task set.
class Geometry {
 public:
  Geometry(TaskUniverse universe, double width, double height, double radius)
      : universe_(std::move(universe)), width_(width), height_(height),
        radius_(radius) {}

  const TaskUniverse& universe() const { return universe_; }
  double radius() const { return radius_; }

  std::vector<TaskId> tasks_near(Point p) const {
    std::vector<TaskId> out;
    const double r2 = radius_ * radius_;
    const auto pos = universe_.positions();
    for (TaskId t = 0; t < pos.size(); ++t) {
      const double dx = pos[t].x - p.x;
      const double dy = pos[t].y - p.y;
      if (dx * dx + dy * dy <= r2) out.push_back(t);
    }
    return out;
  }

  template <class Rng>
  Point sample_position(Rng& rng) const {
    std::uniform_real_distribution<double> ux(0.0, width_);
    std::uniform_real_distribution<double> uy(0.0, height_);
    const double x = ux(rng);
    return {x, uy(rng)};
  }

  template <class Rng>
  std::vector<TaskId> sample_user_tasks(Rng& rng) const {
    return tasks_near(sample_position(rng));
  }

 private:
  TaskUniverse universe_;
  double width_;
  double height_;
  double radius_;
};

inline Geometry gen_geometry(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, config.region_width);
  std::uniform_real_distribution<double> uy(0.0, config.region_height);
  std::vector<Point> tasks(config.task_count);
  for (auto& p : tasks) {
    p.x = ux(rng);
    p.y = uy(rng);
  }
  return Geometry(TaskUniverse(std::move(tasks)), config.region_width,
                  config.region_height, config.sensing_radius);
}

/// Users and tasks of one scenario instance. `users` is ordered by arrival
/// and user ids are dense (0..n-1).
struct Population {
  TaskUniverse universe;
  std::int64_t deadline = 0;
  std::vector<UserProfile> users;

  CoverageValueFn value_function() const {
    std::vector<std::vector<TaskId>> membership(users.size());
    for (const auto& u : users) membership.at(u.id) = u.tasks;
    return CoverageValueFn(universe, std::move(membership));
  }

  std::vector<Money> true_costs() const {
    std::vector<Money> costs(users.size());
    for (const auto& u : users) costs.at(u.id) = u.true_cost;
    return costs;
  }

  /// Truthful declarations, in arrival order.
  std::vector<DeclaredProfile> declared() const {
    std::vector<DeclaredProfile> out;
    out.reserve(users.size());
    for (const auto& u : users) out.push_back({u.id, u.true_cost});
    return out;
  }

  /// Arrival stream with the given bids (indexed by user id).
  std::vector<Arrival> stream(std::span<const Money> bids) const {
    std::vector<Arrival> out;
    out.reserve(users.size());
    for (const auto& u : users) out.push_back({u.arrival_step, {u.id, bids[u.id]}});
    return out;
  }
  std::vector<Arrival> stream() const { return stream(true_costs()); }

  friend bool operator==(const Population& a, const Population& b) {
    if (!(a.universe == b.universe) || a.deadline != b.deadline ||
        a.users.size() != b.users.size()) {
      return false;
    }
    for (std::size_t k = 0; k < a.users.size(); ++k) {
      const auto& x = a.users[k];
      const auto& y = b.users[k];
      if (x.id != y.id || x.true_cost != y.true_cost || x.tasks != y.tasks ||
          x.arrival_step != y.arrival_step) {
        return false;
      }
    }
    return true;
  }
};

namespace detail {

template <class Rng>
Money draw_cost(const ScenarioConfig& config, Rng& rng) {
  std::uniform_real_distribution<double> cost(config.cost_low, config.cost_high);
  Money c = Money::from_double(cost(rng));
  return std::max(c, Money::epsilon());
}

}  // namespace detail

/// i.i.d. model: at each step 1..T a user arrives with probability lambda,
/// with a fresh uniform cost and a fresh uniform position.
inline Population gen_users_iid(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  const Geometry geo = gen_geometry(config, derive_seed(seed, 0));
  std::mt19937_64 rng(derive_seed(seed, 1));
  std::bernoulli_distribution arrives(config.arrival_rate);
  Population pop;
  pop.universe = geo.universe();
  pop.deadline = config.deadline;
  for (std::int64_t t = 1; t <= config.deadline; ++t) {
    if (!arrives(rng)) continue;
    UserProfile u;
    u.id = static_cast<UserId>(pop.users.size());
    u.true_cost = detail::draw_cost(config, rng);
    u.tasks = geo.sample_user_tasks(rng);
    u.arrival_step = t;
    pop.users.push_back(std::move(u));
  }
  return pop;
}

/// Secretary model: a fixed population arrives in a uniformly random order
/// on slots 1..n. Profiles keep their ids; only arrival steps change.
inline Population gen_secretary_order(TaskUniverse universe,
                                      std::vector<UserProfile> profiles,
                                      std::int64_t deadline, std::uint64_t seed) {
  if (profiles.size() > static_cast<std::size_t>(std::max<std::int64_t>(deadline, 0))) {
    throw std::domain_error("gen_secretary_order: population exceeds deadline");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(profiles.begin(), profiles.end(), rng);
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    profiles[k].arrival_step = static_cast<std::int64_t>(k + 1);
  }
  Population pop;
  pop.universe = std::move(universe);
  pop.deadline = deadline;
  pop.users = std::move(profiles);
  return pop;
}

/// Draws a fixed population of `config.population` profiles and orders it
/// with `gen_secretary_order`.
inline Population gen_users_secretary(const ScenarioConfig& config,
                                      std::uint64_t seed) {
  config.validate();
  const Geometry geo = gen_geometry(config, derive_seed(seed, 0));
  std::mt19937_64 rng(derive_seed(seed, 1));
  std::vector<UserProfile> profiles(config.population);
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    profiles[k].id = static_cast<UserId>(k);
    profiles[k].true_cost = detail::draw_cost(config, rng);
    profiles[k].tasks = geo.sample_user_tasks(rng);
  }
  return gen_secretary_order(geo.universe(), std::move(profiles), config.deadline,
                             derive_seed(seed, 2));
}

inline Population gen_population(const ScenarioConfig& config, std::uint64_t seed) {
  return config.model == UserModel::iid ? gen_users_iid(config, seed)
                                        : gen_users_secretary(config, seed);
}

}  // namespace crowdauction
