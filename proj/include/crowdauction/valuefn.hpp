#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace crowdauction {

using UserId = std::uint32_t;
using TaskId = std::uint32_t;
/// Service value. Coverage counts are integral, so all value arithmetic is
/// exact until it is divided by a currency amount.
using Value = std::int64_t;

struct Point {
  double x = 0;
  double y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Finite set of sensing tasks (locations). Task ids are dense: 0..m-1.
class TaskUniverse {
 public:
  TaskUniverse() = default;
  explicit TaskUniverse(std::vector<Point> positions)
      : positions_(std::move(positions)) {
    for (const auto& p : positions_) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw std::invalid_argument("TaskUniverse: non-finite task coordinate");
      }
    }
  }
  /// Universe of `m` tasks without geometry (all at the origin).
  static TaskUniverse abstract(std::size_t m) {
    return TaskUniverse(std::vector<Point>(m));
  }

  std::size_t size() const { return positions_.size(); }
  const Point& position(TaskId t) const { return positions_.at(t); }
  std::span<const Point> positions() const { return positions_; }

  friend bool operator==(const TaskUniverse&, const TaskUniverse&) = default;

 private:
  std::vector<Point> positions_;
};

/// A monotone submodular value oracle over user ids 0..n-1.
///
/// `tracker()` returns an incremental evaluator bound to a growing set S,
/// which is what the greedy mechanisms use on their hot path.
template <class F>
concept ValueOracle =
    requires(const F& f, UserId i, std::span<const UserId> s) {
      { f.user_count() } -> std::convertible_to<std::size_t>;
      { f.value(s) } -> std::same_as<Value>;
      { f.marginal(i, s) } -> std::same_as<Value>;
      { f.tracker() };
    } &&
    requires(typename F::Tracker t, const typename F::Tracker ct, UserId i) {
      { ct.value() } -> std::same_as<Value>;
      { ct.marginal(i) } -> std::same_as<Value>;
      { ct.contains(i) } -> std::same_as<bool>;
      { t.add(i) } -> std::same_as<Value>;
      { ct.work() } -> std::convertible_to<std::uint64_t>;
    };

/// Tracker that additionally supports allocating only part of a user's
/// marginal contribution (used for capped service allocation).
template <class T>
concept PartialAllocationTracker = requires(T t, UserId i, Value limit) {
  { t.add_partial(i, limit) } -> std::same_as<Value>;
};

/// V(S) = |union of the task sets of S|.
class CoverageValueFn {
 public:
  class Tracker {
   public:
    explicit Tracker(const CoverageValueFn& fn)
        : fn_(&fn),
          covered_(fn.task_count(), 0),
          in_set_(fn.user_count(), 0) {}

    Value value() const { return value_; }
    bool contains(UserId i) const { return in_set_[i] != 0; }

    Value marginal(UserId i) const {
      if (in_set_[i]) return 0;
      const auto& tasks = fn_->membership_[i];
      work_ += tasks.size();
      Value gain = 0;
      for (TaskId t : tasks) gain += covered_[t] ? 0 : 1;
      return gain;
    }

    Value add(UserId i) {
      return add_partial(i, static_cast<Value>(fn_->task_count()) + 1);
    }

    /// Marks i as selected but only covers up to `limit` of its currently
    /// uncovered tasks (lowest task ids first). Returns the tasks gained.
    Value add_partial(UserId i, Value limit) {
      if (in_set_[i]) return 0;
      in_set_[i] = 1;
      Value gained = 0;
      for (TaskId t : fn_->membership_[i]) {
        if (gained >= limit) break;
        if (!covered_[t]) {
          covered_[t] = 1;
          ++gained;
        }
      }
      work_ += fn_->membership_[i].size();
      value_ += gained;
      return gained;
    }

    std::uint64_t work() const { return work_; }

   private:
    const CoverageValueFn* fn_;
    std::vector<std::uint8_t> covered_;
    std::vector<std::uint8_t> in_set_;
    Value value_ = 0;
    mutable std::uint64_t work_ = 0;
  };

  CoverageValueFn() = default;
  CoverageValueFn(TaskUniverse universe,
                  std::vector<std::vector<TaskId>> membership)
      : universe_(std::move(universe)), membership_(std::move(membership)) {
    for (auto& tasks : membership_) {
      std::sort(tasks.begin(), tasks.end());
      tasks.erase(std::unique(tasks.begin(), tasks.end()), tasks.end());
      if (!tasks.empty() && tasks.back() >= universe_.size()) {
        throw std::invalid_argument(
            "CoverageValueFn: user task outside the task universe");
      }
    }
  }

  std::size_t user_count() const { return membership_.size(); }
  std::size_t task_count() const { return universe_.size(); }
  const TaskUniverse& universe() const { return universe_; }
  std::span<const TaskId> tasks(UserId i) const {
    check_id(i);
    return membership_[i];
  }

  Value value(std::span<const UserId> set) const {
    Tracker t(*this);
    for (UserId i : set) {
      check_id(i);
      t.add(i);
    }
    return t.value();
  }

  Value marginal(UserId i, std::span<const UserId> set) const {
    check_id(i);
    Tracker t(*this);
    for (UserId j : set) {
      check_id(j);
      t.add(j);
    }
    return t.marginal(i);
  }

  Tracker tracker() const { return Tracker(*this); }

 private:
  void check_id(UserId i) const {
    if (i >= membership_.size()) {
      throw std::domain_error("CoverageValueFn: unknown user id " +
                              std::to_string(i));
    }
  }

  TaskUniverse universe_;
  std::vector<std::vector<TaskId>> membership_;
};

/// Set function given by an explicit table over all subsets of at most 20
/// users (index = bitmask). Makes no monotonicity or submodularity promise;
/// used to exercise the checkers with hand-built oracles.
class ExplicitSetFunction {
 public:
  class Tracker {
   public:
    explicit Tracker(const ExplicitSetFunction& fn) : fn_(&fn) {}
    Value value() const { return fn_->table_[mask_]; }
    bool contains(UserId i) const { return (mask_ >> i) & 1u; }
    Value marginal(UserId i) const {
      ++work_;
      return fn_->table_[mask_ | (1u << i)] - fn_->table_[mask_];
    }
    Value add(UserId i) {
      const Value gain = marginal(i);
      mask_ |= 1u << i;
      return gain;
    }
    std::uint64_t work() const { return work_; }

   private:
    const ExplicitSetFunction* fn_;
    std::uint32_t mask_ = 0;
    mutable std::uint64_t work_ = 0;
  };

  ExplicitSetFunction(std::size_t n, std::vector<Value> table)
      : n_(n), table_(std::move(table)) {
    if (n > 20 || table_.size() != (std::size_t{1} << n)) {
      throw std::invalid_argument(
          "ExplicitSetFunction: table must have 2^n entries, n <= 20");
    }
  }

  std::size_t user_count() const { return n_; }
  Value value(std::span<const UserId> set) const { return table_[mask(set)]; }
  Value marginal(UserId i, std::span<const UserId> set) const {
    const auto m = mask(set);
    if (i >= n_) throw std::domain_error("ExplicitSetFunction: unknown user id");
    return table_[m | (1u << i)] - table_[m];
  }
  Tracker tracker() const { return Tracker(*this); }

 private:
  std::uint32_t mask(std::span<const UserId> set) const {
    std::uint32_t m = 0;
    for (UserId i : set) {
      if (i >= n_) {
        throw std::domain_error("ExplicitSetFunction: unknown user id");
      }
      m |= 1u << i;
    }
    return m;
  }

  std::size_t n_;
  std::vector<Value> table_;
};

static_assert(ValueOracle<CoverageValueFn>);
static_assert(ValueOracle<ExplicitSetFunction>);
static_assert(PartialAllocationTracker<CoverageValueFn::Tracker>);

struct SubmodularityWitness {
  std::vector<UserId> smaller;  // S
  std::vector<UserId> larger;   // T, with S a subset of T
  UserId element = 0;           // i, not in T
  Value gain_smaller = 0;       // V(S+i) - V(S)
  Value gain_larger = 0;        // V(T+i) - V(T)
  Value value_smaller = 0;
  Value value_larger = 0;
  bool monotonicity = false;    // true if V(S) > V(T) was the violation
};

struct SubmodularityReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  std::optional<SubmodularityWitness> witness;  // first violation found
  bool passed() const { return violations == 0; }
};

/// Samples random chains S ⊆ T and elements i ∉ T and checks diminishing
/// returns and monotonicity on each.
template <ValueOracle F>
SubmodularityReport check_submodular(const F& fn, std::size_t trials,
                                     std::uint64_t seed) {
  if (trials == 0) {
    throw std::invalid_argument("check_submodular: trials must be >= 1");
  }
  SubmodularityReport report;
  report.trials = trials;
  const std::size_t n = fn.user_count();
  if (n == 0) return report;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<UserId> pick(0, static_cast<UserId>(n - 1));
  std::vector<UserId> smaller, larger;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const UserId element = pick(rng);
    const double p_larger = unit(rng);
    smaller.clear();
    larger.clear();
    for (UserId j = 0; j < n; ++j) {
      if (j == element || unit(rng) >= p_larger) continue;
      larger.push_back(j);
      if (unit(rng) < 0.5) smaller.push_back(j);
    }
    const Value gs = fn.marginal(element, smaller);
    const Value gl = fn.marginal(element, larger);
    const Value vs = fn.value(smaller);
    const Value vl = fn.value(larger);
    const bool bad_returns = gs < gl;
    const bool bad_monotone = vs > vl || gs < 0 || gl < 0;
    if (bad_returns || bad_monotone) {
      ++report.violations;
      if (!report.witness) {
        report.witness = SubmodularityWitness{smaller, larger, element, gs,
                                              gl, vs, vl, !bad_returns};
      }
    }
  }
  return report;
}

}  // namespace crowdauction
