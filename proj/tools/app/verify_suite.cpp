#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include "commands.hpp"

namespace crowdauction::app {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMaxCounterexamples = 20;

/// Keeps the first `n` arrivals and renumbers users densely in arrival order.
Population truncate(Population pop, std::size_t n) {
  std::sort(pop.users.begin(), pop.users.end(),
            [](const auto& a, const auto& b) { return a.arrival_step < b.arrival_step; });
  if (pop.users.size() > n) pop.users.resize(n);
  for (std::size_t k = 0; k < pop.users.size(); ++k) pop.users[k].id = static_cast<UserId>(k);
  return pop;
}

Population hand_population() {
  Population p;
  p.universe = TaskUniverse::abstract(4);
  p.deadline = 3;
  p.users = {{0, Money::from_double(2), {0, 1}, 1},
             {1, Money::from_double(1), {1, 2}, 2},
             {2, Money::from_double(4), {3}, 3}};
  return p;
}

struct Instance {
  std::string label;
  std::uint64_t seed = 0;
  Population population;
  double required = 0;
};

class Suites {
 public:
  explicit Suites(std::vector<std::string> names) {
    for (auto& n : names) {
      SuiteResult s;
      s.name = n;
      index_[n] = suites_.size();
      suites_.push_back(std::move(s));
    }
  }
  SuiteResult& operator[](const std::string& name) { return suites_.at(index_.at(name)); }
  void violation(const std::string& name, json example) {
    auto& s = (*this)[name];
    ++s.violations;
    if (s.counterexamples.size() < kMaxCounterexamples) {
      s.counterexamples.push_back(std::move(example));
    }
  }
  std::vector<SuiteResult> take() { return std::move(suites_); }

 private:
  std::vector<SuiteResult> suites_;
  std::map<std::string, std::size_t> index_;
};

json instance_json(const Instance& in, const RunSpec& spec) {
  json bids = json::array();
  for (Money c : in.population.true_costs()) bids.push_back(c.to_string());
  return {{"instance", in.label},
          {"seed", in.seed},
          {"spec", to_json(spec)},
          {"population", to_json(in.population)},
          {"bids", bids}};
}

/// Winners under the offline selection rule only; payments left at zero.
MechanismRun oms_selection(const CoverageValueFn& fn, const OmsConfig& cfg) {
  return [&fn, cfg](const BidVector& bids) {
    std::vector<DeclaredProfile> users;
    for (UserId i = 0; i < bids.size(); ++i) users.push_back({i, bids[i]});
    AuctionOutcome o;
    o.payments.assign(bids.size(), Money::zero());
    try {
      const auto phase1 = select_service(fn, users, cfg.required_service);
      const auto winners = cfg.winner_rule == WinnerRule::phase1_service
                               ? phase1
                               : select_budget(fn, users, stage_budget(phase1));
      for (const auto& w : winners) o.winners.push_back(w.id);
    } catch (const ServiceInfeasible&) {
    }
    return o;
  };
}

void check_users(Suites& suites, const Instance& in, const RunSpec& spec,
                 const CoverageValueFn& fn, const MechanismRun& run,
                 const std::function<std::optional<Money>(UserId, const AuctionOutcome&)>& critical,
                 std::size_t grid_points, bool bid_independence) {
  const auto costs = in.population.true_costs();
  const AuctionOutcome truthful = run(costs);

  auto& ir = suites["individual_rationality"];
  ++ir.checks;
  const auto irr = check_individual_rationality(truthful, costs);
  for (const auto& v : irr.violations) {
    json ex = instance_json(in, spec);
    ex["user"] = v.user;
    ex["payment"] = v.payment.to_string();
    ex["cost"] = v.cost.to_string();
    suites.violation("individual_rationality", std::move(ex));
  }

  for (const auto& u : in.population.users) {
    std::optional<Money> crit;
    try {
      crit = critical(u.id, truthful);
    } catch (const NonMonotoneSelection& e) {
      json ex = instance_json(in, spec);
      ex["user"] = u.id;
      ex["losing_bid"] = e.losing_bid().to_string();
      ex["winning_bid"] = e.winning_bid().to_string();
      ++suites["truthfulness"].checks;
      suites.violation("truthfulness", std::move(ex));
      continue;
    }
    const auto grid = deviation_grid(u.true_cost, crit, grid_points);
    const auto rep = check_truthfulness(run, costs, u.id, grid);
    ++suites["truthfulness"].checks;
    if (!rep.passed()) {
      json ex = instance_json(in, spec);
      ex["user"] = u.id;
      ex["truthful_utility"] = rep.truthful_utility.to_string();
      ex["deviation_bid"] = rep.best_deviation.to_string();
      ex["gain"] = rep.max_gain.to_string();
      suites.violation("truthfulness", std::move(ex));
    }
    if (bid_independence) {
      ++suites["bid_independence"].checks;
      if (!check_bid_independence(run, costs, u.id, grid)) {
        json ex = instance_json(in, spec);
        ex["user"] = u.id;
        suites.violation("bid_independence", std::move(ex));
      }
    }
  }
}

}  // namespace

VerifyResult verify_suite(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const auto& vc = config.verify;
  RunSpec spec = config.spec;
  spec.mechanism = config.mechanism;
  spec.delta = config.deltas.front();
  const bool literal = config.mechanism == Mechanism::oms &&
                       spec.payment_rule == PaymentRule::literal;

  std::vector<std::string> names = {"submodularity", "min_cost_oracle", "truthfulness",
                                    "individual_rationality"};
  if (config.mechanism != Mechanism::oms) names.push_back("bid_independence");
  if (config.mechanism != Mechanism::baseline) names.push_back("service_feasibility");
  if (config.mechanism == Mechanism::oms && !literal) names.push_back("critical_bid_sweep");
  Suites suites(names);
  if (literal && !vc.expected_truthful) {
    suites["truthfulness"].mandated = false;
    suites["individual_rationality"].mandated = false;
  }

  // Instances: the three-user hand instance for the offline mechanism, then
  // seeded small scenarios.
  std::vector<Instance> instances;
  if (config.mechanism == Mechanism::oms) {
    instances.push_back({"hand", 0, hand_population(), 3});
  }
  const std::uint64_t root = derive_seed(config.seed, 0x7665726966ULL);
  for (std::size_t s = 0; s < vc.scenarios; ++s) {
    Instance in;
    in.seed = derive_seed(root, s);
    in.label = "scenario-" + std::to_string(s);
    in.population = truncate(gen_population(vc.scenario, in.seed), vc.max_users);
    instances.push_back(std::move(in));
  }

  // Submodularity on the generated coverage functions.
  const std::size_t per = (vc.submodular_trials + vc.scenarios - 1) / vc.scenarios;
  std::size_t trials_left = vc.submodular_trials;
  for (const auto& in : instances) {
    if (in.label == "hand" || trials_left == 0) continue;
    const auto full = gen_population(vc.scenario, in.seed);
    const auto fn = full.value_function();
    const std::size_t trials = std::min(per, trials_left);
    trials_left -= trials;
    auto& s = suites["submodularity"];
    if (fn.user_count() == 0) {
      s.skipped += trials;
      continue;
    }
    const auto rep = check_submodular(fn, trials, in.seed);
    s.checks += trials;
    if (!rep.passed()) {
      s.violations += rep.violations - 1;
      json ex = {{"instance", in.label}, {"seed", in.seed}};
      const auto& w = *rep.witness;
      ex["smaller"] = w.smaller;
      ex["larger"] = w.larger;
      ex["element"] = w.element;
      ex["gain_smaller"] = w.gain_smaller;
      ex["gain_larger"] = w.gain_larger;
      suites.violation("submodularity", std::move(ex));
    }
  }
  log << "submodularity: " << suites["submodularity"].checks << " chain checks\n";

  for (const auto& base : instances) {
    Instance in = base;
    const auto fn = in.population.value_function();
    const auto costs = in.population.true_costs();
    const double reachable =
        static_cast<double>(fn.value(std::vector<UserId>([&] {
          std::vector<UserId> all(fn.user_count());
          std::iota(all.begin(), all.end(), UserId{0});
          return all;
        }())));

    // Exact cover oracle against the greedy cover.
    if (in.label != "hand" && fn.user_count() <= 12 && reachable >= 1) {
      auto& s = suites["min_cost_oracle"];
      const double R = std::max(1.0, std::floor(vc.oms_service_fraction * reachable));
      std::vector<UserId> ids(fn.user_count());
      std::iota(ids.begin(), ids.end(), UserId{0});
      const auto opt = min_cost_cover_bruteforce(fn, ids, costs, R);
      const auto greedy = stage_budget(select_service(fn, in.population.declared(), R));
      ++s.checks;
      if (!opt.feasible || greedy < opt.cost) {
        json ex = instance_json(in, spec);
        ex["required_service"] = R;
        ex["optimum"] = opt.cost.to_string();
        ex["greedy"] = greedy.to_string();
        suites.violation("min_cost_oracle", std::move(ex));
      }
    }

    if (config.mechanism == Mechanism::oms) {
      if (in.label != "hand") in.required = std::floor(vc.oms_service_fraction * reachable);
      if (in.required < 1) {
        ++suites["truthfulness"].skipped;
        continue;
      }
      RunSpec s = spec;
      s.required_service = in.required;
      const OmsConfig cfg = s.oms_config();
      const MechanismRun run = [&fn, cfg](const BidVector& bids) {
        std::vector<DeclaredProfile> users;
        for (UserId i = 0; i < bids.size(); ++i) users.push_back({i, bids[i]});
        try {
          return run_oms(fn, users, cfg);
        } catch (const ServiceInfeasible&) {
          AuctionOutcome o;
          o.payments.assign(bids.size(), Money::zero());
          return o;
        }
      };
      const auto selection = oms_selection(fn, cfg);
      check_users(
          suites, in, s, fn, run,
          [&](UserId u, const AuctionOutcome&) -> std::optional<Money> {
            const auto c = critical_bid_oracle(selection, costs, u, cfg.bid_ceiling);
            if (c.never_wins) return std::nullopt;
            return c.bid;
          },
          vc.grid_points, false);

      const AuctionOutcome truthful = run(costs);
      auto& feas = suites["service_feasibility"];
      ++feas.checks;
      if (!check_service_feasibility(truthful, in.required).passed()) {
        json ex = instance_json(in, s);
        ex["achieved"] = truthful.achieved_value;
        suites.violation("service_feasibility", std::move(ex));
      }

      if (!literal && fn.user_count() <= vc.sweep_max_users) {
        auto& sweep = suites["critical_bid_sweep"];
        for (UserId w : truthful.winners) {
          // Exhaustive 0.01-step sweep over [0.01, ceiling].
          BidVector bids = costs;
          std::int64_t last_win = 0;
          std::int64_t first_loss = 0;
          bool monotone = true;
          const std::int64_t step = Money::kScale / 100;
          for (std::int64_t b = step; b <= cfg.bid_ceiling.micros(); b += step) {
            bids[w] = Money::from_micros(b);
            if (selection(bids).is_winner(w)) {
              if (first_loss) monotone = false;
              last_win = b;
            } else if (!first_loss) {
              first_loss = b;
            }
          }
          const std::int64_t p = truthful.payment(w).micros();
          const bool ok = monotone && p >= last_win &&
                          (first_loss == 0 ? p == cfg.bid_ceiling.micros() : p < first_loss);
          ++sweep.checks;
          if (!ok) {
            json ex = instance_json(in, s);
            ex["user"] = w;
            ex["payment"] = truthful.payment(w).to_string();
            ex["sweep_last_win"] = Money::from_micros(last_win).to_string();
            ex["sweep_first_loss"] = Money::from_micros(first_loss).to_string();
            suites.violation("critical_bid_sweep", std::move(ex));
          }
        }
      }
    } else {
      RunSpec s = spec;
      s.required_service = vc.required_service;
      in.required = vc.required_service;
      const Population& pop = in.population;
      const MechanismRun run = [&, s](const BidVector& bids) {
        return execute(s, pop, fn, bids).outcome;
      };
      check_users(
          suites, in, s, fn, run,
          [](UserId u, const AuctionOutcome& o) -> std::optional<Money> {
            for (const auto& d : o.trace) {
              if (d.user == u && d.offer.is_positive()) return d.offer;
            }
            return std::nullopt;
          },
          vc.grid_points, true);
      if (config.mechanism == Mechanism::sos) {
        const auto r = execute(s, pop, fn, costs);
        auto& feas = suites["service_feasibility"];
        ++feas.checks;
        const auto rep = check_service_feasibility(r.service_log, s.required_service);
        if (!rep.passed()) {
          json ex = instance_json(in, s);
          ex["t"] = rep.violations.front().t;
          ex["value"] = rep.violations.front().value;
          ex["bound"] = rep.violations.front().bound;
          suites.violation("service_feasibility", std::move(ex));
        }
      }
    }
  }

  VerifyResult result;
  result.suites = suites.take();
  for (const auto& s : result.suites) {
    if (s.mandated && !s.passed()) result.passed = false;
    log << s.name << ": " << s.checks << " checks, " << s.violations << " violations"
        << (s.mandated ? "" : " (reported only)") << "\n";
  }

  const fs::path dir(config.out_dir);
  fs::create_directories(dir);
  json report = {{"schema", "crowdauction.verify/1"},
                 {"mechanism", to_string(config.mechanism)},
                 {"spec", to_json(spec)},
                 {"seed", config.seed},
                 {"scenarios", vc.scenarios},
                 {"passed", result.passed}};
  json suites_json = json::array();
  json examples = json::array();
  for (const auto& s : result.suites) {
    suites_json.push_back({{"name", s.name},
                           {"mandated", s.mandated},
                           {"checks", s.checks},
                           {"violations", s.violations},
                           {"skipped", s.skipped},
                           {"passed", s.passed()}});
    for (const auto& ex : s.counterexamples) {
      json e = ex;
      e["suite"] = s.name;
      examples.push_back(std::move(e));
    }
  }
  report["suites"] = std::move(suites_json);
  {
    const auto path = dir / "verify_report.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << report.dump(1) << '\n';
    result.files.push_back(path);
  }
  {
    const auto path = dir / ("verify_summary" + std::string(extension(config.format)));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    TableWriter table(out, kVerifyCsv, config.format);
    for (const auto& s : result.suites) {
      table.row({s.name, s.mandated ? "1" : "0", std::to_string(s.checks),
                 std::to_string(s.violations), std::to_string(s.skipped),
                 s.passed() ? "1" : "0"});
    }
    table.close();
    result.files.push_back(path);
  }
  if (!examples.empty()) {
    const auto path = dir / "verify_counterexamples.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << json{{"schema", "crowdauction.counterexamples/1"}, {"counterexamples", examples}}
               .dump(1)
        << '\n';
    result.files.push_back(path);
  }
  return result;
}

}  // namespace crowdauction::app
