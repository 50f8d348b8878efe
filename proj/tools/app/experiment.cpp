#include <algorithm>
#include <fstream>
#include <ostream>
#include <thread>
#include <atomic>

#include "commands.hpp"

namespace crowdauction::app {

namespace fs = std::filesystem;

std::vector<SweepPoint> sweep_points(const ExperimentConfig& config) {
  std::vector<double> deltas = config.deltas;
  if (config.mechanism != Mechanism::sos) deltas.resize(1);
  std::vector<SweepPoint> out;
  for (std::size_t li = 0; li < config.arrival_rates.size(); ++li) {
    for (double delta : deltas) {
      for (double R : config.required_service) {
        SweepPoint p;
        p.index = out.size();
        p.rate_index = li;
        p.arrival_rate = config.arrival_rates[li];
        p.delta = delta;
        p.required_service = R;
        out.push_back(p);
      }
    }
  }
  return out;
}

std::uint64_t population_seed(const ExperimentConfig& config, std::size_t rate_index,
                              std::size_t rep) {
  return derive_seed(derive_seed(config.seed, rate_index), rep);
}

ScenarioConfig scenario_at(const ExperimentConfig& config, std::size_t rate_index) {
  ScenarioConfig s = config.scenario;
  s.arrival_rate = config.arrival_rates.at(rate_index);
  return s;
}

RunRecord run_one(const ExperimentConfig& config, const SweepPoint& point, std::size_t rep,
                  const Population& population, const CoverageValueFn& fn) {
  RunRecord r;
  r.point = point;
  r.replication = rep;
  r.seed = population_seed(config, point.rate_index, rep);
  r.users = population.users.size();
  RunSpec spec = config.spec;
  spec.mechanism = config.mechanism;
  spec.required_service = point.required_service;
  spec.delta = point.delta;
  const auto costs = population.true_costs();
  r.result = execute(spec, population, fn, costs);
  r.frugality = measure_frugality(r.result.outcome, fn, costs, point.required_service,
                                  config.gamma);
  return r;
}

RunRow RunRow::from(const RunRecord& r) {
  RunRow row;
  row.run_id = r.run_id;
  row.point = r.point.index;
  row.replication = r.replication;
  row.seed = r.seed;
  row.users = r.users;
  const auto& o = r.result.outcome;
  row.total_payment = o.total_payment;
  row.completed = o.achieved_value;
  row.winners = o.winners.size();
  row.reached = static_cast<double>(o.achieved_value) >= r.point.required_service;
  row.frugality = r.frugality.ratio;
  if (r.frugality.reference_feasible) {
    row.frugality_reference = r.frugality.reference_exact ? "exact" : "greedy";
  }
  row.frugality_qualifier = r.frugality.qualifier;
  for (const auto& n : o.notes) row.notes += (row.notes.empty() ? "" : ";") + n;
  return row;
}

std::vector<std::string> RunRow::fields(const std::vector<SweepPoint>& points) const {
  const auto& p = points.at(point);
  return {std::to_string(run_id),
          std::to_string(point),
          std::to_string(replication),
          std::to_string(seed),
          format_double(p.arrival_rate),
          format_double(p.delta),
          format_double(p.required_service),
          std::to_string(users),
          total_payment.to_string(),
          std::to_string(completed),
          std::to_string(winners),
          reached ? "1" : "0",
          std::isfinite(frugality) ? format_double(frugality) : "",
          frugality_reference,
          frugality_qualifier,
          notes};
}

std::vector<PointAggregate> aggregate(const std::vector<SweepPoint>& points,
                                      const std::vector<RunRow>& runs) {
  std::vector<PointAggregate> out;
  for (const auto& p : points) {
    std::vector<double> pay, done, win, frug;
    std::size_t reached = 0;
    for (const auto& r : runs) {
      if (r.point != p.index) continue;
      pay.push_back(r.total_payment.to_double());
      done.push_back(static_cast<double>(r.completed));
      win.push_back(static_cast<double>(r.winners));
      reached += r.reached ? 1 : 0;
      if (r.frugality_qualifier.empty() && std::isfinite(r.frugality)) {
        frug.push_back(r.frugality);
      }
    }
    PointAggregate a;
    a.point = p;
    a.replications = pay.size();
    a.payment = summarize(pay);
    a.completed = summarize(done);
    a.winners = summarize(win);
    a.reached_rate = pay.empty() ? 0.0
                                 : static_cast<double>(reached) / static_cast<double>(pay.size());
    a.frugality = summarize(frug);
    out.push_back(a);
  }
  return out;
}

std::vector<std::string> aggregate_fields(const PointAggregate& a) {
  const auto f = format_double;
  return {std::to_string(a.point.index), f(a.point.arrival_rate), f(a.point.delta),
          f(a.point.required_service),   std::to_string(a.replications),
          f(a.payment.mean),             f(a.payment.stddev),
          f(a.completed.mean),           f(a.completed.stddev),
          f(a.winners.mean),             f(a.winners.stddev),
          f(a.reached_rate),
          a.frugality.count ? f(a.frugality.mean) : "",
          a.frugality.count ? f(a.frugality.stddev) : "",
          std::to_string(a.frugality.count)};
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

/// Runs `count` independent jobs on up to `workers` threads; job k writes
/// only slot k, so the result does not depend on scheduling.
template <class Job>
void parallel_for(std::size_t count, std::size_t workers, Job job) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t k = 0; k < count; ++k) job(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= count) return;
        try {
          job(k);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  ExperimentResult result;
  result.points = sweep_points(config);
  const fs::path dir(config.out_dir);
  fs::create_directories(dir);
  const auto ext = std::string(extension(config.format));

  const auto path_of = [&](const std::string& stem) {
    result.files.push_back(dir / (stem + ext));
    return result.files.back();
  };
  auto runs_out = open_out(path_of("runs"));
  TableWriter runs_table(runs_out, kRunsCsv, config.format);
  std::ofstream stages_out;
  std::optional<TableWriter> stages_table;
  if (config.mechanism == Mechanism::sos) {
    stages_out = open_out(path_of("stages"));
    stages_table.emplace(stages_out, kStagesCsv, config.format);
  }
  std::ofstream decisions_out;
  std::optional<TableWriter> decisions_table;
  if (config.write_decisions) {
    decisions_out = open_out(path_of("decisions"));
    decisions_table.emplace(decisions_out, kDecisionsCsv, config.format);
  }
  if (config.write_run_documents) fs::create_directories(dir / "runs");

  // One unit per (arrival rate, replication); each covers every delta and R.
  const std::size_t rates = config.arrival_rates.size();
  const std::size_t reps = config.replications;
  const std::size_t per_rate = result.points.size() / rates;
  const std::size_t units = rates * reps;
  const std::size_t batch = std::max<std::size_t>(1, config.workers * 2);

  for (std::size_t begin = 0; begin < units; begin += batch) {
    const std::size_t end = std::min(units, begin + batch);
    std::vector<std::vector<RunRecord>> slots(end - begin);
    std::vector<Population> populations(end - begin);
    parallel_for(end - begin, config.workers, [&](std::size_t k) {
      const std::size_t unit = begin + k;
      const std::size_t li = unit / reps;
      const std::size_t rep = unit % reps;
      populations[k] = gen_population(scenario_at(config, li), population_seed(config, li, rep));
      const auto fn = populations[k].value_function();
      for (std::size_t pi = 0; pi < per_rate; ++pi) {
        const auto& point = result.points[li * per_rate + pi];
        RunRecord rec = run_one(config, point, rep, populations[k], fn);
        rec.run_id = static_cast<std::uint64_t>(unit * per_rate + pi);
        slots[k].push_back(std::move(rec));
      }
    });
    for (std::size_t k = 0; k < slots.size(); ++k) {
      for (const auto& rec : slots[k]) {
        const RunRow row = RunRow::from(rec);
        runs_table.row(row.fields(result.points));
        result.runs.push_back(row);
        if (stages_table) {
          for (const auto& s : rec.result.stages) stages_table->row(stage_row(rec.run_id, s));
        }
        if (decisions_table) {
          for (const auto& d : rec.result.outcome.trace) {
            decisions_table->row(decision_row(rec.run_id, d));
          }
        }
        if (config.write_run_documents) {
          RunDocument doc;
          doc.run_id = rec.run_id;
          doc.spec = config.spec;
          doc.spec.mechanism = config.mechanism;
          doc.spec.required_service = rec.point.required_service;
          doc.spec.delta = rec.point.delta;
          doc.population = populations[k];
          doc.bids = populations[k].true_costs();
          doc.result = rec.result;
          const auto path = dir / "runs" / ("run-" + std::to_string(rec.run_id) + ".json");
          auto out = open_out(path);
          out << to_json(doc).dump(1) << '\n';
          result.files.push_back(path);
        }
      }
    }
    log << "completed " << end << "/" << units << " replication units\n";
  }
  runs_table.close();
  if (stages_table) stages_table->close();
  if (decisions_table) decisions_table->close();

  result.aggregates = aggregate(result.points, result.runs);
  auto agg_out = open_out(path_of("aggregate"));
  TableWriter agg_table(agg_out, kAggregateCsv, config.format);
  for (const auto& a : result.aggregates) agg_table.row(aggregate_fields(a));
  agg_table.close();
  return result;
}

}  // namespace crowdauction::app
