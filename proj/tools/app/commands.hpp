#pragma once

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "config.hpp"
#include "io.hpp"

namespace crowdauction::app {

struct SweepPoint {
  std::size_t index = 0;
  std::size_t rate_index = 0;
  double arrival_rate = 0;
  double delta = 0;
  double required_service = 0;
};

/// Sweep points in output order: arrival rate, then delta, then R.
std::vector<SweepPoint> sweep_points(const ExperimentConfig& config);

/// Population seed of replication `rep` under arrival rate `rate_index`.
/// Shared by every delta and R so that curves use common random numbers.
std::uint64_t population_seed(const ExperimentConfig& config, std::size_t rate_index,
                              std::size_t rep);

ScenarioConfig scenario_at(const ExperimentConfig& config, std::size_t rate_index);

struct RunRecord {
  std::uint64_t run_id = 0;
  SweepPoint point;
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  std::size_t users = 0;
  RunResult result;
  FrugalityReport frugality;
};

RunRecord run_one(const ExperimentConfig& config, const SweepPoint& point, std::size_t rep,
                  const Population& population, const CoverageValueFn& fn);

/// Scalar summary of one run, as written to the runs table.
struct RunRow {
  std::uint64_t run_id = 0;
  std::size_t point = 0;
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  std::size_t users = 0;
  Money total_payment;
  Value completed = 0;
  std::size_t winners = 0;
  bool reached = false;
  double frugality = std::numeric_limits<double>::quiet_NaN();
  std::string frugality_reference;  // exact, greedy or empty
  std::string frugality_qualifier;
  std::string notes;  // ';'-joined

  static RunRow from(const RunRecord& r);
  std::vector<std::string> fields(const std::vector<SweepPoint>& points) const;
};

struct PointAggregate {
  SweepPoint point;
  std::size_t replications = 0;
  Summary payment;
  Summary completed;
  Summary winners;
  double reached_rate = 0;
  Summary frugality;  // complete runs with a feasible reference only
};

/// Deterministic fold of run rows (in run order) into per-point rows.
std::vector<PointAggregate> aggregate(const std::vector<SweepPoint>& points,
                                      const std::vector<RunRow>& runs);
std::vector<std::string> aggregate_fields(const PointAggregate& a);

struct ExperimentResult {
  std::vector<SweepPoint> points;
  std::vector<PointAggregate> aggregates;
  std::vector<RunRow> runs;
  std::vector<std::filesystem::path> files;
};

/// Runs every sweep point for every replication and writes the result files
/// under `config.out_dir`.
ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream& log);

struct SuiteResult {
  std::string name;
  bool mandated = true;
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::size_t skipped = 0;
  std::vector<json> counterexamples;
  bool passed() const { return violations == 0; }
};

struct VerifyResult {
  std::vector<SuiteResult> suites;
  bool passed = true;  // every mandated suite passed
  std::vector<std::filesystem::path> files;
};

/// Property suites for the configured mechanism on small seeded scenarios.
VerifyResult verify_suite(const ExperimentConfig& config, std::ostream& log);

struct RowDiff {
  std::string section;  // decisions, stages or outcome
  std::size_t index = 0;
  json recorded;  // null when the row is missing from the file
  json replayed;  // null when the replay has no such row
};

struct ReplayResult {
  RunDocument replayed;
  std::vector<RowDiff> diffs;
};

ReplayResult replay(const RecordedRun& recorded);
/// Throws SchemaError on unreadable or malformed files.
RecordedRun read_run_document(const std::filesystem::path& path);

/// Writes one population fixture per (arrival rate, replication).
std::vector<std::filesystem::path> generate_fixtures(const ExperimentConfig& config,
                                                     std::ostream& log);

}  // namespace crowdauction::app
