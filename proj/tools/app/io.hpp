#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mechanism.hpp"

namespace crowdauction::app {
enum class OutputFormat { csv, json };
}

namespace crowdauction::app {

using nlohmann::json;

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

struct CsvSchema {
  std::string_view name;
  int version;
  std::vector<std::string_view> columns;
};

// Column order is frozen per schema version.
extern const CsvSchema kDecisionsCsv;  // one row per decision
extern const CsvSchema kStagesCsv;     // one row per stage boundary
extern const CsvSchema kRunsCsv;       // one row per replication
extern const CsvSchema kAggregateCsv;  // one row per sweep point
extern const CsvSchema kUsersCsv;      // generated population fixture
extern const CsvSchema kTasksCsv;
extern const CsvSchema kVerifyCsv;     // one row per property suite

/// First line `#schema,<name>,<version>`, second line the column names.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const CsvSchema& schema);
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream* out_;
  std::size_t width_;
};

/// Row sink for one table in either format. JSON output is
/// `{"schema": ..., "rows": [{column: value, ...}, ...]}` with numeric-looking
/// fields written as numbers.
class TableWriter {
 public:
  TableWriter(std::ostream& out, const CsvSchema& schema, OutputFormat format);
  TableWriter(const TableWriter&) = delete;
  TableWriter& operator=(const TableWriter&) = delete;
  ~TableWriter();
  void row(const std::vector<std::string>& fields);
  /// Writes the closing bracket of a JSON table; idempotent.
  void close();

 private:
  std::ostream* out_;
  const CsvSchema* schema_;
  OutputFormat format_;
  std::optional<CsvWriter> csv_;
  bool first_ = true;
  bool closed_ = false;
};

std::string_view extension(OutputFormat f);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(std::string_view name) const;
};

/// Reads a file written by CsvWriter; throws SchemaError when the schema
/// row, the header or a row width does not match.
CsvTable read_csv(std::istream& in, const CsvSchema& schema);

std::vector<std::string> decision_row(std::uint64_t run_id, const Decision& d);
std::vector<std::string> stage_row(std::uint64_t run_id, const StageRecord& s);

json to_json(const Population& p);
Population population_from_json(const json& j);

json to_json(const Decision& d);
Decision decision_from_json(const json& j);

json to_json(const StageRecord& s);

json to_json(const RunSpec& s);
RunSpec run_spec_from_json(const json& j);

inline constexpr std::string_view kRunSchema = "crowdauction.run/1";

/// One self-contained run: enough to re-execute it and compare.
struct RunDocument {
  std::uint64_t run_id = 0;
  RunSpec spec;
  Population population;
  std::vector<Money> bids;  // indexed by user id
  RunResult result;
};

json to_json(const RunDocument& doc);

/// Parses a run document. The recorded outcome is kept as raw JSON rows in
/// `recorded` so that edited files can be compared row by row.
struct RecordedRun {
  RunDocument doc;  // result left empty
  json decisions;
  json stages;
  json outcome;
};
RecordedRun run_document_from_json(const json& j);

}  // namespace crowdauction::app
