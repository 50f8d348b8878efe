#include <fstream>
#include <sstream>

#include "commands.hpp"

namespace crowdauction::app {

RecordedRun read_run_document(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path.string() + ": cannot open trace file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": not a complete JSON document (" + e.what() + ")");
  }
  try {
    return run_document_from_json(j);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

namespace {

void diff_rows(const std::string& section, const json& recorded, const json& replayed,
               std::vector<RowDiff>& out) {
  const std::size_t n = std::max(recorded.size(), replayed.size());
  for (std::size_t k = 0; k < n; ++k) {
    const json a = k < recorded.size() ? recorded[k] : json();
    const json b = k < replayed.size() ? replayed[k] : json();
    if (a != b) out.push_back({section, k, a, b});
  }
}

}  // namespace

ReplayResult replay(const RecordedRun& recorded) {
  ReplayResult r;
  r.replayed = recorded.doc;
  const auto fn = recorded.doc.population.value_function();
  try {
    r.replayed.result = execute(recorded.doc.spec, recorded.doc.population, fn,
                                recorded.doc.bids);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("recorded run cannot be re-executed: ") + e.what());
  }
  const json fresh = to_json(r.replayed);
  diff_rows("decisions", recorded.decisions, fresh["decisions"], r.diffs);
  diff_rows("stages", recorded.stages, fresh["stages"], r.diffs);
  if (recorded.outcome != fresh["outcome"]) {
    r.diffs.push_back({"outcome", 0, recorded.outcome, fresh["outcome"]});
  }
  return r;
}

}  // namespace crowdauction::app
