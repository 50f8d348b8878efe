#include "io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace crowdauction::app {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

const CsvSchema kDecisionsCsv{"decisions", 1,
                              {"run_id", "clock", "user", "bid", "offer", "threshold",
                               "accepted", "payment", "allocated", "reason"}};
const CsvSchema kStagesCsv{"stages", 1,
                           {"run_id", "stage", "t", "stage_service", "threshold",
                            "sample_size", "selected", "value", "spend"}};
const CsvSchema kRunsCsv{"runs", 1,
                         {"run_id", "point", "replication", "seed", "arrival_rate", "delta",
                          "required_service", "users", "total_payment", "completed",
                          "winners", "reached", "frugality", "frugality_reference",
                          "frugality_qualifier", "notes"}};
const CsvSchema kAggregateCsv{"aggregate", 1,
                              {"point", "arrival_rate", "delta", "required_service",
                               "replications", "payment_mean", "payment_stddev",
                               "completed_mean", "completed_stddev", "winners_mean",
                               "winners_stddev", "reached_rate", "frugality_mean",
                               "frugality_stddev", "frugality_count"}};
const CsvSchema kUsersCsv{"users", 1, {"id", "arrival", "cost", "tasks"}};
const CsvSchema kTasksCsv{"tasks", 1, {"id", "x", "y"}};
const CsvSchema kVerifyCsv{"verify", 1,
                           {"suite", "mandated", "checks", "violations", "skipped", "passed"}};

namespace {

std::string quote(const std::string& f) {
  if (f.find_first_of(",\"\n") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string header_line(const CsvSchema& s) {
  return "#schema," + std::string(s.name) + "," + std::to_string(s.version);
}

}  // namespace

CsvWriter::CsvWriter(std::ostream& out, const CsvSchema& schema)
    : out_(&out), width_(schema.columns.size()) {
  *out_ << header_line(schema) << '\n';
  for (std::size_t k = 0; k < schema.columns.size(); ++k) {
    *out_ << (k ? "," : "") << schema.columns[k];
  }
  *out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw std::logic_error("CsvWriter: row width mismatch");
  for (std::size_t k = 0; k < fields.size(); ++k) {
    *out_ << (k ? "," : "") << quote(fields[k]);
  }
  *out_ << '\n';
}

TableWriter::TableWriter(std::ostream& out, const CsvSchema& schema, OutputFormat format)
    : out_(&out), schema_(&schema), format_(format) {
  if (format_ == OutputFormat::csv) {
    csv_.emplace(out, schema);
  } else {
    *out_ << "{\"schema\":\"crowdauction." << schema.name << "/" << schema.version
          << "\",\"rows\":[";
  }
}

TableWriter::~TableWriter() {
  try {
    close();
  } catch (...) {
  }
}

void TableWriter::row(const std::vector<std::string>& fields) {
  if (closed_) throw std::logic_error("TableWriter: row after close");
  if (csv_) {
    csv_->row(fields);
    return;
  }
  if (fields.size() != schema_->columns.size()) {
    throw std::logic_error("TableWriter: row width mismatch");
  }
  nlohmann::ordered_json obj = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < fields.size(); ++k) {
    const std::string& f = fields[k];
    double x = 0;
    const auto res = std::from_chars(f.data(), f.data() + f.size(), x);
    const std::string key(schema_->columns[k]);
    if (!f.empty() && res.ec == std::errc() && res.ptr == f.data() + f.size() &&
        std::isfinite(x)) {
      try {
        obj[key] = nlohmann::ordered_json::parse(f);
      } catch (const nlohmann::json::exception&) {
        obj[key] = f;
      }
    } else {
      obj[key] = f;
    }
  }
  *out_ << (first_ ? "\n" : ",\n") << obj.dump();
  first_ = false;
}

void TableWriter::close() {
  if (closed_) return;
  closed_ = true;
  if (format_ == OutputFormat::json) *out_ << "\n]}\n";
}

std::string_view extension(OutputFormat f) { return f == OutputFormat::csv ? ".csv" : ".json"; }

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k] == name) return k;
  }
  throw SchemaError("no column '" + std::string(name) + "'");
}

CsvTable read_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line) || line != header_line(schema)) {
    throw SchemaError("expected schema row '" + header_line(schema) + "'");
  }
  CsvTable t;
  if (!std::getline(in, line)) throw SchemaError("missing header row");
  t.columns = split_csv_line(line);
  if (t.columns.size() != schema.columns.size() ||
      !std::equal(t.columns.begin(), t.columns.end(), schema.columns.begin())) {
    throw SchemaError("header row does not match schema " + std::string(schema.name));
  }
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_csv_line(line);
    if (fields.size() != t.columns.size()) {
      throw SchemaError("line " + std::to_string(lineno) + ": expected " +
                        std::to_string(t.columns.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  return t;
}

std::vector<std::string> decision_row(std::uint64_t run_id, const Decision& d) {
  return {std::to_string(run_id),
          std::to_string(d.clock),
          std::to_string(d.user),
          d.bid.to_string(),
          d.offer.to_string(),
          format_double(d.threshold),
          d.accepted ? "1" : "0",
          d.payment.to_string(),
          std::to_string(d.allocated),
          std::string(to_string(d.reason))};
}

std::vector<std::string> stage_row(std::uint64_t run_id, const StageRecord& s) {
  return {std::to_string(run_id),         std::to_string(s.stage),
          std::to_string(s.t),            format_double(s.stage_service),
          format_double(s.threshold),     std::to_string(s.sample_size),
          std::to_string(s.selected),     std::to_string(s.value),
          s.spend.to_string()};
}

// ---- JSON -------------------------------------------------------------

namespace {

const json& field(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + ": missing field '" + key + "'");
  return *it;
}

template <class T>
T get(const json& obj, const std::string& key, const std::string& where) {
  const json& v = field(obj, key, where);
  try {
    if constexpr (std::is_same_v<T, Money>) {
      return Money::parse(v.get<std::string>());
    } else {
      return v.get<T>();
    }
  } catch (const std::exception& e) {
    throw SchemaError(where + ": bad value for '" + key + "': " + e.what());
  }
}

const json& array_field(const json& obj, const std::string& key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_array()) throw SchemaError(where + ": field '" + key + "' must be an array");
  return v;
}

}  // namespace

json to_json(const Population& p) {
  json tasks = json::array();
  for (const auto& pt : p.universe.positions()) tasks.push_back({pt.x, pt.y});
  json users = json::array();
  for (const auto& u : p.users) {
    users.push_back({{"id", u.id},
                     {"arrival", u.arrival_step},
                     {"cost", u.true_cost.to_string()},
                     {"tasks", u.tasks}});
  }
  return {{"deadline", p.deadline}, {"tasks", std::move(tasks)}, {"users", std::move(users)}};
}

Population population_from_json(const json& j) {
  const std::string where = "population";
  Population p;
  p.deadline = get<std::int64_t>(j, "deadline", where);
  std::vector<Point> pts;
  for (const auto& t : array_field(j, "tasks", where)) {
    if (!t.is_array() || t.size() != 2 || !t[0].is_number() || !t[1].is_number()) {
      throw SchemaError(where + ": task positions must be [x, y] pairs");
    }
    pts.push_back({t[0].get<double>(), t[1].get<double>()});
  }
  p.universe = TaskUniverse(std::move(pts));
  const auto& users = array_field(j, "users", where);
  for (std::size_t k = 0; k < users.size(); ++k) {
    const std::string w = where + ".users[" + std::to_string(k) + "]";
    UserProfile u;
    u.id = get<UserId>(users[k], "id", w);
    u.arrival_step = get<std::int64_t>(users[k], "arrival", w);
    u.true_cost = get<Money>(users[k], "cost", w);
    u.tasks = get<std::vector<TaskId>>(users[k], "tasks", w);
    p.users.push_back(std::move(u));
  }
  std::vector<bool> seen(p.users.size(), false);
  for (const auto& u : p.users) {
    if (u.id >= p.users.size() || seen[u.id]) {
      throw SchemaError(where + ": user ids must be 0..n-1 without repeats");
    }
    seen[u.id] = true;
  }
  return p;
}

json to_json(const Decision& d) {
  return {{"clock", d.clock},
          {"user", d.user},
          {"bid", d.bid.to_string()},
          {"offer", d.offer.to_string()},
          {"threshold", d.threshold},
          {"accepted", d.accepted},
          {"payment", d.payment.to_string()},
          {"allocated", d.allocated},
          {"reason", to_string(d.reason)}};
}

Decision decision_from_json(const json& j) {
  const std::string where = "decision";
  Decision d;
  d.clock = get<std::int64_t>(j, "clock", where);
  d.user = get<UserId>(j, "user", where);
  d.bid = get<Money>(j, "bid", where);
  d.offer = get<Money>(j, "offer", where);
  d.threshold = get<double>(j, "threshold", where);
  d.accepted = get<bool>(j, "accepted", where);
  d.payment = get<Money>(j, "payment", where);
  d.allocated = get<Value>(j, "allocated", where);
  try {
    d.reason = decision_reason_from_string(get<std::string>(j, "reason", where));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(where + ": " + e.what());
  }
  return d;
}

json to_json(const StageRecord& s) {
  return {{"stage", s.stage},
          {"t", s.t},
          {"stage_service", s.stage_service},
          {"threshold", s.threshold},
          {"sample_size", s.sample_size},
          {"selected", s.selected},
          {"value", s.value},
          {"spend", s.spend.to_string()},
          {"sample_shortfall", s.sample_shortfall},
          {"kept_previous", s.kept_previous}};
}

json to_json(const RunSpec& s) {
  json j = {{"mechanism", to_string(s.mechanism)}, {"required_service", s.required_service}};
  switch (s.mechanism) {
    case Mechanism::sos:
      j["delta"] = s.delta;
      j["nu"] = s.nu;
      j["epsilon"] = s.epsilon;
      j["allocation"] = to_string(s.allocation);
      break;
    case Mechanism::oms:
      j["winner_rule"] = to_string(s.winner_rule);
      j["payment_rule"] = to_string(s.payment_rule);
      j["bid_ceiling"] = s.bid_ceiling.to_string();
      break;
    case Mechanism::baseline:
      j["theta"] = s.theta.to_string();
      break;
  }
  return j;
}

RunSpec run_spec_from_json(const json& j) {
  const std::string where = "spec";
  RunSpec s;
  try {
    s.mechanism = mechanism_from_string(get<std::string>(j, "mechanism", where));
    s.required_service = get<double>(j, "required_service", where);
    switch (s.mechanism) {
      case Mechanism::sos:
        s.delta = get<double>(j, "delta", where);
        s.nu = get<double>(j, "nu", where);
        s.epsilon = get<double>(j, "epsilon", where);
        s.allocation = allocation_mode_from_string(get<std::string>(j, "allocation", where));
        break;
      case Mechanism::oms:
        s.winner_rule = winner_rule_from_string(get<std::string>(j, "winner_rule", where));
        s.payment_rule = payment_rule_from_string(get<std::string>(j, "payment_rule", where));
        s.bid_ceiling = get<Money>(j, "bid_ceiling", where);
        break;
      case Mechanism::baseline:
        s.theta = get<Money>(j, "theta", where);
        break;
    }
  } catch (const SchemaError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw SchemaError(where + ": " + e.what());
  }
  return s;
}

json to_json(const RunDocument& doc) {
  json bids = json::array();
  for (Money b : doc.bids) bids.push_back(b.to_string());
  json decisions = json::array();
  for (const auto& d : doc.result.outcome.trace) decisions.push_back(to_json(d));
  json stages = json::array();
  for (const auto& s : doc.result.stages) stages.push_back(to_json(s));
  const auto& o = doc.result.outcome;
  json outcome = {{"winners", o.winners},
                  {"total_payment", o.total_payment.to_string()},
                  {"achieved_value", o.achieved_value},
                  {"notes", o.notes}};
  return {{"schema", kRunSchema},
          {"run_id", doc.run_id},
          {"spec", to_json(doc.spec)},
          {"population", to_json(doc.population)},
          {"bids", std::move(bids)},
          {"outcome", std::move(outcome)},
          {"decisions", std::move(decisions)},
          {"stages", std::move(stages)}};
}

RecordedRun run_document_from_json(const json& j) {
  const std::string where = "run";
  if (!j.is_object()) throw SchemaError("run document must be a JSON object");
  const auto schema = get<std::string>(j, "schema", where);
  if (schema != kRunSchema) {
    throw SchemaError("unsupported schema '" + schema + "' (expected " +
                      std::string(kRunSchema) + ")");
  }
  RecordedRun r;
  r.doc.run_id = get<std::uint64_t>(j, "run_id", where);
  r.doc.spec = run_spec_from_json(field(j, "spec", where));
  r.doc.population = population_from_json(field(j, "population", where));
  for (const auto& b : array_field(j, "bids", where)) {
    if (!b.is_string()) throw SchemaError(where + ": bids must be decimal strings");
    r.doc.bids.push_back(Money::parse(b.get<std::string>()));
  }
  if (r.doc.bids.size() != r.doc.population.users.size()) {
    throw SchemaError(where + ": one bid per user required");
  }
  r.decisions = array_field(j, "decisions", where);
  for (const auto& d : r.decisions) (void)decision_from_json(d);
  r.stages = array_field(j, "stages", where);
  r.outcome = field(j, "outcome", where);
  if (!r.outcome.is_object()) throw SchemaError(where + ": outcome must be an object");
  return r;
}

}  // namespace crowdauction::app
