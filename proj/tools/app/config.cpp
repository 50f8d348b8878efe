#include "config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace crowdauction::app {

ConfigError::ConfigError(const std::string& file, int line, int column,
                         const std::string& message)
    : std::runtime_error(file + ":" + std::to_string(line) + ":" + std::to_string(column) +
                         ": " + message),
      line_(line),
      column_(column) {}

std::string_view to_string(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "json"; }

OutputFormat output_format_from_string(std::string_view s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw std::invalid_argument("unknown format '" + std::string(s) + "' (expected csv or json)");
}

ScenarioConfig VerifyConfig::default_scenario() {
  ScenarioConfig s;
  s.region_width = 30;
  s.region_height = 30;
  s.task_count = 40;
  s.sensing_radius = 6;
  s.deadline = 64;
  s.arrival_rate = 0.15;
  return s;
}

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& message) const {
    const auto m = at.Mark();
    throw ConfigError(source_, m.line + 1, m.column + 1, message);
  }

  void expect_map(const YAML::Node& n, const std::string& what) const {
    if (!n.IsMap()) fail(n, what + " must be a mapping");
  }

  void allow_keys(const YAML::Node& n, const std::set<std::string>& keys,
                  const std::string& what) const {
    for (auto it = n.begin(); it != n.end(); ++it) {
      const auto key = it->first.as<std::string>();
      if (!keys.count(key)) {
        std::string list;
        for (const auto& k : keys) list += (list.empty() ? "" : ", ") + k;
        fail(it->first, "unknown key '" + key + "' in " + what + " (allowed: " + list + ")");
      }
    }
  }

  template <class T>
  T scalar(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) fail(n, "'" + key + "' must be a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "'" + key + "' has the wrong type: '" + n.Scalar() + "'");
    }
  }

  double positive(const YAML::Node& n, const std::string& key) const {
    const double v = scalar<double>(n, key);
    if (!(v > 0) || !std::isfinite(v)) fail(n, "'" + key + "' must be a positive number");
    return v;
  }

  double at_least(const YAML::Node& n, const std::string& key, double lo) const {
    const double v = scalar<double>(n, key);
    if (!(v >= lo) || !std::isfinite(v)) {
      fail(n, "'" + key + "' must be >= " + std::to_string(lo));
    }
    return v;
  }

  std::size_t count(const YAML::Node& n, const std::string& key, std::size_t lo) const {
    const auto v = scalar<long long>(n, key);
    if (v < static_cast<long long>(lo)) {
      fail(n, "'" + key + "' must be an integer >= " + std::to_string(lo));
    }
    return static_cast<std::size_t>(v);
  }

  Money money(const YAML::Node& n, const std::string& key) const {
    const double v = positive(n, key);
    return Money::from_double(v);
  }

  /// A scalar or a non-empty list of scalars, each checked by `one`.
  template <class F>
  std::vector<double> list(const YAML::Node& n, const std::string& key, F one) const {
    std::vector<double> out;
    if (n.IsSequence()) {
      if (n.size() == 0) fail(n, "'" + key + "' must not be empty");
      for (const auto& e : n) out.push_back(one(e, key));
    } else {
      out.push_back(one(n, key));
    }
    return out;
  }

  template <class E, class F>
  E choice(const YAML::Node& n, const std::string& key, F parse) const {
    const auto s = scalar<std::string>(n, key);
    try {
      return parse(s);
    } catch (const std::invalid_argument& e) {
      fail(n, e.what());
    }
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

void read_scenario(const Reader& r, const YAML::Node& n, ScenarioConfig& s,
                   std::vector<double>* arrival_rates) {
  r.expect_map(n, "scenario");
  r.allow_keys(n,
               {"deadline", "arrival_rate", "cost_low", "cost_high", "region_width",
                "region_height", "task_count", "sensing_radius", "model", "population"},
               "scenario");
  for (auto it = n.begin(); it != n.end(); ++it) {
    const auto key = it->first.as<std::string>();
    const YAML::Node& v = it->second;
    if (key == "deadline") {
      s.deadline = static_cast<std::int64_t>(r.count(v, key, 1));
    } else if (key == "arrival_rate") {
      const auto rates = r.list(v, key, [&](const YAML::Node& e, const std::string& k) {
        const double x = r.positive(e, k);
        if (x > 1) r.fail(e, "'" + k + "' must be in (0, 1]");
        return x;
      });
      if (!arrival_rates && rates.size() != 1) {
        r.fail(v, "'arrival_rate' must be a single value here");
      }
      s.arrival_rate = rates.front();
      if (arrival_rates) *arrival_rates = rates;
    } else if (key == "cost_low") {
      s.cost_low = r.positive(v, key);
    } else if (key == "cost_high") {
      s.cost_high = r.positive(v, key);
    } else if (key == "region_width") {
      s.region_width = r.positive(v, key);
    } else if (key == "region_height") {
      s.region_height = r.positive(v, key);
    } else if (key == "task_count") {
      s.task_count = r.count(v, key, 1);
    } else if (key == "sensing_radius") {
      s.sensing_radius = r.positive(v, key);
    } else if (key == "model") {
      s.model = r.choice<UserModel>(v, key, user_model_from_string);
    } else if (key == "population") {
      s.population = r.count(v, key, 1);
    }
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(n, e.what());
  }
}

void read_verify(const Reader& r, const YAML::Node& n, VerifyConfig& v) {
  r.expect_map(n, "verify");
  r.allow_keys(n,
               {"scenarios", "max_users", "scenario", "required_service",
                "oms_service_fraction", "submodular_trials", "grid_points", "sweep_max_users",
                "expected_truthful"},
               "verify");
  for (auto it = n.begin(); it != n.end(); ++it) {
    const auto key = it->first.as<std::string>();
    const YAML::Node& x = it->second;
    if (key == "scenarios") {
      v.scenarios = r.count(x, key, 1);
    } else if (key == "max_users") {
      v.max_users = r.count(x, key, 1);
      if (v.max_users > 20) r.fail(x, "'max_users' must be <= 20");
    } else if (key == "scenario") {
      read_scenario(r, x, v.scenario, nullptr);
    } else if (key == "required_service") {
      v.required_service = r.positive(x, key);
    } else if (key == "oms_service_fraction") {
      v.oms_service_fraction = r.positive(x, key);
      if (v.oms_service_fraction > 1) r.fail(x, "'oms_service_fraction' must be in (0, 1]");
    } else if (key == "submodular_trials") {
      v.submodular_trials = r.count(x, key, 1);
    } else if (key == "grid_points") {
      v.grid_points = r.count(x, key, 2);
    } else if (key == "sweep_max_users") {
      v.sweep_max_users = r.count(x, key, 0);
    } else if (key == "expected_truthful") {
      v.expected_truthful = r.scalar<bool>(x, key);
    }
  }
}

ExperimentConfig read_root(const Reader& r, const YAML::Node& root) {
  ExperimentConfig c;
  c.source = r.source();
  if (!root || root.IsNull()) return c;
  r.expect_map(root, "the configuration");
  r.allow_keys(root,
               {"seed", "replications", "workers", "mechanism", "scenario",
                "required_service", "sos", "oms", "baseline", "frugality", "output",
                "verify"},
               "the configuration");
  for (auto it = root.begin(); it != root.end(); ++it) {
    const auto key = it->first.as<std::string>();
    const YAML::Node& v = it->second;
    if (key == "seed") {
      c.seed = r.scalar<std::uint64_t>(v, key);
    } else if (key == "replications") {
      c.replications = r.count(v, key, 1);
    } else if (key == "workers") {
      c.workers = r.count(v, key, 1);
    } else if (key == "mechanism") {
      c.mechanism = r.choice<Mechanism>(v, key, mechanism_from_string);
    } else if (key == "scenario") {
      read_scenario(r, v, c.scenario, &c.arrival_rates);
    } else if (key == "required_service") {
      c.required_service = r.list(v, key, [&](const YAML::Node& e, const std::string& k) {
        return r.positive(e, k);
      });
    } else if (key == "sos") {
      r.expect_map(v, "sos");
      r.allow_keys(v, {"delta", "nu", "epsilon", "allocation"}, "sos");
      for (auto s = v.begin(); s != v.end(); ++s) {
        const auto k = s->first.as<std::string>();
        if (k == "delta") {
          c.deltas = r.list(s->second, k, [&](const YAML::Node& e, const std::string& kk) {
            return r.at_least(e, kk, 1);
          });
        } else if (k == "nu") {
          c.spec.nu = r.at_least(s->second, k, 1);
        } else if (k == "epsilon") {
          c.spec.epsilon = r.positive(s->second, k);
        } else if (k == "allocation") {
          c.spec.allocation = r.choice<AllocationMode>(s->second, k, allocation_mode_from_string);
        }
      }
    } else if (key == "oms") {
      r.expect_map(v, "oms");
      r.allow_keys(v, {"winner_rule", "payment_rule", "bid_ceiling"}, "oms");
      for (auto s = v.begin(); s != v.end(); ++s) {
        const auto k = s->first.as<std::string>();
        if (k == "winner_rule") {
          c.spec.winner_rule = r.choice<WinnerRule>(s->second, k, winner_rule_from_string);
        } else if (k == "payment_rule") {
          c.spec.payment_rule = r.choice<PaymentRule>(s->second, k, payment_rule_from_string);
        } else if (k == "bid_ceiling") {
          c.spec.bid_ceiling = r.money(s->second, k);
        }
      }
    } else if (key == "baseline") {
      r.expect_map(v, "baseline");
      r.allow_keys(v, {"theta"}, "baseline");
      if (v["theta"]) c.spec.theta = r.money(v["theta"], "theta");
    } else if (key == "frugality") {
      r.expect_map(v, "frugality");
      r.allow_keys(v, {"gamma"}, "frugality");
      if (v["gamma"]) c.gamma = r.positive(v["gamma"], "gamma");
    } else if (key == "output") {
      r.expect_map(v, "output");
      r.allow_keys(v, {"dir", "format", "decisions", "run_documents"}, "output");
      for (auto s = v.begin(); s != v.end(); ++s) {
        const auto k = s->first.as<std::string>();
        if (k == "dir") {
          c.out_dir = r.scalar<std::string>(s->second, k);
        } else if (k == "format") {
          c.format = r.choice<OutputFormat>(s->second, k, output_format_from_string);
        } else if (k == "decisions") {
          c.write_decisions = r.scalar<bool>(s->second, k);
        } else if (k == "run_documents") {
          c.write_run_documents = r.scalar<bool>(s->second, k);
        }
      }
    } else if (key == "verify") {
      read_verify(r, v, c.verify);
    }
  }
  c.spec.mechanism = c.mechanism;
  if (c.scenario.model == UserModel::secretary && c.arrival_rates.size() > 1) {
    r.fail(root["scenario"]["arrival_rate"],
           "an arrival_rate list has no effect under the secretary model");
  }
  return c;
}

}  // namespace

void ExperimentConfig::validate() const {
  const auto bad = [&](const std::string& m) { throw ConfigError(source + ": " + m); };
  if (replications < 1) bad("replications must be >= 1");
  if (workers < 1) bad("workers must be >= 1");
  if (required_service.empty()) bad("required_service must not be empty");
  for (double r : required_service) {
    if (!(r > 0)) bad("required_service values must be positive");
  }
  for (double a : arrival_rates) {
    if (!(a > 0 && a <= 1)) bad("arrival_rate values must be in (0, 1]");
  }
  try {
    scenario.validate();
    verify.scenario.validate();
  } catch (const std::invalid_argument& e) {
    bad(e.what());
  }
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  const Reader reader(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, e.mark.column + 1, e.msg);
  }
  ExperimentConfig c = read_root(reader, root);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open configuration file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

void apply(ExperimentConfig& config, const Overrides& o) {
  if (o.seed) config.seed = *o.seed;
  if (o.out_dir) config.out_dir = *o.out_dir;
  if (o.workers) config.workers = *o.workers;
  if (o.format) config.format = *o.format;
  config.validate();
}

}  // namespace crowdauction::app
