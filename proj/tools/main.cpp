#include <CLI11.hpp>

#include <iostream>

#include "app/commands.hpp"

using namespace crowdauction::app;

namespace {

constexpr int kOk = 0;
constexpr int kPropertyFailure = 1;
constexpr int kConfigError = 2;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  std::optional<std::string> format;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
  auto* opt = cmd->add_option("--config", f.config, "YAML experiment file");
  if (config_required) opt->required();
  cmd->add_option("--seed", f.seed, "root seed (overrides the file)");
  cmd->add_option("--out", f.out, "output directory (overrides the file)");
  cmd->add_option("--workers", f.workers, "parallel replications")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--format", f.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  Overrides o;
  o.seed = f.seed;
  o.out_dir = f.out;
  o.workers = f.workers;
  if (f.format) o.format = output_format_from_string(*f.format);
  apply(c, o);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truthful service-constrained procurement auctions for crowd sensing"};
  app.require_subcommand(1);

  CommonFlags run_flags, verify_flags, gen_flags;
  auto* run = app.add_subcommand("run", "run an experiment sweep");
  add_common(run, run_flags, true);
  auto* verify = app.add_subcommand("verify", "run the property suites");
  add_common(verify, verify_flags, false);
  auto* gen = app.add_subcommand("gen", "emit scenario fixtures");
  add_common(gen, gen_flags, false);
  auto* rep = app.add_subcommand("replay", "re-execute a recorded run and diff it");
  std::string trace;
  std::optional<std::string> replay_out;
  rep->add_option("trace", trace, "run document (JSON)")->required();
  rep->add_option("--out", replay_out, "directory for replay_diff.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) {
      const auto config = resolve(run_flags);
      const auto result = run_experiment(config, std::cerr);
      std::size_t documents = 0;
      for (const auto& f : result.files) {
        if (f.parent_path().filename() == "runs") {
          ++documents;
        } else {
          std::cout << f.string() << "\n";
        }
      }
      if (documents > 0) {
        std::cout << documents << " run document(s) in "
                  << (std::filesystem::path(config.out_dir) / "runs").string() << "\n";
      }
      return kOk;
    }
    if (*verify) {
      const auto config = resolve(verify_flags);
      const auto result = verify_suite(config, std::cerr);
      for (const auto& f : result.files) std::cout << f.string() << "\n";
      std::cout << (result.passed ? "PASS" : "FAIL") << "\n";
      return result.passed ? kOk : kPropertyFailure;
    }
    if (*gen) {
      const auto config = resolve(gen_flags);
      for (const auto& f : generate_fixtures(config, std::cerr)) std::cout << f.string() << "\n";
      return kOk;
    }
    if (*rep) {
      const auto recorded = read_run_document(trace);
      const auto result = replay(recorded);
      json diff = json::array();
      for (const auto& d : result.diffs) {
        diff.push_back({{"section", d.section},
                        {"index", d.index},
                        {"recorded", d.recorded},
                        {"replayed", d.replayed}});
        std::cout << d.section << "[" << d.index << "]\n  recorded: " << d.recorded.dump()
                  << "\n  replayed: " << d.replayed.dump() << "\n";
      }
      if (replay_out) {
        std::filesystem::create_directories(*replay_out);
        std::ofstream out(std::filesystem::path(*replay_out) / "replay_diff.json",
                          std::ios::binary | std::ios::trunc);
        out << json{{"trace", trace}, {"diffs", diff}}.dump(1) << '\n';
      }
      std::cout << result.diffs.size() << " differing row(s)\n";
      return result.diffs.empty() ? kOk : kPropertyFailure;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}
