#include <fstream>
#include <ostream>

#include "commands.hpp"

namespace crowdauction::app {

namespace fs = std::filesystem;

std::vector<fs::path> generate_fixtures(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const fs::path dir(config.out_dir);
  fs::create_directories(dir);
  std::vector<fs::path> files;
  const auto open = [&](const fs::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    files.push_back(p);
    return out;
  };
  for (std::size_t li = 0; li < config.arrival_rates.size(); ++li) {
    for (std::size_t rep = 0; rep < config.replications; ++rep) {
      const auto seed = population_seed(config, li, rep);
      const auto pop = gen_population(scenario_at(config, li), seed);
      const std::string stem = "population-l" + std::to_string(li) + "-r" + std::to_string(rep);
      if (config.format == OutputFormat::json) {
        auto out = open(dir / (stem + ".json"));
        json j = to_json(pop);
        j["schema"] = "crowdauction.population/1";
        j["seed"] = seed;
        j["arrival_rate"] = config.arrival_rates[li];
        out << j.dump(1) << '\n';
      } else {
        {
          auto out = open(dir / (stem + "-users.csv"));
          CsvWriter w(out, kUsersCsv);
          for (const auto& u : pop.users) {
            std::string tasks;
            for (TaskId t : u.tasks) tasks += (tasks.empty() ? "" : " ") + std::to_string(t);
            w.row({std::to_string(u.id), std::to_string(u.arrival_step), u.true_cost.to_string(),
                   tasks});
          }
        }
        auto out = open(dir / (stem + "-tasks.csv"));
        CsvWriter w(out, kTasksCsv);
        const auto pos = pop.universe.positions();
        for (TaskId t = 0; t < pos.size(); ++t) {
          w.row({std::to_string(t), format_double(pos[t].x), format_double(pos[t].y)});
        }
      }
    }
  }
  log << "wrote " << files.size() << " fixture files to " << dir.string() << "\n";
  return files;
}

}  // namespace crowdauction::app
