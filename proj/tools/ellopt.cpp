// Command-line front end: run a TOML config or named presets.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include "ellopt/config.hpp"
#include "ellopt/runner.hpp"

namespace {

struct Job {
  ellopt::ExperimentConfig config;
  ellopt::RunResult result;
};

// Runs jobs on up to `jobs` threads; returns the worst exit code.
int run_jobs(std::vector<Job>& todo, std::size_t jobs) {
  std::atomic<std::size_t> next{0};
  std::mutex print;
  auto worker = [&] {
    for (std::size_t i = next++; i < todo.size(); i = next++) {
      todo[i].result = ellopt::run(todo[i].config);
      std::lock_guard lock(print);
      const auto& r = todo[i].result;
      if (!r.error.empty()) std::cerr << todo[i].config.name << ": " << r.error << '\n';
      if (!r.summary.empty()) std::cout << r.summary << "output: " << r.output_dir.string() << "\n\n";
    }
  };
  const std::size_t n = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(todo.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int worst = 0;
  for (const Job& j : todo) worst = std::max(worst, j.result.exit_code);
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal coefficients, potentials and sources for elliptic problems"};
  app.require_subcommand(1);
  app.fallthrough();
  std::size_t jobs = 1;
  double tol = 0.0;
  app.add_option("--jobs", jobs, "Number of experiments run concurrently")->check(CLI::PositiveNumber);
  app.add_option("--tol", tol, "Override the solver tolerance")->check(CLI::PositiveNumber);

  auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a TOML file");
  std::vector<std::string> config_paths;
  run_cmd->add_option("config", config_paths, "Config file(s)")->required();

  auto* preset_cmd = app.add_subcommand("preset", "Run named presets");
  preset_cmd->set_help_flag("--help", "Print this help message and exit");
  std::vector<std::string> names;
  double h = 0.0;
  std::string out_dir;
  preset_cmd->add_option("name", names, "Preset name(s), or 'all'")->required();
  preset_cmd->add_option("--h", h, "Override the grid spacing")->check(CLI::PositiveNumber);
  preset_cmd->add_option("--out", out_dir, "Output root directory");

  app.add_subcommand("list-presets", "List the presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ellopt::exit_config;
  }

  if (app.got_subcommand("list-presets")) {
    std::cout << ellopt::list_presets();
    return 0;
  }

  std::vector<Job> todo;
  if (app.got_subcommand(run_cmd)) {
    for (const auto& path : config_paths) {
      try {
        todo.push_back({ellopt::load_config(path), {}});
      } catch (const ellopt::ConfigError& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return ellopt::exit_config;
      }
    }
  } else {
    if (names.size() == 1 && names[0] == "all") {
      names.clear();
      for (const auto& p : ellopt::presets()) names.push_back(p.name);
    }
    for (const auto& name : names) {
      const ellopt::Preset* p = ellopt::find_preset(name);
      if (!p) {
        std::cerr << "unknown preset '" << name << "'; see list-presets\n";
        return ellopt::exit_config;
      }
      ellopt::ExperimentConfig cfg = p->config;
      if (h > 0.0) cfg.h = h;
      if (!out_dir.empty()) cfg.output_dir = (std::filesystem::path(out_dir) / name).string();
      todo.push_back({cfg, {}});
    }
  }
  if (tol > 0.0) {
    for (Job& j : todo) j.config.tol = tol;
  }
  return run_jobs(todo, jobs);
}
