#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>

#include "tollrl/errors.hpp"
#include "tollrl/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dynamic managed-lane toll pricing experiments"};
  app.set_version_flag("--version", std::string(tollrl::kVersion));
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  const std::map<std::string, std::string> blurb{
      {"simulate", "run episodes under fixed, heuristic or checkpoint tolls"},
      {"train", "train a toll policy for every configured seed"},
      {"sweep-heuristic", "grid over the feedback heuristic's eta and p"},
      {"random-profiles", "score random toll profiles (revenue vs TSTT)"},
      {"eval-transfer", "evaluate a trained policy on a modified scenario"},
      {"compare", "trained policy against the best heuristic cell"},
  };
  for (const auto& name : tollrl::command_names()) {
    auto it = blurb.find(name);
    CLI::App* sub = app.add_subcommand(name, it == blurb.end() ? "" : it->second);
    sub->add_option("--config", config_path, "experiment JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed, overrides the config");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "output directory, overrides the config");
  }
  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    tollrl::ExperimentConfig cfg = tollrl::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (jobs) cfg.jobs = cfg.trainer.jobs = *jobs;
    if (out) cfg.out_dir = *out;
    return tollrl::run_command(command, cfg, std::cerr);
  } catch (const tollrl::Error& e) {
    std::cerr << "tollrl " << command << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "tollrl " << command << ": " << e.what() << "\n";
    return 1;
  }
}
