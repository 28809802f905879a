#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tollrl/env.hpp"
#include "tollrl/heuristic.hpp"
#include "tollrl/rl.hpp"
#include "tollrl/scenario.hpp"

namespace tollrl {

struct SimulateSpec {
  std::string tolls = "fixed";  // fixed | heuristic | checkpoint
  std::vector<double> fixed;    // one per toll link or a single value for all; empty means beta_min
  double eta = 0.5;
  double p_gain = 0.05;
  std::string checkpoint;
  std::string policy_mode = "mean";  // mean | sample
  int episodes = 1;
  bool cell_trace = false;
};

struct SweepSpec {
  std::vector<double> etas{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> gains{0.01, 0.0325, 0.055, 0.0775, 0.1};
  int seeds = 10;
  HeuristicConfig base;
};

struct TransferSpec {
  std::string checkpoint;
  std::string target_json;  // merge patch applied to this config, serialized
  int runs = 100;
  std::string policy_mode = "mean";
};

struct CompareSpec {
  std::string checkpoint;
  int episodes = 30;
  std::string policy_mode = "mean";
  std::string objective = "revenue";  // revenue | tstt, picks the best heuristic cell
};

struct ExperimentConfig {
  std::string path;      // file it came from, empty for inline text
  std::string base_dir;  // relative paths resolve against this
  std::string canonical; // normalized JSON used for the hash
  std::string network_path;
  std::string demand_path;
  std::string vot_path;
  double sigma_d = 0.0;
  ScenarioOptions scenario;
  EnvConfig env;
  TrainerConfig trainer;
  std::vector<std::uint64_t> train_seeds{1, 2, 3};
  SweepSpec sweep;
  SimulateSpec simulate;
  int random_profiles = 1000;
  TransferSpec transfer;
  CompareSpec compare;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int jobs = 1;

  /// 16 hex digits of FNV-1a over the canonical JSON.
  std::string hash() const;
  std::string resolve(const std::string& p) const;
};

/// Parses JSON text; file paths inside are relative to `base_dir`.
ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir);
/// Throws ConfigError("Io") or ConfigError("ConfigInvalid").
ExperimentConfig load_config(const std::string& path);
/// `patch_json` is an RFC 7386 merge patch over `base`.
ExperimentConfig patch_config(const ExperimentConfig& base, const std::string& patch_json);

std::shared_ptr<const Scenario> build_scenario(const ExperimentConfig& cfg);

}  // namespace tollrl
