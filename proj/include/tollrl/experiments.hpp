#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "tollrl/config.hpp"
#include "tollrl/env.hpp"
#include "tollrl/heuristic.hpp"
#include "tollrl/nn.hpp"
#include "tollrl/rl.hpp"

namespace tollrl {

inline constexpr const char* kVersion = TOLLRL_VERSION;

/// Evaluation episodes start at this index so they never reuse training or
/// sweep demand draws.
inline constexpr std::uint64_t kEvalOffset = 1000000;

/// First line of every artifact, newline included.
std::string artifact_header(const ExperimentConfig& cfg, const std::string& command);

/// Tolls held constant for the whole episode; a single value applies to
/// every toll link.
TollRule fixed_rule(const Scenario& scenario, const std::vector<double>& tolls);
/// Piecewise-constant tolls, each period uniform in [beta_min, beta_max].
TollRule random_rule(const EnvConfig& env, std::uint64_t master_seed, std::uint64_t episode);
/// Same actions as `collect` for the same seeds.
TollRule policy_rule(const GaussianPolicy& policy, ActionMode mode, std::uint64_t master_seed, std::uint64_t episode);

ActionMode parse_action_mode(const std::string& text);

std::vector<EpisodeStats> random_profiles(const std::shared_ptr<const Scenario>& scenario, const EnvConfig& env,
                                          int n, std::uint64_t master_seed, int jobs);

struct MetricSummary {
  double mean = 0.0, min = 0.0, max = 0.0;
};
struct StatsSummary {
  int n = 0;
  MetricSummary revenue, tstt, jah1, jah2, pct_violation, throughput, objective;
};
StatsSummary summarize_stats(const std::vector<EpisodeStats>& stats);

void write_stats_csv(std::ostream& out, const std::vector<EpisodeStats>& stats);
void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& curve);
void write_summary_csv(std::ostream& out, const StatsSummary& s);

struct CompareRow {
  std::string method;  // drl | heuristic
  double eta = 0.0, p = 0.0;  // heuristic cell, 0 for drl
  StatsSummary stats;
};
/// DRL checkpoint against the best cell of the configured heuristic sweep,
/// both on the same evaluation episodes.
std::vector<CompareRow> compare(const ExperimentConfig& cfg, const std::shared_ptr<const Scenario>& scenario,
                                const GaussianPolicy& policy);
void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows);

/// Runs the policy on the transfer target; refuses a different observation
/// or action size.
std::vector<EpisodeStats> eval_transfer(const ExperimentConfig& cfg, const GaussianPolicy& policy);

struct TrainRun {
  std::uint64_t seed = 0;
  TrainResult result;
};
std::vector<TrainRun> train_all(const ExperimentConfig& cfg, const std::shared_ptr<const Scenario>& scenario,
                                std::ostream* log);

/// Executes one subcommand, writing artifacts under cfg.out_dir. Returns the
/// process exit status.
int run_command(const std::string& command, const ExperimentConfig& cfg, std::ostream& log);

const std::vector<std::string>& command_names();

}  // namespace tollrl
