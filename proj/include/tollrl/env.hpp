#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tollrl/ctm.hpp"
#include "tollrl/scenario.hpp"

namespace tollrl {

struct RewardSpec {
  enum class Kind { revmax, tsttmin, joint };
  Kind kind = Kind::revmax;
  double lambda = 0.1325;  // hr/$, joint only

  // Optional end-of-episode penalty when JAH1 exceeds a threshold.
  struct Threshold {
    double jah1 = 700.0;      // vehicles
    double penalty = -3000.0;  // added to the last reward
  };
  std::optional<Threshold> threshold;

  /// Reward for a toll period with `revenue` dollars and `tstt` vehicle-hours.
  double period_reward(double revenue, double tstt) const;
  void check() const;
};

std::string to_string(RewardSpec::Kind kind);
std::optional<RewardSpec::Kind> parse_reward_kind(const std::string& text);

struct EnvConfig {
  double sigma_o = 50.0;  // vehicles
  double beta_min = 0.1;
  double beta_max = 4.0;
  RewardSpec reward;
  double min_speed_limit = 45.0;  // mph, for %-violation
  double crawl_speed = 1.0;       // mph floor for travel times
  bool time_feature = false;      // append k/K to the policy input
  bool record_cells = false;      // keep every cell snapshot for time-space output
  void check() const;
};

struct Observation {
  std::vector<double> counts;  // noisy vehicles on each observed link
  int toll_step = 0;
};

struct StepInfo {
  std::vector<double> tolls;       // applied (clipped) tolls
  std::vector<double> toll_flows;  // vehicles entering each toll link this period
  std::vector<double> link_counts; // true vehicles on every link at the period end
  double revenue = 0.0;
  double tstt = 0.0;               // vehicle-hours this period, queues included
  double penalty = 0.0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Per-episode record sufficient to recompute every statistic.
struct EpisodeTrace {
  struct TollRow {
    int k = 0;
    std::vector<double> tolls;
    double reward = 0.0;
    double revenue = 0.0;  // this period
    double tstt = 0.0;     // this period, hours
  };
  struct Point {
    int t = 0;
    double gpl = 0.0;  // vehicles on GPL cells
    double ml = 0.0;   // vehicles on ML cells
    double zeta = 0.0;
    int violations = 0;  // ML cells above the speed-limit density
    double queue = 0.0;
  };
  int ml_cell_count = 0;
  double throughput = 0.0;
  double penalty = 0.0;
  std::vector<TollRow> tolls;
  std::vector<Point> points;  // every simulation point t = 0..T/dt

  void write_csv(std::ostream& out) const;
  static EpisodeTrace read_csv(std::istream& in);
};

struct EpisodeStats {
  double revenue = 0.0;       // $
  double tstt = 0.0;          // vehicle-hours
  double jah1 = 0.0;          // vehicles
  double jah2 = 0.0;          // in [-1, 1]
  double pct_violation = 0.0; // %
  double throughput = 0.0;    // vehicles that reached their destination
  double objective = 0.0;     // sum of rewards, penalty included
  std::vector<double> rewards;
};

EpisodeStats episode_stats(const EpisodeTrace& trace);

/// Finite-horizon toll-pricing episode over a shared scenario.
class Env {
 public:
  Env(std::shared_ptr<const Scenario> scenario, EnvConfig config);

  Observation reset(std::uint64_t seed);
  /// Clips `action`, holds it for one toll period and advances the network.
  /// Throws SimulationError("EpisodeFinished") after the last period.
  StepResult step(std::span<const double> action);

  bool done() const { return k_ >= scenario_->network.grid.toll_steps(); }
  int toll_step() const { return k_; }
  int horizon() const { return scenario_->network.grid.toll_steps(); }
  int action_dim() const { return scenario_->action_dim(); }
  int obs_dim() const;

  /// Raw policy input: observed counts, plus k/K when the time feature is on.
  std::vector<double> features(const Observation& obs) const;
  /// Per-input divisors for `features`: jam vehicles per link, 1 for time.
  std::vector<double> feature_scales() const;

  std::vector<double> clip(std::span<const double> action) const;
  /// True vehicles on each toll link's ML set (heuristic detectors).
  std::vector<double> ml_set_counts() const;

  const CellState& state() const { return state_; }
  const EpisodeTrace& trace() const { return trace_; }
  EpisodeStats stats() const { return episode_stats(trace_); }
  const std::vector<std::vector<double>>& cell_snapshots() const { return snapshots_; }
  const Scenario& scenario() const { return *scenario_; }
  const EnvConfig& config() const { return config_; }

 private:
  Observation observe();
  void record_point();

  std::shared_ptr<const Scenario> scenario_;
  EnvConfig config_;
  std::vector<double> violation_limit_;  // per ML cell, vehicles
  std::mt19937_64 demand_rng_;
  std::mt19937_64 obs_rng_;
  CellState state_;
  CellState next_;
  FlowRecord record_;
  Splits splits_;
  std::vector<double> inflows_;
  std::vector<double> link_times_;
  EpisodeTrace trace_;
  std::vector<std::vector<double>> snapshots_;
  double jah1_ = 0.0;
  int k_ = 0;
  bool started_ = false;
};

/// Writes one row per toll period: k, tolls, reward, cumulative revenue and
/// cumulative TSTT.
void write_episode_csv(std::ostream& out, const EpisodeTrace& trace);

/// Time-space rows (t, cell id, total occupancy, per-class occupancy).
void write_cell_trace(std::ostream& out, const Scenario& scenario, const std::vector<std::vector<double>>& snapshots);

}  // namespace tollrl
