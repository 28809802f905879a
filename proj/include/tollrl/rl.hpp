#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tollrl/env.hpp"
#include "tollrl/nn.hpp"

namespace tollrl {

/// One episode: columns are toll periods k = 0..K-1.
struct Trajectory {
  Eigen::MatrixXd obs;      // raw policy inputs
  Eigen::MatrixXd actions;  // raw sampled tolls (before clipping)
  Eigen::MatrixXd applied;  // clipped tolls
  Eigen::VectorXd logp;     // under the behavior policy
  Eigen::VectorXd rewards;
  EpisodeStats stats;
  std::uint64_t seed = 0;
  int length() const { return static_cast<int>(rewards.size()); }
};

enum class ActionMode { sample, mean };

/// Runs `n` episodes, episode i seeded from (master_seed, first_index + i).
/// Results do not depend on `jobs`.
std::vector<Trajectory> collect(const std::shared_ptr<const Scenario>& scenario, const EnvConfig& env,
                                const GaussianPolicy& policy, int n, std::uint64_t master_seed,
                                std::uint64_t first_index, int jobs, ActionMode mode = ActionMode::sample);

/// Runs `n` episodes of any toll rule; `rule(env, obs)` returns the action.
using TollRule = std::function<std::vector<double>(const Env&, const Observation&)>;
std::vector<EpisodeStats> run_episodes(const std::shared_ptr<const Scenario>& scenario, const EnvConfig& env,
                                       const std::function<TollRule(std::uint64_t episode)>& make_rule, int n,
                                       std::uint64_t master_seed, std::uint64_t first_index, int jobs);

Eigen::VectorXd reward_to_go(const Eigen::VectorXd& rewards);

struct GaeConfig {
  double gamma = 0.99;
  double lam = 0.97;
};

/// `values` has one more entry than `rewards` (bootstrap, 0 at the end).
Eigen::VectorXd gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values, const GaeConfig& cfg);

/// Training samples flattened over every (trajectory, k).
struct Samples {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd actions;
  Eigen::VectorXd logp_old;
  Eigen::VectorXd adv;
  Eigen::VectorXd returns;  // reward-to-go targets
  int n_trajectories = 0;
  Eigen::Index size() const { return adv.size(); }
};

/// Advantages from GAE with `value` (nullptr means V = 0), optionally
/// normalized to zero mean and unit standard deviation over the batch.
Samples make_samples(const std::vector<Trajectory>& batch, const GaussianPolicy& policy, const Mlp* value,
                     const GaeConfig& gae_cfg, bool normalize_adv);

struct Surrogate {
  double value = 0.0;
  Eigen::VectorXd grad;
};

/// (1/N) sum over trajectories and k of logp(a_k) * A_k.
Surrogate vpg_surrogate(const GaussianPolicy& policy, const Samples& s);
/// Mean over samples of min(r A, clip(r, 1-eps, 1+eps) A).
Surrogate ppo_surrogate(const GaussianPolicy& policy, const Samples& s, double eps);
/// Mean squared error between V(obs) and `targets`; the value net reads
/// inputs divided by `scale`.
Surrogate value_loss(const Mlp& value, const Eigen::VectorXd& scale, const Eigen::MatrixXd& obs,
                     const Eigen::VectorXd& targets);

double ppo_clip(double ratio, double eps);
Eigen::VectorXd ppo_ratios(const GaussianPolicy& policy, const Samples& s);
/// Mean KL(behavior || current) for fixed-sigma Gaussians with the given means.
double mean_kl(const Eigen::MatrixXd& mean_old, const Eigen::MatrixXd& mean_new, double sigma);

void vpg_update(GaussianPolicy& policy, const Samples& s, double lr);

struct PpoReport {
  int iterations = 0;
  double final_kl = 0.0;
};
PpoReport ppo_update(GaussianPolicy& policy, Adam& opt, const Samples& s, double eps, int max_iters,
                     double target_kl);

/// Returns the loss before each of the `iters` Adam steps.
std::vector<double> fit_value(Mlp& value, Adam& opt, const Eigen::VectorXd& scale, const Eigen::MatrixXd& obs,
                              const Eigen::VectorXd& targets, int iters);

enum class Algo { vpg, ppo };
std::string to_string(Algo algo);
std::optional<Algo> parse_algo(const std::string& text);

struct TrainerConfig {
  Algo algo = Algo::ppo;
  int iterations = 100;
  int episodes_per_iter = 10;
  double policy_lr = 1e-4;
  double value_lr = 1e-3;
  int value_iters = 80;
  double clip_eps = 0.2;
  int ppo_policy_iters = 80;
  double target_kl = 0.015;
  GaeConfig gae;
  bool normalize_adv = true;
  std::vector<int> hidden{64, 64};
  double sigma = 0.5;
  double init_output_gain = 0.01;
  double init_toll_mean = 0.0;  // initial output bias, dollars
  int jobs = 1;
  void check() const;
};

struct CurveRow {
  int iteration = 0;
  double mean_objective = 0.0;
  double std_objective = 0.0;
  double min_objective = 0.0;
  double max_objective = 0.0;
  double mean_jah2 = 0.0;
  double mean_pct_violation = 0.0;
  double mean_revenue = 0.0;
  double mean_tstt = 0.0;
  double mean_jah1 = 0.0;
};

CurveRow summarize(int iteration, const std::vector<EpisodeStats>& stats);

struct TrainResult {
  std::vector<CurveRow> curve;
  GaussianPolicy initial;
  GaussianPolicy best;  // policy that produced the best iteration mean
  GaussianPolicy last;
  int best_iteration = -1;
  double best_objective = 0.0;
};

GaussianPolicy make_policy(const Env& env, const TrainerConfig& cfg, std::mt19937_64& rng);

TrainResult train(const TrainerConfig& cfg, const std::shared_ptr<const Scenario>& scenario, const EnvConfig& env,
                  std::uint64_t seed, const std::function<void(const CurveRow&)>& progress = {});

}  // namespace tollrl
