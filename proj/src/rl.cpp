#include "tollrl/rl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tollrl/errors.hpp"
#include "tollrl/parallel.hpp"
#include "tollrl/rng.hpp"

namespace tollrl {

namespace {

Eigen::VectorXd to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void require_finite(const Eigen::VectorXd& g, const char* what) {
  if (!g.allFinite()) throw NumericError("NonFiniteGradient", what);
}

}  // namespace

// ---------------------------------------------------------------- rollouts

std::vector<Trajectory> collect(const std::shared_ptr<const Scenario>& scenario, const EnvConfig& env_cfg,
                                const GaussianPolicy& policy, int n, std::uint64_t master_seed,
                                std::uint64_t first_index, int jobs, ActionMode mode) {
  std::vector<Trajectory> out(std::max(n, 0));
  parallel_for(n, jobs, [&](int i) {
    Env env(scenario, env_cfg);
    if (policy.mlp.input_size() != env.obs_dim() || policy.mlp.output_size() != env.action_dim())
      throw ConfigError("ShapeMismatch", "policy dimensions do not match the environment");
    std::uint64_t index = first_index + static_cast<std::uint64_t>(i);
    auto rng = make_rng(master_seed, index, Stream::policy);
    Trajectory& tr = out[i];
    tr.seed = derive_seed(master_seed, index, Stream::demand);
    const int K = env.horizon();
    tr.obs.resize(env.obs_dim(), K);
    tr.actions.resize(env.action_dim(), K);
    tr.applied.resize(env.action_dim(), K);
    tr.logp.resize(K);
    tr.rewards.resize(K);
    Observation obs = env.reset(tr.seed);
    for (int k = 0; k < K; ++k) {
      Eigen::VectorXd x = to_vec(env.features(obs));
      Eigen::VectorXd mu = policy.mean(x);
      Eigen::VectorXd a = mode == ActionMode::sample ? policy.sample(mu, rng) : mu;
      StepResult res = env.step(std::span<const double>(a.data(), static_cast<size_t>(a.size())));
      tr.obs.col(k) = x;
      tr.actions.col(k) = a;
      tr.applied.col(k) = to_vec(res.info.tolls);
      tr.logp[k] = policy.logp(a, mu);
      tr.rewards[k] = res.reward;
      obs = std::move(res.observation);
    }
    tr.stats = env.stats();
  });
  return out;
}

std::vector<EpisodeStats> run_episodes(const std::shared_ptr<const Scenario>& scenario, const EnvConfig& env_cfg,
                                       const std::function<TollRule(std::uint64_t episode)>& make_rule, int n,
                                       std::uint64_t master_seed, std::uint64_t first_index, int jobs) {
  std::vector<EpisodeStats> out(std::max(n, 0));
  parallel_for(n, jobs, [&](int i) {
    std::uint64_t index = first_index + static_cast<std::uint64_t>(i);
    Env env(scenario, env_cfg);
    TollRule rule = make_rule(index);
    Observation obs = env.reset(derive_seed(master_seed, index, Stream::demand));
    while (!env.done()) {
      std::vector<double> a = rule(env, obs);
      obs = env.step(a).observation;
    }
    out[i] = env.stats();
  });
  return out;
}

// ---------------------------------------------------------------- returns

Eigen::VectorXd reward_to_go(const Eigen::VectorXd& r) {
  Eigen::VectorXd out(r.size());
  double acc = 0.0;
  for (Eigen::Index k = r.size(); k-- > 0;) {
    acc += r[k];
    out[k] = acc;
  }
  return out;
}

Eigen::VectorXd gae(const Eigen::VectorXd& r, const Eigen::VectorXd& v, const GaeConfig& cfg) {
  if (v.size() != r.size() + 1) throw NumericError("ShapeMismatch", "values need one bootstrap entry");
  Eigen::VectorXd adv(r.size());
  double acc = 0.0;
  for (Eigen::Index k = r.size(); k-- > 0;) {
    double delta = r[k] + cfg.gamma * v[k + 1] - v[k];
    acc = delta + cfg.gamma * cfg.lam * acc;
    adv[k] = acc;
  }
  return adv;
}

Samples make_samples(const std::vector<Trajectory>& batch, const GaussianPolicy& policy, const Mlp* value,
                     const GaeConfig& gae_cfg, bool normalize_adv) {
  if (batch.empty()) throw NumericError("EmptyBatch", "no trajectories");
  Eigen::Index n = 0;
  for (const auto& t : batch) n += t.length();
  Samples s;
  s.n_trajectories = static_cast<int>(batch.size());
  s.obs.resize(batch.front().obs.rows(), n);
  s.actions.resize(batch.front().actions.rows(), n);
  s.logp_old.resize(n);
  s.adv.resize(n);
  s.returns.resize(n);
  Eigen::Index at = 0;
  for (const auto& t : batch) {
    const int K = t.length();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(K + 1);
    if (value) v.head(K) = value->forward(policy.normalize(t.obs)).row(0).transpose();
    s.obs.middleCols(at, K) = t.obs;
    s.actions.middleCols(at, K) = t.actions;
    s.logp_old.segment(at, K) = t.logp;
    s.adv.segment(at, K) = gae(t.rewards, v, gae_cfg);
    s.returns.segment(at, K) = reward_to_go(t.rewards);
    at += K;
  }
  if (normalize_adv && n > 0) {
    double mean = s.adv.mean();
    double var = (s.adv.array() - mean).square().mean();
    double sd = std::sqrt(var);
    s.adv = (s.adv.array() - mean) / (sd > 1e-12 ? sd : 1.0);
  }
  return s;
}

// ---------------------------------------------------------------- surrogates

Surrogate vpg_surrogate(const GaussianPolicy& policy, const Samples& s) {
  Mlp::Tape tape;
  Eigen::MatrixXd mu = policy.mlp.forward(policy.normalize(s.obs), tape);
  Eigen::VectorXd lp = policy.logp_batch(s.actions, mu);
  const double inv_n = 1.0 / s.n_trajectories;
  Surrogate out;
  out.value = lp.dot(s.adv) * inv_n;
  // d logp / d mu = (a - mu) / sigma^2
  Eigen::MatrixXd d = (s.actions - mu) / (policy.sigma * policy.sigma);
  d = d.array().rowwise() * (s.adv.transpose().array() * inv_n);
  out.grad = policy.mlp.backward(tape, d);
  return out;
}

double ppo_clip(double ratio, double eps) { return std::clamp(ratio, 1.0 - eps, 1.0 + eps); }

Eigen::VectorXd ppo_ratios(const GaussianPolicy& policy, const Samples& s) {
  Eigen::MatrixXd mu = policy.mean_batch(s.obs);
  return (policy.logp_batch(s.actions, mu) - s.logp_old).array().exp();
}

Surrogate ppo_surrogate(const GaussianPolicy& policy, const Samples& s, double eps) {
  Mlp::Tape tape;
  Eigen::MatrixXd mu = policy.mlp.forward(policy.normalize(s.obs), tape);
  Eigen::VectorXd ratio = (policy.logp_batch(s.actions, mu) - s.logp_old).array().exp();
  const Eigen::Index n = s.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  Surrogate out;
  Eigen::VectorXd weight(n);  // d objective / d logp per sample
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double a = s.adv[i];
    double unclipped = ratio[i] * a;
    double clipped = ppo_clip(ratio[i], eps) * a;
    total += std::min(unclipped, clipped);
    // The gradient flows only while the unclipped term is the minimum.
    weight[i] = unclipped <= clipped ? unclipped * inv_n : 0.0;
  }
  out.value = total * inv_n;
  Eigen::MatrixXd d = (s.actions - mu) / (policy.sigma * policy.sigma);
  d = d.array().rowwise() * weight.transpose().array();
  out.grad = policy.mlp.backward(tape, d);
  return out;
}

Surrogate value_loss(const Mlp& value, const Eigen::VectorXd& scale, const Eigen::MatrixXd& obs,
                     const Eigen::VectorXd& targets) {
  Mlp::Tape tape;
  Eigen::MatrixXd x = obs.array().colwise() / scale.array();
  Eigen::MatrixXd pred = value.forward(x, tape);
  Eigen::RowVectorXd err = pred.row(0) - targets.transpose();
  const double n = static_cast<double>(targets.size());
  Surrogate out;
  out.value = err.squaredNorm() / n;
  if (!std::isfinite(out.value)) throw NumericError("NonFiniteLoss", "value loss is not finite");
  Eigen::MatrixXd d = (2.0 / n) * err;
  out.grad = value.backward(tape, d);
  return out;
}

double mean_kl(const Eigen::MatrixXd& mean_old, const Eigen::MatrixXd& mean_new, double sigma) {
  if (mean_old.cols() == 0) return 0.0;
  return (mean_old - mean_new).colwise().squaredNorm().mean() / (2.0 * sigma * sigma);
}

// ---------------------------------------------------------------- updates

void vpg_update(GaussianPolicy& policy, const Samples& s, double lr) {
  Surrogate g = vpg_surrogate(policy, s);
  require_finite(g.grad, "VPG gradient");
  Sgd{lr}.step(policy.mlp.params(), g.grad, true);
}

PpoReport ppo_update(GaussianPolicy& policy, Adam& opt, const Samples& s, double eps, int max_iters,
                     double target_kl) {
  PpoReport rep;
  const Eigen::MatrixXd mu_old = policy.mean_batch(s.obs);
  for (int it = 0; it < max_iters; ++it) {
    double kl = mean_kl(mu_old, policy.mean_batch(s.obs), policy.sigma);
    rep.final_kl = kl;
    if (kl > target_kl) break;
    Surrogate g = ppo_surrogate(policy, s, eps);
    require_finite(g.grad, "PPO gradient");
    opt.step(policy.mlp.params(), g.grad, true);
    rep.iterations = it + 1;
  }
  return rep;
}

std::vector<double> fit_value(Mlp& value, Adam& opt, const Eigen::VectorXd& scale, const Eigen::MatrixXd& obs,
                              const Eigen::VectorXd& targets, int iters) {
  std::vector<double> losses;
  for (int it = 0; it < iters; ++it) {
    Surrogate g = value_loss(value, scale, obs, targets);
    require_finite(g.grad, "value gradient");
    losses.push_back(g.value);
    opt.step(value.params(), g.grad, false);
  }
  return losses;
}

// ---------------------------------------------------------------- trainer

std::string to_string(Algo algo) { return algo == Algo::vpg ? "vpg" : "ppo"; }

std::optional<Algo> parse_algo(const std::string& text) {
  if (text == "vpg") return Algo::vpg;
  if (text == "ppo") return Algo::ppo;
  return std::nullopt;
}

void TrainerConfig::check() const {
  if (iterations < 0 || episodes_per_iter < 1 || value_iters < 0 || ppo_policy_iters < 1)
    throw ConfigError("ConfigInvalid", "trainer counts must be positive");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ConfigError("ConfigInvalid", "clip_eps must be in (0, 1)");
  if (!(gae.gamma > 0.0 && gae.gamma <= 1.0 && gae.lam >= 0.0 && gae.lam <= 1.0))
    throw ConfigError("ConfigInvalid", "GAE parameters must be in (0, 1]");
  if (!(sigma > 0.0)) throw ConfigError("ConfigInvalid", "sigma must be positive");
  if (!(policy_lr > 0.0 && value_lr > 0.0)) throw ConfigError("ConfigInvalid", "learning rates must be positive");
}

CurveRow summarize(int iteration, const std::vector<EpisodeStats>& stats) {
  CurveRow row;
  row.iteration = iteration;
  if (stats.empty()) return row;
  const double n = static_cast<double>(stats.size());
  row.min_objective = row.max_objective = stats.front().objective;
  for (const auto& s : stats) {
    row.mean_objective += s.objective / n;
    row.min_objective = std::min(row.min_objective, s.objective);
    row.max_objective = std::max(row.max_objective, s.objective);
    row.mean_jah2 += s.jah2 / n;
    row.mean_pct_violation += s.pct_violation / n;
    row.mean_revenue += s.revenue / n;
    row.mean_tstt += s.tstt / n;
    row.mean_jah1 += s.jah1 / n;
  }
  double var = 0.0;
  for (const auto& s : stats) var += (s.objective - row.mean_objective) * (s.objective - row.mean_objective);
  row.std_objective = stats.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  return row;
}

GaussianPolicy make_policy(const Env& env, const TrainerConfig& cfg, std::mt19937_64& rng) {
  std::vector<int> sizes{env.obs_dim()};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(env.action_dim());
  GaussianPolicy p;
  p.mlp = Mlp(sizes);
  p.mlp.init(rng, cfg.init_output_gain);
  p.sigma = cfg.sigma;
  p.scale = to_vec(env.feature_scales());
  // Output bias sits at the end of the parameter vector.
  p.mlp.params().tail(env.action_dim()).setConstant(cfg.init_toll_mean);
  return p;
}

TrainResult train(const TrainerConfig& cfg, const std::shared_ptr<const Scenario>& scenario, const EnvConfig& env_cfg,
                  std::uint64_t seed, const std::function<void(const CurveRow&)>& progress) {
  cfg.check();
  Env probe(scenario, env_cfg);
  auto init_rng = make_rng(seed, 0, Stream::init);
  TrainResult result;
  GaussianPolicy policy = make_policy(probe, cfg, init_rng);
  std::vector<int> vsizes{probe.obs_dim()};
  vsizes.insert(vsizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  vsizes.push_back(1);
  Mlp value(vsizes);
  value.init(init_rng, 1.0);
  Adam policy_opt, value_opt;
  policy_opt.lr = cfg.policy_lr;
  value_opt.lr = cfg.value_lr;

  result.initial = policy;
  result.best = policy;
  for (int it = 0; it < cfg.iterations; ++it) {
    auto batch = collect(scenario, env_cfg, policy, cfg.episodes_per_iter, seed,
                         static_cast<std::uint64_t>(it) * cfg.episodes_per_iter, cfg.jobs);
    std::vector<EpisodeStats> stats;
    for (const auto& t : batch) stats.push_back(t.stats);
    CurveRow row = summarize(it, stats);
    result.curve.push_back(row);
    if (result.best_iteration < 0 || row.mean_objective > result.best_objective) {
      result.best_iteration = it;
      result.best_objective = row.mean_objective;
      result.best = policy;
    }
    if (progress) progress(row);

    Samples s = make_samples(batch, policy, &value, cfg.gae, cfg.normalize_adv);
    if (cfg.algo == Algo::vpg)
      vpg_update(policy, s, cfg.policy_lr);
    else
      ppo_update(policy, policy_opt, s, cfg.clip_eps, cfg.ppo_policy_iters, cfg.target_kl);
    fit_value(value, value_opt, policy.scale, s.obs, s.returns, cfg.value_iters);
  }
  result.last = policy;
  return result;
}

}  // namespace tollrl
