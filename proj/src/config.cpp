#include "tollrl/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tollrl/errors.hpp"

namespace tollrl {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

void known_keys(const json& j, const std::set<std::string>& keys, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!keys.count(it.key())) throw ConfigError("ConfigInvalid", "unknown key '" + it.key() + "' in " + where);
}

template <class T>
void get(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("ConfigInvalid", std::string("bad value for '") + key + "': " + e.what());
  }
}

void parse_env(const json& j, EnvConfig& env) {
  known_keys(j, {"sigma_o", "beta_min", "beta_max", "min_speed_limit", "crawl_speed", "time_feature", "reward"}, "env");
  get(j, "sigma_o", env.sigma_o);
  get(j, "beta_min", env.beta_min);
  get(j, "beta_max", env.beta_max);
  get(j, "min_speed_limit", env.min_speed_limit);
  get(j, "crawl_speed", env.crawl_speed);
  get(j, "time_feature", env.time_feature);
  if (j.contains("reward")) {
    const json& r = j["reward"];
    known_keys(r, {"kind", "lambda", "threshold"}, "env.reward");
    std::string kind = to_string(env.reward.kind);
    get(r, "kind", kind);
    auto k = parse_reward_kind(kind);
    if (!k) throw ConfigError("ConfigInvalid", "unknown reward kind " + kind);
    env.reward.kind = *k;
    get(r, "lambda", env.reward.lambda);
    if (r.contains("threshold") && !r["threshold"].is_null()) {
      RewardSpec::Threshold th;
      known_keys(r["threshold"], {"jah1", "penalty"}, "env.reward.threshold");
      get(r["threshold"], "jah1", th.jah1);
      get(r["threshold"], "penalty", th.penalty);
      env.reward.threshold = th;
    }
  }
  env.check();
}

void parse_trainer(const json& j, ExperimentConfig& cfg) {
  TrainerConfig& t = cfg.trainer;
  known_keys(j,
             {"algo", "iterations", "episodes_per_iter", "policy_lr", "value_lr", "value_iters", "clip_eps",
              "ppo_policy_iters", "target_kl", "gamma", "lam", "normalize_adv", "hidden", "sigma", "init_output_gain",
              "init_toll_mean", "seeds"},
             "trainer");
  std::string algo = to_string(t.algo);
  get(j, "algo", algo);
  auto a = parse_algo(algo);
  if (!a) throw ConfigError("ConfigInvalid", "unknown algo " + algo);
  t.algo = *a;
  get(j, "iterations", t.iterations);
  get(j, "episodes_per_iter", t.episodes_per_iter);
  get(j, "policy_lr", t.policy_lr);
  get(j, "value_lr", t.value_lr);
  get(j, "value_iters", t.value_iters);
  get(j, "clip_eps", t.clip_eps);
  get(j, "ppo_policy_iters", t.ppo_policy_iters);
  get(j, "target_kl", t.target_kl);
  get(j, "gamma", t.gae.gamma);
  get(j, "lam", t.gae.lam);
  get(j, "normalize_adv", t.normalize_adv);
  get(j, "hidden", t.hidden);
  get(j, "sigma", t.sigma);
  get(j, "init_output_gain", t.init_output_gain);
  get(j, "init_toll_mean", t.init_toll_mean);
  get(j, "seeds", cfg.train_seeds);
  t.check();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("Io", "cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ExperimentConfig::resolve(const std::string& p) const {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("ConfigInvalid", std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("ConfigInvalid", "config must be a JSON object");
  known_keys(j,
             {"network", "demand", "vot", "sigma_d", "lane_choice", "observed_links", "env", "trainer", "heuristic",
              "simulate", "random_profiles", "transfer", "compare", "seed", "out", "jobs", "description"},
             "config");

  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  cfg.canonical = j.dump();
  get(j, "network", cfg.network_path);
  get(j, "demand", cfg.demand_path);
  get(j, "vot", cfg.vot_path);
  if (cfg.network_path.empty() || cfg.demand_path.empty() || cfg.vot_path.empty())
    throw ConfigError("ConfigInvalid", "config needs network, demand and vot paths");
  get(j, "sigma_d", cfg.sigma_d);
  get(j, "seed", cfg.seed);
  get(j, "out", cfg.out_dir);
  get(j, "jobs", cfg.jobs);
  get(j, "random_profiles", cfg.random_profiles);

  if (j.contains("lane_choice")) {
    const json& lc = j["lane_choice"];
    known_keys(lc, {"model", "logit_scale"}, "lane_choice");
    std::string model = to_string(cfg.scenario.choice.model);
    get(lc, "model", model);
    auto m = parse_choice_model(model);
    if (!m) throw ConfigError("ConfigInvalid", "unknown lane choice model " + model);
    cfg.scenario.choice.model = *m;
    get(lc, "logit_scale", cfg.scenario.choice.logit_scale);
    cfg.scenario.choice.check();
  }
  if (j.contains("observed_links")) {
    std::vector<std::vector<int>> links;
    get(j, "observed_links", links);
    for (const auto& l : links) {
      if (l.size() != 2) throw ConfigError("ConfigInvalid", "observed_links entries are [tail, head]");
      cfg.scenario.observed_links.push_back({l[0], l[1]});
    }
  }
  if (j.contains("env")) parse_env(j["env"], cfg.env);
  cfg.env.check();
  if (j.contains("trainer")) parse_trainer(j["trainer"], cfg);
  cfg.trainer.jobs = cfg.jobs;

  if (j.contains("heuristic")) {
    const json& h = j["heuristic"];
    known_keys(h, {"eta", "p", "seeds", "noisy_counts", "random_initial", "initial"}, "heuristic");
    get(h, "eta", cfg.sweep.etas);
    get(h, "p", cfg.sweep.gains);
    get(h, "seeds", cfg.sweep.seeds);
    get(h, "noisy_counts", cfg.sweep.base.noisy_counts);
    get(h, "random_initial", cfg.sweep.base.random_initial);
    get(h, "initial", cfg.sweep.base.initial);
  }
  if (j.contains("simulate")) {
    const json& s = j["simulate"];
    known_keys(s, {"tolls", "fixed", "eta", "p", "checkpoint", "policy_mode", "episodes", "cell_trace"}, "simulate");
    get(s, "tolls", cfg.simulate.tolls);
    get(s, "fixed", cfg.simulate.fixed);
    get(s, "eta", cfg.simulate.eta);
    get(s, "p", cfg.simulate.p_gain);
    get(s, "checkpoint", cfg.simulate.checkpoint);
    get(s, "policy_mode", cfg.simulate.policy_mode);
    get(s, "episodes", cfg.simulate.episodes);
    get(s, "cell_trace", cfg.simulate.cell_trace);
    cfg.simulate.checkpoint = cfg.resolve(cfg.simulate.checkpoint);
  }
  if (j.contains("transfer")) {
    const json& t = j["transfer"];
    known_keys(t, {"checkpoint", "target", "runs", "policy_mode"}, "transfer");
    get(t, "checkpoint", cfg.transfer.checkpoint);
    cfg.transfer.checkpoint = cfg.resolve(cfg.transfer.checkpoint);
    if (t.contains("target")) cfg.transfer.target_json = t["target"].dump();
    get(t, "runs", cfg.transfer.runs);
    get(t, "policy_mode", cfg.transfer.policy_mode);
  }
  if (j.contains("compare")) {
    const json& c = j["compare"];
    known_keys(c, {"checkpoint", "episodes", "policy_mode", "objective"}, "compare");
    get(c, "checkpoint", cfg.compare.checkpoint);
    cfg.compare.checkpoint = cfg.resolve(cfg.compare.checkpoint);
    get(c, "episodes", cfg.compare.episodes);
    get(c, "policy_mode", cfg.compare.policy_mode);
    get(c, "objective", cfg.compare.objective);
  }
  for (const std::string* mode : {&cfg.simulate.policy_mode, &cfg.transfer.policy_mode, &cfg.compare.policy_mode})
    if (*mode != "mean" && *mode != "sample") throw ConfigError("ConfigInvalid", "policy_mode is mean or sample");
  if (cfg.jobs < 1) throw ConfigError("ConfigInvalid", "jobs must be at least 1");
  if (cfg.random_profiles < 0) throw ConfigError("ConfigInvalid", "random_profiles must be nonnegative");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig cfg = parse_config(slurp(path), fs::path(path).parent_path().string());
  cfg.path = path;
  return cfg;
}

ExperimentConfig patch_config(const ExperimentConfig& base, const std::string& patch_json) {
  json j = json::parse(base.canonical);
  if (!patch_json.empty()) {
    json patch = json::parse(patch_json);
    patch.erase("transfer");
    j.merge_patch(patch);
  }
  ExperimentConfig out = parse_config(j.dump(), base.base_dir);
  out.path = base.path;
  return out;
}

std::shared_ptr<const Scenario> build_scenario(const ExperimentConfig& cfg) {
  Network net = load_network(cfg.resolve(cfg.network_path));
  DemandProfile demand = load_demand(cfg.resolve(cfg.demand_path), cfg.sigma_d);
  VotDistribution vot = load_vot(cfg.resolve(cfg.vot_path));
  return make_scenario(std::move(net), std::move(demand), std::move(vot), cfg.scenario);
}

}  // namespace tollrl
