#include "tollrl/experiments.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>

#include "tollrl/csv.hpp"
#include "tollrl/errors.hpp"
#include "tollrl/parallel.hpp"
#include "tollrl/rng.hpp"

namespace tollrl {

namespace fs = std::filesystem;

namespace {

std::ofstream open_artifact(const ExperimentConfig& cfg, const std::string& command, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  std::string path = (fs::path(cfg.out_dir) / name).string();
  std::ofstream f(path);
  if (!f) throw ConfigError("Io", "cannot write " + path);
  f << artifact_header(cfg, command);
  return f;
}

MetricSummary metric(const std::vector<EpisodeStats>& stats, double EpisodeStats::*field) {
  MetricSummary m;
  if (stats.empty()) return m;
  m.min = std::numeric_limits<double>::infinity();
  m.max = -m.min;
  for (const auto& s : stats) {
    double x = s.*field;
    m.mean += x;
    m.min = std::min(m.min, x);
    m.max = std::max(m.max, x);
  }
  m.mean /= static_cast<double>(stats.size());
  return m;
}

std::string checkpoint_or_default(const ExperimentConfig& cfg, const std::string& path) {
  return path.empty() ? (fs::path(cfg.out_dir) / "policy_best.txt").string() : path;
}

std::string run_tag(const ExperimentConfig& cfg) {
  return to_string(cfg.trainer.algo) + "_" + to_string(cfg.env.reward.kind) +
         (cfg.env.reward.threshold ? "_threshold" : "");
}

}  // namespace

std::string artifact_header(const ExperimentConfig& cfg, const std::string& command) {
  return "# tollrl " + std::string(kVersion) + " config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.seed) +
         " command=" + command + "\n";
}

TollRule fixed_rule(const Scenario& s, const std::vector<double>& tolls) {
  std::vector<double> beta = tolls;
  if (beta.size() == 1) beta.assign(s.toll_links.size(), tolls[0]);
  if (beta.size() != s.toll_links.size())
    throw ConfigError("ShapeMismatch", "fixed tolls need one value or one per toll link");
  return [beta](const Env&, const Observation&) { return beta; };
}

TollRule random_rule(const EnvConfig& env, std::uint64_t master_seed, std::uint64_t episode) {
  auto rng = std::make_shared<std::mt19937_64>(make_rng(master_seed, episode, Stream::tolls));
  return [rng, env](const Env& e, const Observation&) {
    std::uniform_real_distribution<double> u(env.beta_min, env.beta_max);
    std::vector<double> beta(e.action_dim());
    for (double& b : beta) b = u(*rng);
    return beta;
  };
}

TollRule policy_rule(const GaussianPolicy& policy, ActionMode mode, std::uint64_t master_seed,
                     std::uint64_t episode) {
  auto rng = std::make_shared<std::mt19937_64>(make_rng(master_seed, episode, Stream::policy));
  return [policy, mode, rng](const Env& e, const Observation& obs) {
    std::vector<double> f = e.features(obs);
    Eigen::VectorXd mu = policy.mean(Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size())));
    Eigen::VectorXd a = mode == ActionMode::sample ? policy.sample(mu, *rng) : mu;
    return std::vector<double>(a.data(), a.data() + a.size());
  };
}

ActionMode parse_action_mode(const std::string& text) {
  if (text == "mean") return ActionMode::mean;
  if (text == "sample") return ActionMode::sample;
  throw ConfigError("ConfigInvalid", "policy_mode is mean or sample");
}

std::vector<EpisodeStats> random_profiles(const std::shared_ptr<const Scenario>& scenario, const EnvConfig& env,
                                          int n, std::uint64_t master_seed, int jobs) {
  return run_episodes(
      scenario, env, [&](std::uint64_t ep) { return random_rule(env, master_seed, ep); }, n, master_seed, 0, jobs);
}

StatsSummary summarize_stats(const std::vector<EpisodeStats>& stats) {
  StatsSummary s;
  s.n = static_cast<int>(stats.size());
  s.revenue = metric(stats, &EpisodeStats::revenue);
  s.tstt = metric(stats, &EpisodeStats::tstt);
  s.jah1 = metric(stats, &EpisodeStats::jah1);
  s.jah2 = metric(stats, &EpisodeStats::jah2);
  s.pct_violation = metric(stats, &EpisodeStats::pct_violation);
  s.throughput = metric(stats, &EpisodeStats::throughput);
  s.objective = metric(stats, &EpisodeStats::objective);
  return s;
}

void write_stats_csv(std::ostream& out, const std::vector<EpisodeStats>& stats) {
  out << "episode,revenue,tstt,jah1,jah2,pct_violation,throughput,objective\n";
  for (size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    out << i << "," << num(s.revenue) << "," << num(s.tstt) << "," << num(s.jah1) << "," << num(s.jah2) << ","
        << num(s.pct_violation) << "," << num(s.throughput) << "," << num(s.objective) << "\n";
  }
}

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& curve) {
  out << "iteration,mean_objective,std_objective,min_objective,max_objective,mean_jah2,mean_pct_violation,"
         "mean_revenue,mean_tstt,mean_jah1\n";
  for (const auto& r : curve)
    out << r.iteration << "," << num(r.mean_objective) << "," << num(r.std_objective) << ","
        << num(r.min_objective) << "," << num(r.max_objective) << "," << num(r.mean_jah2) << ","
        << num(r.mean_pct_violation) << "," << num(r.mean_revenue) << "," << num(r.mean_tstt) << ","
        << num(r.mean_jah1) << "\n";
}

void write_summary_csv(std::ostream& out, const StatsSummary& s) {
  out << "metric,n,mean,min,max\n";
  auto row = [&](const char* name, const MetricSummary& m) {
    out << name << "," << s.n << "," << num(m.mean) << "," << num(m.min) << "," << num(m.max) << "\n";
  };
  row("revenue", s.revenue);
  row("tstt", s.tstt);
  row("jah1", s.jah1);
  row("jah2", s.jah2);
  row("pct_violation", s.pct_violation);
  row("throughput", s.throughput);
  row("objective", s.objective);
}

std::vector<CompareRow> compare(const ExperimentConfig& cfg, const std::shared_ptr<const Scenario>& scenario,
                                const GaussianPolicy& policy) {
  const auto& cs = cfg.compare;
  if (cs.objective != "revenue" && cs.objective != "tstt")
    throw ConfigError("ConfigInvalid", "compare objective is revenue or tstt");
  auto cells = sweep(scenario, cfg.env, cfg.sweep.etas, cfg.sweep.gains, cfg.sweep.seeds, cfg.seed, cfg.jobs,
                     cfg.sweep.base);
  const SweepRow* best = &cells.front();
  for (const auto& c : cells) {
    bool better = cs.objective == "revenue" ? c.mean_rev > best->mean_rev : c.mean_tstt < best->mean_tstt;
    if (better) best = &c;
  }

  std::vector<CompareRow> rows(2);
  ActionMode mode = parse_action_mode(cs.policy_mode);
  auto drl = run_episodes(
      scenario, cfg.env, [&](std::uint64_t ep) { return policy_rule(policy, mode, cfg.seed, ep); }, cs.episodes,
      cfg.seed, kEvalOffset, cfg.jobs);
  rows[0].method = "drl";
  rows[0].stats = summarize_stats(drl);

  HeuristicConfig h = cfg.sweep.base;
  h.eta = best->eta;
  h.p_gain = best->p;
  auto heur = run_episodes(
      scenario, cfg.env, [&](std::uint64_t ep) { return feedback_rule(*scenario, cfg.env, h, cfg.seed, ep); },
      cs.episodes, cfg.seed, kEvalOffset, cfg.jobs);
  rows[1].method = "heuristic";
  rows[1].eta = best->eta;
  rows[1].p = best->p;
  rows[1].stats = summarize_stats(heur);
  return rows;
}

void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows) {
  out << "method,eta,p,episodes,revenue,tstt,jah1,jah2,pct_violation,revenue_min,revenue_max\n";
  for (const auto& r : rows)
    out << r.method << "," << num(r.eta) << "," << num(r.p) << "," << r.stats.n << "," << num(r.stats.revenue.mean)
        << "," << num(r.stats.tstt.mean) << "," << num(r.stats.jah1.mean) << "," << num(r.stats.jah2.mean) << ","
        << num(r.stats.pct_violation.mean) << "," << num(r.stats.revenue.min) << "," << num(r.stats.revenue.max)
        << "\n";
}

std::vector<EpisodeStats> eval_transfer(const ExperimentConfig& cfg, const GaussianPolicy& policy) {
  ExperimentConfig target = patch_config(cfg, cfg.transfer.target_json);
  auto scenario = build_scenario(target);
  Env probe(scenario, target.env);
  if (probe.obs_dim() != policy.mlp.input_size())
    throw ConfigError("ShapeMismatch", "transfer target has " + std::to_string(probe.obs_dim()) +
                                           " observations, the policy expects " +
                                           std::to_string(policy.mlp.input_size()));
  if (probe.action_dim() != policy.mlp.output_size())
    throw ConfigError("ShapeMismatch", "transfer target has a different number of toll links");
  ActionMode mode = parse_action_mode(cfg.transfer.policy_mode);
  return run_episodes(
      scenario, target.env, [&](std::uint64_t ep) { return policy_rule(policy, mode, cfg.seed, ep); },
      cfg.transfer.runs, cfg.seed, kEvalOffset, cfg.jobs);
}

std::vector<TrainRun> train_all(const ExperimentConfig& cfg, const std::shared_ptr<const Scenario>& scenario,
                                std::ostream* log) {
  std::vector<TrainRun> runs;
  for (std::uint64_t s : cfg.train_seeds) {
    TrainRun run;
    run.seed = s;
    auto progress = [&](const CurveRow& r) {
      if (log)
        *log << "seed " << s << " iter " << r.iteration << " objective " << num(r.mean_objective) << " revenue "
             << num(r.mean_revenue) << " tstt " << num(r.mean_tstt) << "\n";
    };
    run.result = train(cfg.trainer, scenario, cfg.env, derive_seed(cfg.seed, s, Stream::init), progress);
    runs.push_back(std::move(run));
  }
  return runs;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate",      "train",         "sweep-heuristic",
                                              "random-profiles", "eval-transfer", "compare"};
  return names;
}

int run_command(const std::string& command, const ExperimentConfig& cfg, std::ostream& log) {
  auto scenario = build_scenario(cfg);

  if (command == "simulate") {
    const auto& sp = cfg.simulate;
    std::function<TollRule(std::uint64_t)> make_rule;
    GaussianPolicy policy;
    if (sp.tolls == "fixed") {
      // no tolls given means the floor toll everywhere
      std::vector<double> fixed = sp.fixed.empty() ? std::vector<double>{cfg.env.beta_min} : sp.fixed;
      make_rule = [&, fixed](std::uint64_t) { return fixed_rule(*scenario, fixed); };
    } else if (sp.tolls == "heuristic") {
      HeuristicConfig h = cfg.sweep.base;
      h.eta = sp.eta;
      h.p_gain = sp.p_gain;
      make_rule = [&, h](std::uint64_t ep) { return feedback_rule(*scenario, cfg.env, h, cfg.seed, ep); };
    } else if (sp.tolls == "checkpoint") {
      policy = load_policy(checkpoint_or_default(cfg, sp.checkpoint));
      ActionMode mode = parse_action_mode(sp.policy_mode);
      make_rule = [&, mode](std::uint64_t ep) { return policy_rule(policy, mode, cfg.seed, ep); };
    } else {
      throw ConfigError("ConfigInvalid", "simulate tolls is fixed, heuristic or checkpoint");
    }
    auto stats = run_episodes(scenario, cfg.env, make_rule, sp.episodes, cfg.seed, 0, cfg.jobs);
    {
      auto f = open_artifact(cfg, command, "simulate.csv");
      write_stats_csv(f, stats);
    }
    if (sp.episodes > 0) {
      // replay episode 0 to keep its full trace
      EnvConfig ec = cfg.env;
      ec.record_cells = sp.cell_trace;
      Env env(scenario, ec);
      TollRule rule = make_rule(0);
      Observation obs = env.reset(derive_seed(cfg.seed, 0, Stream::demand));
      while (!env.done()) obs = env.step(rule(env, obs)).observation;
      auto periods = open_artifact(cfg, command, "simulate_periods.csv");
      write_episode_csv(periods, env.trace());
      auto trace = open_artifact(cfg, command, "simulate_trace.txt");
      env.trace().write_csv(trace);
      if (sp.cell_trace) {
        auto cells = open_artifact(cfg, command, "simulate_cells.csv");
        write_cell_trace(cells, *scenario, env.cell_snapshots());
      }
    }
    StatsSummary s = summarize_stats(stats);
    log << "simulate: " << s.n << " episodes, mean revenue " << num(s.revenue.mean) << ", mean tstt "
        << num(s.tstt.mean) << "\n";
    return 0;
  }

  if (command == "train") {
    auto runs = train_all(cfg, scenario, &log);
    const std::string tag = run_tag(cfg);
    auto summary = open_artifact(cfg, command, "train_" + tag + "_summary.csv");
    summary << "seed,best_iteration,best_objective,checkpoint\n";
    const TrainRun* best = nullptr;
    for (const auto& run : runs) {
      std::string stem = "train_" + tag + "_seed" + std::to_string(run.seed);
      {
        auto f = open_artifact(cfg, command, stem + ".csv");
        write_curve_csv(f, run.result.curve);
      }
      {
        auto f = open_artifact(cfg, command, stem + "_best.txt");
        f << dump_policy(run.result.best);
        auto g = open_artifact(cfg, command, stem + "_last.txt");
        g << dump_policy(run.result.last);
      }
      summary << run.seed << "," << run.result.best_iteration << "," << num(run.result.best_objective) << ","
              << stem << "_best.txt\n";
      if (!best || run.result.best_objective > best->result.best_objective) best = &run;
    }
    if (best) {
      auto f = open_artifact(cfg, command, "policy_best.txt");
      f << dump_policy(best->result.best);
    }
    return 0;
  }

  if (command == "sweep-heuristic") {
    auto rows = sweep(scenario, cfg.env, cfg.sweep.etas, cfg.sweep.gains, cfg.sweep.seeds, cfg.seed, cfg.jobs,
                      cfg.sweep.base);
    auto f = open_artifact(cfg, command, "sweep.csv");
    write_sweep_csv(f, rows);
    return 0;
  }

  if (command == "random-profiles") {
    auto stats = random_profiles(scenario, cfg.env, cfg.random_profiles, cfg.seed, cfg.jobs);
    auto f = open_artifact(cfg, command, "random_profiles.csv");
    write_stats_csv(f, stats);
    return 0;
  }

  if (command == "eval-transfer") {
    GaussianPolicy policy = load_policy(checkpoint_or_default(cfg, cfg.transfer.checkpoint));
    auto stats = eval_transfer(cfg, policy);
    {
      auto f = open_artifact(cfg, command, "transfer.csv");
      write_stats_csv(f, stats);
    }
    auto f = open_artifact(cfg, command, "transfer_summary.csv");
    StatsSummary s = summarize_stats(stats);
    write_summary_csv(f, s);
    log << "eval-transfer: " << s.n << " runs, revenue mean " << num(s.revenue.mean) << " range ["
        << num(s.revenue.min) << ", " << num(s.revenue.max) << "]\n";
    return 0;
  }

  if (command == "compare") {
    GaussianPolicy policy = load_policy(checkpoint_or_default(cfg, cfg.compare.checkpoint));
    auto rows = compare(cfg, scenario, policy);
    auto f = open_artifact(cfg, command, "compare.csv");
    write_compare_csv(f, rows);
    return 0;
  }

  throw ConfigError("ConfigInvalid", "unknown command " + command);
}

}  // namespace tollrl
