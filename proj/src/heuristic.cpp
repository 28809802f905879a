#include "tollrl/heuristic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tollrl/csv.hpp"
#include "tollrl/errors.hpp"
#include "tollrl/rng.hpp"

namespace tollrl {

void HeuristicConfig::check() const {
  if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("ConfigInvalid", "eta must be in (0, 1]");
  if (!(p_gain > 0.0)) throw ConfigError("ConfigInvalid", "p_gain must be positive");
}

std::vector<double> desired_vehicles(const Scenario& s, double eta) {
  std::vector<double> out;
  for (int toll : s.toll_links) {
    double x = 0.0;
    auto it = s.ml_sets.find(toll);
    if (it != s.ml_sets.end())
      for (int l : it->second) x += eta * s.network.links[l].fd.critical_density() * s.network.links[l].length;
    out.push_back(x);
  }
  return out;
}

std::vector<double> update_tolls(const std::vector<double>& prev, const std::vector<double>& counts,
                                 const std::vector<double>& desired, double p_gain, double beta_min, double beta_max) {
  if (prev.size() != counts.size() || prev.size() != desired.size())
    throw ConfigError("ShapeMismatch", "toll, count and target vectors differ in length");
  std::vector<double> out(prev.size());
  for (size_t i = 0; i < prev.size(); ++i)
    out[i] = std::clamp(prev[i] + p_gain * (counts[i] - desired[i]), beta_min, beta_max);
  return out;
}

TollRule feedback_rule(const Scenario& s, const EnvConfig& env, const HeuristicConfig& cfg,
                       std::uint64_t master_seed, std::uint64_t episode) {
  cfg.check();
  auto rng = std::make_shared<std::mt19937_64>(derive_seed(master_seed, episode, Stream::tolls));
  std::vector<double> beta;
  if (cfg.random_initial) {
    std::uniform_real_distribution<double> u(env.beta_min, env.beta_max);
    for (size_t i = 0; i < s.toll_links.size(); ++i) beta.push_back(u(*rng));
  } else {
    beta = cfg.initial;
    if (beta.size() != s.toll_links.size())
      throw ConfigError("ShapeMismatch", "initial tolls need one value per toll link");
    for (double& b : beta) b = std::clamp(b, env.beta_min, env.beta_max);
  }
  auto state = std::make_shared<std::vector<double>>(std::move(beta));
  auto desired = desired_vehicles(s, cfg.eta);
  return [state, desired, cfg, env, rng](const Env& e, const Observation& obs) {
    if (obs.toll_step > 0) {
      std::vector<double> x = e.ml_set_counts();
      if (cfg.noisy_counts && env.sigma_o > 0.0)
        for (double& c : x) c = std::max(0.0, c + std::normal_distribution<double>(0.0, env.sigma_o)(*rng));
      *state = update_tolls(*state, x, desired, cfg.p_gain, env.beta_min, env.beta_max);
    }
    return *state;
  };
}

std::vector<SweepRow> sweep(const std::shared_ptr<const Scenario>& scenario, const EnvConfig& env,
                            const std::vector<double>& etas, const std::vector<double>& gains, int seeds,
                            std::uint64_t master_seed, int jobs, const HeuristicConfig& base) {
  if (etas.empty() || gains.empty()) throw ConfigError("ConfigInvalid", "sweep grids must be nonempty");
  std::vector<SweepRow> rows;
  for (double eta : etas)
    for (double p : gains) {
      HeuristicConfig cfg = base;
      cfg.eta = eta;
      cfg.p_gain = p;
      auto stats = run_episodes(
          scenario, env,
          [&](std::uint64_t ep) { return feedback_rule(*scenario, env, cfg, master_seed, ep); }, seeds,
          master_seed, 0, jobs);
      SweepRow row;
      row.eta = eta;
      row.p = p;
      const double n = static_cast<double>(stats.size());
      for (const auto& st : stats) {
        row.mean_rev += st.revenue / n;
        row.mean_tstt += st.tstt / n;
        row.mean_jah1 += st.jah1 / n;
        row.mean_jah2 += st.jah2 / n;
        row.mean_pct_violation += st.pct_violation / n;
      }
      if (stats.size() > 1) {
        for (const auto& st : stats) {
          row.std_rev += (st.revenue - row.mean_rev) * (st.revenue - row.mean_rev);
          row.std_tstt += (st.tstt - row.mean_tstt) * (st.tstt - row.mean_tstt);
        }
        row.std_rev = std::sqrt(row.std_rev / (n - 1.0));
        row.std_tstt = std::sqrt(row.std_tstt / (n - 1.0));
      }
      rows.push_back(row);
    }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "eta,p,mean_rev,std_rev,mean_tstt,std_tstt,mean_jah1,mean_jah2,mean_pct_violation\n";
  for (const auto& r : rows)
    out << num(r.eta) << "," << num(r.p) << "," << num(r.mean_rev) << "," << num(r.std_rev) << ","
        << num(r.mean_tstt) << "," << num(r.std_tstt) << "," << num(r.mean_jah1) << "," << num(r.mean_jah2) << ","
        << num(r.mean_pct_violation) << "\n";
}

}  // namespace tollrl
