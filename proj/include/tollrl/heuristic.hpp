#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <vector>

#include "tollrl/env.hpp"
#include "tollrl/rl.hpp"

namespace tollrl {

struct HeuristicConfig {
  double eta = 0.5;          // fraction of critical-density vehicles to target
  double p_gain = 0.05;      // $/veh
  bool random_initial = true;  // uniform in the toll bounds, else `initial`
  std::vector<double> initial;
  bool noisy_counts = false;   // add observation noise to the detector counts
  void check() const;
};

/// Target vehicles for each toll link: eta * sum of k_crit * length over the
/// ML links it controls.
std::vector<double> desired_vehicles(const Scenario& scenario, double eta);

/// beta <- clip(beta + P (X - X_desired), beta_min, beta_max).
std::vector<double> update_tolls(const std::vector<double>& prev, const std::vector<double>& counts,
                                 const std::vector<double>& desired, double p_gain, double beta_min, double beta_max);

/// Feedback rule for one episode; `episode` seeds the random initial tolls.
TollRule feedback_rule(const Scenario& scenario, const EnvConfig& env, const HeuristicConfig& cfg,
                       std::uint64_t master_seed, std::uint64_t episode);

struct SweepRow {
  double eta = 0.0;
  double p = 0.0;
  double mean_rev = 0.0, std_rev = 0.0;
  double mean_tstt = 0.0, std_tstt = 0.0;
  double mean_jah1 = 0.0, mean_jah2 = 0.0, mean_pct_violation = 0.0;
};

std::vector<SweepRow> sweep(const std::shared_ptr<const Scenario>& scenario, const EnvConfig& env,
                            const std::vector<double>& etas, const std::vector<double>& gains, int seeds,
                            std::uint64_t master_seed, int jobs, const HeuristicConfig& base = {});

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace tollrl
