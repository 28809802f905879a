#include "tollrl/env.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "tollrl/csv.hpp"
#include "tollrl/errors.hpp"
#include "tollrl/rng.hpp"

namespace tollrl {

// ---------------------------------------------------------------- rewards

double RewardSpec::period_reward(double revenue, double tstt) const {
  switch (kind) {
    case Kind::revmax: return revenue;
    case Kind::tsttmin: return -tstt;
    case Kind::joint: return lambda * revenue - tstt;
  }
  return 0.0;
}

void RewardSpec::check() const {
  if (kind == Kind::joint && !(lambda > 0.0)) throw ConfigError("ConfigInvalid", "joint reward needs lambda > 0");
  if (threshold && threshold->penalty > 0.0)
    throw ConfigError("ConfigInvalid", "threshold penalty is stored as a negative value");
}

std::string to_string(RewardSpec::Kind kind) {
  switch (kind) {
    case RewardSpec::Kind::revmax: return "revmax";
    case RewardSpec::Kind::tsttmin: return "tsttmin";
    case RewardSpec::Kind::joint: return "joint";
  }
  return "?";
}

std::optional<RewardSpec::Kind> parse_reward_kind(const std::string& text) {
  if (text == "revmax") return RewardSpec::Kind::revmax;
  if (text == "tsttmin") return RewardSpec::Kind::tsttmin;
  if (text == "joint") return RewardSpec::Kind::joint;
  return std::nullopt;
}

void EnvConfig::check() const {
  if (!(beta_min < beta_max)) throw ConfigError("ConfigInvalid", "beta_min must be below beta_max");
  if (sigma_o < 0.0) throw ConfigError("ConfigInvalid", "sigma_o must be nonnegative");
  if (!(crawl_speed > 0.0)) throw ConfigError("ConfigInvalid", "crawl_speed must be positive");
  reward.check();
}

// ---------------------------------------------------------------- env

Env::Env(std::shared_ptr<const Scenario> scenario, EnvConfig config)
    : scenario_(std::move(scenario)), config_(std::move(config)) {
  config_.check();
  const Scenario& s = *scenario_;
  for (int c : s.ml_cells) {
    const Cell& cell = s.graph.cells[c];
    violation_limit_.push_back(s.graph.link_fd[cell.link].density_at_speed(config_.min_speed_limit) * cell.length);
  }
  inflows_.assign(s.graph.sources.size() * static_cast<size_t>(s.n_classes()), 0.0);
}

int Env::obs_dim() const { return static_cast<int>(scenario_->observed_links.size()) + (config_.time_feature ? 1 : 0); }

std::vector<double> Env::feature_scales() const {
  std::vector<double> s = scenario_->observed_jam;
  if (config_.time_feature) s.push_back(1.0);
  return s;
}

std::vector<double> Env::features(const Observation& obs) const {
  std::vector<double> f(obs.counts);
  if (config_.time_feature) f.push_back(static_cast<double>(obs.toll_step) / horizon());
  return f;
}

std::vector<double> Env::clip(std::span<const double> action) const {
  if (static_cast<int>(action.size()) != action_dim())
    throw SimulationError("ShapeMismatch", "action has " + std::to_string(action.size()) + " entries, expected " +
                                               std::to_string(action_dim()));
  std::vector<double> out(action.begin(), action.end());
  for (double& b : out) {
    if (std::isnan(b)) throw NumericError("NonFiniteAction", "toll action is NaN");
    b = std::clamp(b, config_.beta_min, config_.beta_max);
  }
  return out;
}

std::vector<double> Env::ml_set_counts() const {
  std::vector<double> out;
  for (int toll : scenario_->toll_links) {
    double x = 0.0;
    auto it = scenario_->ml_sets.find(toll);
    if (it != scenario_->ml_sets.end())
      for (int l : it->second) x += state_.link_total(scenario_->graph, l);
    out.push_back(x);
  }
  return out;
}

Observation Env::reset(std::uint64_t seed) {
  const Scenario& s = *scenario_;
  demand_rng_.seed(derive_seed(seed, 0, Stream::demand));
  obs_rng_.seed(derive_seed(seed, 0, Stream::observation));
  state_ = CellState::empty(s.graph, s.n_classes());
  next_ = state_;
  trace_ = EpisodeTrace{};
  trace_.ml_cell_count = static_cast<int>(s.ml_cells.size());
  snapshots_.clear();
  jah1_ = -std::numeric_limits<double>::infinity();
  k_ = 0;
  started_ = true;
  record_point();
  return observe();
}

Observation Env::observe() {
  Observation obs;
  obs.toll_step = k_;
  for (int l : scenario_->observed_links) {
    double x = state_.link_total(scenario_->graph, l);
    if (config_.sigma_o > 0.0) x += std::normal_distribution<double>(0.0, config_.sigma_o)(obs_rng_);
    obs.counts.push_back(std::max(x, 0.0));
  }
  return obs;
}

void Env::record_point() {
  const Scenario& s = *scenario_;
  EpisodeTrace::Point p;
  p.t = state_.sim_step;
  for (int c : s.gpl_cells) p.gpl += state_.cell_total(c);
  for (size_t i = 0; i < s.ml_cells.size(); ++i) {
    double x = state_.cell_total(s.ml_cells[i]);
    p.ml += x;
    if (x > violation_limit_[i]) ++p.violations;
  }
  p.zeta = (s.gpl_jam > 0.0 ? p.gpl / s.gpl_jam : 0.0) - (s.ml_jam > 0.0 ? p.ml / s.ml_jam : 0.0);
  p.queue = state_.queue_total();
  jah1_ = std::max(jah1_, p.gpl - p.ml);
  trace_.points.push_back(p);
  if (config_.record_cells) snapshots_.push_back(state_.occupancy);
}

StepResult Env::step(std::span<const double> action) {
  if (!started_) throw SimulationError("EpisodeNotStarted", "call reset before step");
  if (done()) throw SimulationError("EpisodeFinished", "episode already has all toll periods");
  const Scenario& s = *scenario_;
  const int nz = s.n_classes();
  const int m = s.network.grid.steps_per_toll();
  const double dt = s.graph.dt;

  StepResult res;
  StepInfo& info = res.info;
  info.tolls = clip(action);
  info.toll_flows.assign(s.toll_links.size(), 0.0);

  for (int i = 0; i < m; ++i) {
    info.tstt += (state_.cells_total() + state_.queue_total()) * dt / 3600.0;

    std::fill(inflows_.begin(), inflows_.end(), 0.0);
    for (size_t src = 0; src < s.source_pairs.size(); ++src) {
      int origin = s.graph.sources[src].origin;
      for (auto [pair, di] : s.source_pairs[src]) {
        auto by_vot = sample_inflow(s.demand, s.vot, demand_rng_, origin, s.demand.pairs[pair].destination,
                                    state_.sim_step, dt);
        for (int v = 0; v < static_cast<int>(by_vot.size()); ++v)
          inflows_[src * nz + s.classes.index(v, di)] += by_vot[v];
      }
    }

    link_times_ = link_travel_times(s.graph, state_, config_.crawl_speed);
    compute_splits(s.routes, s.classes, info.tolls, link_times_, splits_);
    tollrl::step(s.graph, state_, splits_, inflows_, next_, record_);
    std::swap(state_, next_);

    for (size_t j = 0; j < s.toll_links.size(); ++j) {
      double f = record_.link_inflow[s.toll_links[j]];
      info.toll_flows[j] += f;
      info.revenue += info.tolls[j] * f;
    }
    for (double e : record_.exited) trace_.throughput += e;
    record_point();
  }
  ++k_;

  res.reward = config_.reward.period_reward(info.revenue, info.tstt);
  res.done = done();
  if (res.done && config_.reward.threshold && jah1_ > config_.reward.threshold->jah1) {
    info.penalty = config_.reward.threshold->penalty;
    res.reward += info.penalty;
    trace_.penalty = info.penalty;
  }
  trace_.tolls.push_back({k_ - 1, info.tolls, res.reward, info.revenue, info.tstt});

  info.link_counts.resize(s.network.links.size());
  for (size_t l = 0; l < s.network.links.size(); ++l)
    info.link_counts[l] = state_.link_total(s.graph, static_cast<int>(l));
  res.observation = observe();
  return res;
}

// ---------------------------------------------------------------- stats

EpisodeStats episode_stats(const EpisodeTrace& trace) {
  EpisodeStats st;
  for (const auto& row : trace.tolls) {
    st.revenue += row.revenue;
    st.tstt += row.tstt;
    st.rewards.push_back(row.reward);
    st.objective += row.reward;
  }
  long violations = 0;
  if (!trace.points.empty()) {
    st.jah1 = -std::numeric_limits<double>::infinity();
    st.jah2 = -std::numeric_limits<double>::infinity();
  }
  for (const auto& p : trace.points) {
    st.jah1 = std::max(st.jah1, p.gpl - p.ml);
    st.jah2 = std::max(st.jah2, p.zeta);
    violations += p.violations;
  }
  if (trace.ml_cell_count > 0 && !trace.points.empty())
    st.pct_violation = 100.0 * static_cast<double>(violations) /
                       (static_cast<double>(trace.points.size()) * trace.ml_cell_count);
  st.throughput = trace.throughput;
  return st;
}

void EpisodeTrace::write_csv(std::ostream& out) const {
  size_t n_tolls = tolls.empty() ? 0 : tolls.front().tolls.size();
  out << "tollrl-trace v1\n";
  out << "ml_cells," << ml_cell_count << "\n";
  out << "throughput," << num(throughput) << "\n";
  out << "penalty," << num(penalty) << "\n";
  out << "tolls," << tolls.size() << "," << n_tolls << "\n";
  out << "k,reward,revenue,tstt";
  for (size_t j = 0; j < n_tolls; ++j) out << ",beta_" << j;
  out << "\n";
  for (const auto& r : tolls) {
    out << r.k << "," << num(r.reward) << "," << num(r.revenue) << "," << num(r.tstt);
    for (double b : r.tolls) out << "," << num(b);
    out << "\n";
  }
  out << "points," << points.size() << "\n";
  out << "t,gpl,ml,zeta,violations,queue\n";
  for (const auto& p : points)
    out << p.t << "," << num(p.gpl) << "," << num(p.ml) << "," << num(p.zeta) << "," << p.violations << ","
        << num(p.queue) << "\n";
}

EpisodeTrace EpisodeTrace::read_csv(std::istream& in) {
  auto next = [&in]() {
    std::string line;
    do {
      if (!std::getline(in, line)) throw SimulationError("Parse", "truncated trace");
    } while (!line.empty() && line[0] == '#');
    return split(line);
  };
  auto value = [&](const char* key) {
    auto row = next();
    if (row.size() < 2 || row[0] != key) throw SimulationError("Parse", std::string("trace missing ") + key);
    return row;
  };
  EpisodeTrace tr;
  if (next().at(0) != "tollrl-trace v1") throw SimulationError("Parse", "not a trace file");
  tr.ml_cell_count = std::stoi(value("ml_cells")[1]);
  tr.throughput = std::stod(value("throughput")[1]);
  tr.penalty = std::stod(value("penalty")[1]);
  auto th = value("tolls");
  size_t n_rows = std::stoul(th[1]), n_tolls = std::stoul(th.at(2));
  next();
  for (size_t i = 0; i < n_rows; ++i) {
    auto row = next();
    if (row.size() != 4 + n_tolls) throw SimulationError("Parse", "bad toll row");
    TollRow r{std::stoi(row[0]), {}, std::stod(row[1]), std::stod(row[2]), std::stod(row[3])};
    for (size_t j = 0; j < n_tolls; ++j) r.tolls.push_back(std::stod(row[4 + j]));
    tr.tolls.push_back(std::move(r));
  }
  size_t n_points = std::stoul(value("points")[1]);
  next();
  for (size_t i = 0; i < n_points; ++i) {
    auto row = next();
    if (row.size() != 6) throw SimulationError("Parse", "bad point row");
    tr.points.push_back(
        {std::stoi(row[0]), std::stod(row[1]), std::stod(row[2]), std::stod(row[3]), std::stoi(row[4]), std::stod(row[5])});
  }
  return tr;
}

void write_episode_csv(std::ostream& out, const EpisodeTrace& trace) {
  size_t n = trace.tolls.empty() ? 0 : trace.tolls.front().tolls.size();
  out << "k";
  for (size_t j = 0; j < n; ++j) out << ",beta_" << j;
  out << ",reward,cum_revenue,cum_tstt\n";
  double rev = 0.0, tstt = 0.0;
  for (const auto& r : trace.tolls) {
    rev += r.revenue;
    tstt += r.tstt;
    out << r.k;
    for (double b : r.tolls) out << "," << num(b);
    out << "," << num(r.reward) << "," << num(rev) << "," << num(tstt) << "\n";
  }
}

void write_cell_trace(std::ostream& out, const Scenario& s, const std::vector<std::vector<double>>& snapshots) {
  const int nz = s.n_classes();
  out << "t,cell_id,total,jam_fraction";
  for (int z = 0; z < nz; ++z) out << ",x" << z;
  out << "\n";
  for (size_t t = 0; t < snapshots.size(); ++t) {
    for (size_t c = 0; c < s.graph.cells.size(); ++c) {
      const double* x = snapshots[t].data() + c * nz;
      double total = 0.0;
      for (int z = 0; z < nz; ++z) total += x[z];
      out << t << "," << s.graph.cells[c].id.code() << "," << num(total) << ","
          << num(total / s.graph.cells[c].jam_vehicles);
      for (int z = 0; z < nz; ++z) out << "," << num(x[z]);
      out << "\n";
    }
  }
}

}  // namespace tollrl
